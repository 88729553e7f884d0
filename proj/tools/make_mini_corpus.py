#!/usr/bin/env python3
# Copyright 2026 The eyebench Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the synthetic mini corpus under data/mini (deterministic)."""

import json
import pathlib
import random
import sys

JOURNALS = [
    "Ophthalmology", "Retina", "JAMA Ophthalmology", "Eye",
    "British Journal of Ophthalmology", "American Journal of Ophthalmology",
]

CONDITIONS = [
    ("primary open-angle glaucoma", "intraocular pressure", "latanoprost"),
    ("neovascular age-related macular degeneration", "central subfield thickness",
     "aflibercept"),
    ("diabetic macular edema", "best-corrected visual acuity", "ranibizumab"),
    ("retinal vein occlusion", "macular thickness", "bevacizumab"),
    ("keratoconus", "maximum keratometry", "corneal cross-linking"),
    ("uveitis", "anterior chamber cell grade", "adalimumab"),
    ("central serous chorioretinopathy", "subretinal fluid height",
     "half-dose photodynamic therapy"),
    ("pseudoexfoliation syndrome", "zonular stability", "capsular tension rings"),
    ("retinopathy of prematurity", "plus disease incidence", "laser photocoagulation"),
    ("thyroid eye disease", "proptosis", "teprotumumab"),
]

SYMPTOMS = ["blurred vision", "eye pain", "photophobia", "floaters",
            "redness", "diplopia", "a curtain over the visual field"]


def case_report(rng, i):
    cond, measure, therapy = rng.choice(CONDITIONS)
    age = rng.randint(19, 88)
    sex = rng.choice(["man", "woman"])
    eye = rng.choice(["right", "left"])
    va = rng.choice(["20/40", "20/60", "20/200", "counting fingers"])
    body = (
        f"A {age}-year-old {sex} presented with {rng.choice(SYMPTOMS)} in the {eye} eye "
        f"for {rng.randint(2, 30)} days. Visual acuity was {va} in the affected eye. "
        f"Examination and imaging were consistent with {cond}; {measure} was recorded "
        f"at baseline. The patient was treated with {therapy} and followed for "
        f"{rng.randint(3, 24)} months. At the final visit the {measure} had improved "
        f"and vision was stable."
    )
    return {"id": f"case-{i:03d}", "kind": "case_report",
            "title": f"{cond.capitalize()} in a {age}-year-old {sex}",
            "body": body, "source_ref": f"synthetic:case:{i}"}


def abstract(rng, i):
    cond, measure, therapy = rng.choice(CONDITIONS)
    n = rng.randint(40, 900)
    delta = round(rng.uniform(0.5, 9.5), 1)
    body = " ".join([
        f"Purpose: To evaluate {therapy} in patients with {cond}.",
        f"Methods: This retrospective study included {n} eyes followed for "
        f"{rng.randint(6, 36)} months.",
        f"Results: Mean {measure} changed by {delta} units from baseline (P = "
        f"{rng.choice(['.001', '.02', '.04', '.31'])}).",
        f"Adverse events were {rng.choice(['rare', 'uncommon', 'mild and transient'])}.",
        f"Conclusions: {therapy.capitalize()} was associated with improved {measure} "
        f"in {cond}.",
    ])
    return {"id": f"abs-{i:03d}", "kind": "abstract",
            "title": f"{therapy.capitalize()} for {cond}",
            "journal": rng.choice(JOURNALS), "body": body,
            "source_ref": f"synthetic:abstract:{i}"}


def study_item(rng, i):
    cond, measure, therapy = rng.choice(CONDITIONS)
    style = i % 3
    if style == 0:
        others = [c for c in CONDITIONS if c[2] != therapy]
        options = [therapy] + [c[2] for c in rng.sample(others, 3)]
        rng.shuffle(options)
        return {"id": f"study-{i:03d}", "kind": "study_item",
                "question": f"Which treatment is most commonly used for {cond}?",
                "options": options, "answer": therapy}
    if style == 1:
        question = f"In {cond}, the key outcome measure is {measure}."
        start = question.index(measure)
        return {"id": f"study-{i:03d}", "kind": "study_item", "question": question,
                "cloze_spans": [[start, start + len(measure)]], "answer": measure}
    return {"id": f"study-{i:03d}", "kind": "study_item",
            "question": f"Which outcome is used to monitor {cond}?",
            "answer": f"{measure.capitalize()} is monitored at every visit."}


def external_long_form(rng, i):
    cond, measure, therapy = rng.choice(CONDITIONS)
    return {"id": f"lf-{i:03d}",
            "question": f"How is {cond} managed and what should be monitored?",
            "answer": f"{cond.capitalize()} is commonly managed with {therapy}, and "
                      f"{measure} should be monitored during follow-up."}


def external_mcq(rng, i):
    cond, measure, therapy = rng.choice(CONDITIONS)
    others = [c for c in CONDITIONS if c[1] != measure]
    options = [measure] + [c[1] for c in rng.sample(others, 3)]
    rng.shuffle(options)
    return {"id": f"emcq-{i:03d}",
            "question": f"Which measurement is most relevant when following {cond}?",
            "options": options, "answer": measure}


def humaneval_sample(rng, i, models):
    cond, measure, therapy = rng.choice(CONDITIONS)
    group = "ehr_summarization" if i % 2 == 0 else "clinical_qa"
    note = (f"Patient with {cond}. {measure.capitalize()} recorded at each visit. "
            f"Started on {therapy}.")
    responses = {
        m: f"Summary ({k}): {cond} treated with {therapy}; follow {measure}."
        for k, m in enumerate(models)
    }
    return {"sample_id": f"he-{i:02d}", "task_group": group, "note": note,
            "responses": responses}


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main(out):
    out = pathlib.Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20260101)
    write_jsonl(out / "case_reports.jsonl", [case_report(rng, i) for i in range(24)])
    write_jsonl(out / "abstracts.jsonl", [abstract(rng, i) for i in range(150)])
    write_jsonl(out / "study_items.jsonl", [study_item(rng, i) for i in range(300)])
    write_jsonl(out / "external_long_form.jsonl",
                [external_long_form(rng, i) for i in range(12)])
    write_jsonl(out / "external_mcq.jsonl", [external_mcq(rng, i) for i in range(12)])
    models = ["leme-mock", "llama-mock", "eye-llama-mock"]
    write_jsonl(out / "humaneval_samples.jsonl",
                [humaneval_sample(rng, i, models) for i in range(8)])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/mini")

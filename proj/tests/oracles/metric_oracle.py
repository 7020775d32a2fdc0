# Copyright 2026 The SMF Rewrite Authors. All Rights Reserved.
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

"""Reference scores for the BLEU and ROUGE-L tests.

Unsmoothed corpus BLEU comes from sacrebleu. The smoothed variant and the
per-pair numbers are computed here from the textbook formulas, and ROUGE-L
precision/recall come from the rouge_score package. Output is written to
tests/fixtures/metric_oracle.json.
"""

import json
import math
import pathlib
from collections import Counter

import sacrebleu
from rouge_score import rouge_scorer

PAIRS = [
    ("the cat sat", "the cat sat down"),
    ("yes , the dell s2721 monitor has a camera .", "yes , the dell s2721 monitor has a camera ."),
    ("no , the dell s2721 monitor does not have a camera .", "no , the dell s2721 monitor does not have a camera ."),
    ("yes , the dell monitor has a camera .", "yes , the dell s2721 monitor has a camera ."),
    ("no , the lodge l8sk3 skillet does not work with a gas stove .",
     "no , the lodge l8sk3 skillet does not work with an induction cooktop ."),
    ("yes , you can install zoom on the samsung a20 phone .", "yes , you can install snapchat on the samsung a20 phone ."),
    ("no , the yeti tundra cooler does not have a drain plug . but it has a cup holder instead .",
     "no , the yeti tundra cooler does not have a cup holder . but it has a drain plug instead ."),
    ("yes , the osprey atmos backpack has a hip belt . also , it has a mesh pocket .",
     "yes , the osprey atmos backpack has a hip belt . also , it has a rain fly ."),
    ("yes , the ninja bl610 blender works with frozen fruit if it is the deluxe model .",
     "yes , you can make smoothies in the ninja bl610 blender if it is the deluxe model ."),
    ("a b c d", "a c d e"),
    ("the the the the", "the cat is on the mat"),
    ("completely unrelated words here", "no , the kettle does not have a timer ."),
    ("yes", "yes , the petzl actik headlamp has a red light mode ."),
    ("no , it does not .", "no , the garmin etrex gps unit does not work with a solar panel ."),
    ("yes , the sony x300 speaker works with a car charger . you can use it with a stylus pen .",
     "yes , the sony x300 speaker works with a car charger . you can use it with a stylus pen ."),
    ("no , you cannot cook pasta in the lodge l8sk3 skillet .", "no , you cannot cook eggs in the lodge l8sk3 skillet ."),
    ("yes , the instant duo pressure cooker has a timer .",
     "yes , the instant duo pressure cooker has a glass lid . also , it has a timer ."),
    ("yes , the acer c720 laptop has a touchscreen if it is the pro model .",
     "yes , the acer c720 laptop has a touchscreen if it is the pro model ."),
    ("no , the helinox zero chair does not have a cup holder .", "yes , the helinox zero chair has a cup holder ."),
    ("yes , the coleman sundome tent has a rain fly . also , it has a carrying case . also , it has a ground tarp .",
     "yes , the coleman sundome tent has a rain fly ."),
    ("but it has a timer instead", "no , the oxo brew kettle does not have a pour spout . but it has a timer instead ."),
    ("yes , you can keep ice in the yeti tundra cooler .", "yes , you can keep ice in the yeti tundra cooler ."),
    ("yes yes yes , , , . . .", "yes , the amazon k10 tablet has a usb port ."),
    ("no , the lenovo t14 laptop does not have a backlit keyboard . you can use it with a wireless mouse .",
     "no , the lenovo t14 laptop does not have a backlit keyboard ."),
    ("the screen has full touchscreen function", "dell laptop comes with full touchscreen ."),
]

ROUGE_BETA = 1.2


def ngram_counts(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(hyp, ref):
    matches, totals = [], []
    for n in range(1, 5):
        h, r = ngram_counts(hyp, n), ngram_counts(ref, n)
        matches.append(sum(min(c, r[g]) for g, c in h.items()))
        totals.append(max(len(hyp) - n + 1, 0))
    return matches, totals, len(hyp), len(ref)


def bleu_from(matches, totals, hyp_len, ref_len, smooth):
    if hyp_len == 0:
        return 0.0
    logs = []
    for n in range(4):
        if matches[n] > 0:
            p = matches[n] / totals[n]
        elif smooth and n > 0:
            p = 1.0 / (totals[n] + 1)
        else:
            return 0.0
        logs.append(math.log(p))
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(sum(logs) / 4.0)


def corpus(pairs, smooth):
    m, t, hl, rl = [0] * 4, [0] * 4, 0, 0
    for hyp, ref in pairs:
        a, b, c, d = bleu_stats(hyp.split(), ref.split())
        m = [x + y for x, y in zip(m, a)]
        t = [x + y for x, y in zip(t, b)]
        hl += c
        rl += d
    return bleu_from(m, t, hl, rl, smooth)


class SpaceTokenizer:
    def tokenize(self, text):
        return text.split()


def main():
    scorer = rouge_scorer.RougeScorer(["rougeL"], tokenizer=SpaceTokenizer())
    rows = []
    for hyp, ref in PAIRS:
        s = scorer.score(ref, hyp)["rougeL"]
        p, r = s.precision, s.recall
        b2 = ROUGE_BETA ** 2
        f = 0.0 if p == 0 or r == 0 else (1 + b2) * p * r / (r + b2 * p)
        a, b, c, d = bleu_stats(hyp.split(), ref.split())
        rows.append({
            "hypothesis": hyp,
            "reference": ref,
            "rouge_l_precision": p,
            "rouge_l_recall": r,
            "rouge_l_f": f,
            "sentence_bleu_smoothed": bleu_from(a, b, c, d, True),
        })

    hyps = [h for h, _ in PAIRS]
    refs = [r for _, r in PAIRS]
    sacre = sacrebleu.corpus_bleu(hyps, [refs], tokenize="none", smooth_method="none", force=True)
    out = {
        "rouge_beta": ROUGE_BETA,
        "corpus_bleu_unsmoothed_sacrebleu": sacre.score,
        "corpus_bleu_unsmoothed_formula": corpus(PAIRS, False),
        "corpus_bleu_smoothed": corpus(PAIRS, True),
        "pairs": rows,
    }
    assert abs(out["corpus_bleu_unsmoothed_sacrebleu"] - out["corpus_bleu_unsmoothed_formula"]) < 1e-6
    path = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "metric_oracle.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {path}: sacrebleu {sacre.score:.4f}, smoothed {out['corpus_bleu_smoothed']:.4f}")


if __name__ == "__main__":
    main()

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


import json
import os
import shutil
import subprocess

import pytest

import smf_rewrite as smf

SCREEN_Q = "(SQ (VBZ Does) (NP (DT this) (NN speaker)) (VP (VB have) (NP (DT a) (NN touchscreen))) (. ?))"


def test_tokenize_round_trip():
    tokens = smf.tokenize("Yes, it has a touchscreen.")
    assert tokens == ["yes", ",", "it", "has", "a", "touchscreen", "."]
    assert smf.detokenize(tokens) == "yes, it has a touchscreen."


def test_extract_constraints():
    cons = smf.extract_constraints(SCREEN_Q)
    assert [(c["text"], c["label"], c["start"], c["end"]) for c in cons] == [
        ("have a touchscreen", "VP", 3, 6)
    ]
    with pytest.raises(smf.SmfError):
        smf.extract_constraints("(SQ (VBZ Does)")


def test_style_row():
    rows = smf.flag_trace(
        ["We", "can", "ship", "to", "Brazil"], [], [],
        ["Dell", "XPS", "can", "be", "shipped", "by", "us", "to", "Brazil", "."],
        mode="lexical", style=True)
    assert rows[0] == [2, 2, 2, 2, 2, 2, 2, 1, 1, 1, 1]
    assert all(r == [0] * 11 for r in rows[1:])


def test_lexical_flip_column():
    rows = smf.flag_trace(["has", "a", "camera"], [["a", "camera"]], [[1, 2]],
                          ["it", "has", "a", "camera"], mode="lexical")
    assert rows == [[0] * 5, [1, 1, 1, 1, 2], [1, 1, 1, 1, 2]]


def test_threshold_validation():
    with pytest.raises(smf.SmfError, match="InvalidArgument"):
        smf.flag_trace(["a"], [], [], [], threshold_a=1.5)


def test_similarity():
    assert smf.similarity(["a", "camera"], ["a", "camera"]) == pytest.approx(1.0)
    assert 0.0 <= smf.similarity(["a", "camera"], ["the", "battery"]) < 0.5


def test_generate_is_deterministic():
    a = smf.generate(60, seed=3)
    b = smf.generate(60, seed=3)
    assert a == b and len(a) == 60
    assert {"id", "question", "answer", "context", "target", "category", "split"} <= set(a[0])
    assert smf.generate(60, seed=4) != a


def test_metrics():
    ref = smf.tokenize("the cat sat down")
    assert smf.bleu([ref], [ref]) == pytest.approx(100.0)
    assert smf.bleu([["the", "cat", "sat"]], [ref]) == pytest.approx(71.65313105737893)
    assert smf.rouge_l(["a", "b", "c", "d"], ["a", "c", "d", "e"]) == pytest.approx(0.75)


@pytest.mark.skipif(not (os.environ.get("SMF_BIN") or shutil.which("smf")), reason="smf binary not available")
def test_rewriter(tmp_path):
    exe = os.environ.get("SMF_BIN") or shutil.which("smf")
    subprocess.run([exe, "datagen", "--out", str(tmp_path / "data"), "--n", "60"], check=True,
                   capture_output=True)
    subprocess.run([exe, "train", "--train", str(tmp_path / "data" / "train.jsonl"), "--out",
                    str(tmp_path / "m"), "--epochs", "1", "--dim", "16", "--heads", "2", "--ff-dim", "32",
                    "--mode", "lexical"], check=True, capture_output=True)
    rw = smf.Rewriter(str(tmp_path / "m" / "model.ckpt"))
    assert rw.mode == "lexical"
    inst = json.loads((tmp_path / "data" / "train.jsonl").read_text().splitlines()[0])
    greedy = rw.rewrite(inst, decoder="greedy", max_len=10)
    assert greedy["id"] == inst["id"]
    assert len(greedy["output_tokens"]) <= 10
    assert len(greedy["flags"][0]) == len(greedy["output_tokens"]) + 1
    cbs = rw.rewrite(inst, decoder="cbs", beam=4, max_len=24)
    if cbs["finished"]:
        assert cbs["constraints_satisfied"] == len(smf.extract_constraints(inst["question_parse"],
                                                                           inst["answer_parse"]))
    assert rw.rewrite(inst, decoder="greedy", max_len=10) == greedy
    with pytest.raises(smf.SmfError):
        rw.rewrite(inst, decoder="sideways")
    with pytest.raises(smf.SmfError):
        smf.Rewriter(str(tmp_path / "missing.ckpt"))

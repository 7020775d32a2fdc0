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


"""Rewrite product answers into standalone statements with soft mention flags."""

from smf_rewrite._core import (
    Rewriter,
    SmfError,
    bleu,
    detokenize,
    extract_constraints,
    flag_trace,
    generate,
    rouge_l,
    similarity,
    tokenize,
)

__all__ = [
    "Rewriter",
    "SmfError",
    "bleu",
    "detokenize",
    "extract_constraints",
    "flag_trace",
    "generate",
    "rouge_l",
    "similarity",
    "tokenize",
]
__version__ = "0.1.0"

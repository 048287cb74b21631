# Copyright 2026 The genmatch Authors.
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

"""Generalized full matching."""

from ._genmatch import (
    Constraints,
    Infeasible,
    InvalidInput,
    Matching,
    MatchOptions,
    Metric,
    Sample,
    att_estimate,
    distance,
    evaluate_objective,
    full_match,
    generate_sample,
    implied_weights,
    optimal_matching,
    report,
    simulate,
)

__all__ = [
    "Constraints",
    "Infeasible",
    "InvalidInput",
    "Matching",
    "MatchOptions",
    "Metric",
    "Sample",
    "att_estimate",
    "distance",
    "evaluate_objective",
    "full_match",
    "generate_sample",
    "implied_weights",
    "optimal_matching",
    "report",
    "simulate",
]

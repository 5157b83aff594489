# Copyright 2026 The gpcd Authors
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

"""Python access to the gpcd experiment pipeline and saved estimators."""

from ._gpcd import (
    MODEL_FORMAT_VERSION,
    CoverageError,
    Episode,
    Error,
    Estimator,
    Experiment,
    FormatError,
    Trajectory,
    VersionMismatchError,
    detect_exit_code,
    nmse,
    read_trajectory,
    sha256_file,
)

__all__ = [
    "MODEL_FORMAT_VERSION",
    "CoverageError",
    "Episode",
    "Error",
    "Estimator",
    "Experiment",
    "FormatError",
    "Trajectory",
    "VersionMismatchError",
    "detect_exit_code",
    "nmse",
    "read_trajectory",
    "sha256_file",
]

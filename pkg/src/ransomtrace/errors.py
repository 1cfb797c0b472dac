# Copyright 2026 The ransomtrace Authors
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
#
"""Exception hierarchy shared by every ransomtrace module.

All errors derive from ``ValueError`` so code that already guards numeric
pipelines with ``except ValueError`` keeps working. The CLI maps the three
top-level families onto process exit codes.
"""


class RansomtraceError(ValueError):
    """Base class for all ransomtrace errors."""

    exit_code = 1


class ConfigError(RansomtraceError):
    """An invalid run, model or training configuration."""

    exit_code = 2


class DataError(RansomtraceError):
    """Input data cannot be processed as requested."""

    exit_code = 3


class SchemaError(DataError):
    """Unreadable or ragged CSV, missing label column or unmapped label."""


class FitError(DataError):
    """A column cannot be fitted (all missing, empty, non-finite)."""


class SplitError(DataError):
    """Split fractions or class counts do not allow a stratified split."""


class DomainError(DataError):
    """A transform was applied outside its mathematical domain."""


class UndefinedSkewError(DataError):
    """Skewness of a zero-variance or too-short sample."""


class ExplainError(DataError):
    """An explanation request cannot be served."""


class EvaluationError(DataError):
    """Evaluation inputs are inconsistent or degenerate."""


class NumericError(RansomtraceError):
    """A non-finite value appeared in parameters, logits or predictions."""

    exit_code = 4

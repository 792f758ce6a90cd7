"""Exception hierarchy.

Every domain error carries a module-qualified ``code`` such as
``model:DuplicateId`` so the CLI can report it on a single line.
"""

from __future__ import annotations


class ResolutionError(Exception):
    """Base class for all domain errors raised by this package."""

    module = "core"

    @property
    def code(self) -> str:
        return f"{self.module}:{type(self).__name__}"


# --- model ---------------------------------------------------------------

class ModelError(ResolutionError):
    module = "model"


class DuplicateId(ModelError):
    def __init__(self, id_: str):
        super().__init__(f"duplicate id {id_!r}")
        self.id = id_


class SchemaError(ModelError):
    pass


class FieldError(ModelError):
    def __init__(self, row: int, field: str, detail: str = ""):
        msg = f"row {row}: bad value for field {field!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.row = row
        self.field = field


class DanglingReference(ModelError):
    def __init__(self, id_: str):
        super().__init__(f"unknown id {id_!r}")
        self.id = id_


class ConflictingLabel(ModelError):
    def __init__(self, pair: tuple[str, str]):
        super().__init__(f"pair {pair!r} labeled both + and -")
        self.pair = pair


class FileNotFound(ModelError):
    def __init__(self, path):
        super().__init__(f"no such file: {path}")
        self.path = str(path)


# --- combiner ------------------------------------------------------------

class CombinerError(ResolutionError):
    module = "combiner"


class DegenerateFeature(CombinerError):
    def __init__(self, name: str):
        super().__init__(f"feature {name!r} is absent in every example")
        self.name = name


class DegenerateLabels(CombinerError):
    pass


class TrainingFailure(CombinerError):
    pass


# --- matchers ------------------------------------------------------------

class MatcherError(ResolutionError):
    module = "matchers"


class InstanceTooLarge(MatcherError):
    pass


# --- synth / cli ---------------------------------------------------------

class ConfigError(ResolutionError):
    module = "synth"


class UsageError(ResolutionError):
    module = "cli"


class InvalidConfig(ResolutionError):
    module = "cli"

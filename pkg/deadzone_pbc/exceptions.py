from typing import TYPE_CHECKING, Any, Optional

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .cli.fields import ArgumentField
    from .validators import ArgumentValidator


class DimensionError(ValueError):
    def __init__(self, message: str, name: Optional[str] = None) -> None:
        super().__init__(message)
        self.name = name

    def __reduce__(self) -> Any:
        return (self.__class__, (self.args[0], self.name))

    def __str__(self) -> str:
        if self.name is not None:
            return f"'{self.name}' - {self.args[0]}"
        return f"{self.args[0]}"


class ModelError(ValueError):
    def __init__(self, message: str, q: Optional[Any] = None) -> None:
        super().__init__(message)
        self.q = None if q is None else np.array(q, dtype=float)

    def __reduce__(self) -> Any:
        return (self.__class__, (self.args[0], self.q))

    def __str__(self) -> str:
        if self.q is not None:
            return f"{self.args[0]} at q = {np.array2string(self.q, precision=6)}"
        return f"{self.args[0]}"


class ValidationError(ValueError):
    def __init__(self, message: str, validator: Optional["ArgumentValidator[Any]"] = None) -> None:
        self.validator = validator.__class__.__name__ if validator is not None else None
        self.message = message
        super().__init__(message)


class ValidatorInitError(TypeError):
    def __init__(self, message: str, validator: Optional["ArgumentValidator[Any]"] = None) -> None:
        if validator:
            message = f"{validator.__class__.__name__} - {message}"
        super().__init__(message)


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(message)
        self.key = key

    def __reduce__(self) -> Any:
        return (self.__class__, (self.args[0], self.key))

    def __str__(self) -> str:
        if self.key is not None:
            return f"'{self.key}' - {self.args[0]}"
        return f"{self.args[0]}"


class ScenarioError(ValueError):
    def __init__(self, message: str, location: Optional[str] = None) -> None:
        super().__init__(message)
        self.location = location

    def __reduce__(self) -> Any:
        return (self.__class__, (self.args[0], self.location))

    def __str__(self) -> str:
        if self.location is not None:
            return f"'{self.location}' - {self.args[0]}"
        return f"{self.args[0]}"


class AnalysisError(ValueError):
    pass


class IntegrationError(RuntimeError):
    def __init__(self, message: str, time: float, step: int, norm: float) -> None:
        super().__init__(message)
        self.time = time
        self.step = step
        self.norm = norm

    def __reduce__(self) -> Any:
        # Rebuilt with all fields when results cross a process boundary
        return (self.__class__, (self.args[0], self.time, self.step, self.norm))

    def __str__(self) -> str:
        return f"{self.args[0]} (t = {self.time:.6g} s, step {self.step}, last |x| = {self.norm:.6g})"


class ArgumentError(TypeError):
    def __init__(self, message: str, field: Optional["ArgumentField"] = None) -> None:
        super().__init__(message)
        self.field = field

    def __str__(self) -> str:
        if self.field is not None:
            return f"'{self.field._name}' - {self.args[0]}"
        return f"{self.args[0]}"

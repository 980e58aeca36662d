"""Small report container shared by every validator in the package."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class Violation:
    kind: str
    detail: str = ""
    where: Any = None

    def to_json(self):
        out = {"kind": self.kind, "detail": self.detail}
        if self.where is not None:
            out["where"] = _jsonable(self.where)
        return out


@dataclass
class Report:
    """A list of violations plus free-form numeric data.

    A report is ``ok`` when it carries no violations.  ``data`` holds the
    quantitative side of a check (profiles, distortions, constants) so callers
    can assert on numbers instead of parsing messages.
    """

    name: str = ""
    violations: list[Violation] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str = "", where: Any = None) -> None:
        self.violations.append(Violation(kind, detail, where))

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def merge(self, other: "Report", prefix: str = "") -> "Report":
        for v in other.violations:
            self.violations.append(Violation(prefix + v.kind, v.detail, v.where))
        for k, v in other.data.items():
            self.data[prefix + k] = v
        return self

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "violations": [v.to_json() for v in self.violations],
            "data": _jsonable(self.data),
        }

    def __bool__(self) -> bool:
        return self.ok


def _jsonable(x):
    import numpy as np

    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = sorted(x, key=repr) if isinstance(x, (set, frozenset)) else x
        return [_jsonable(v) for v in items]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x

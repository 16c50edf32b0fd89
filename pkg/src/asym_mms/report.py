"""Structured pass/fail reports returned by the ``*_check`` functions."""

from dataclasses import dataclass, field

import numpy as np


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


@dataclass
class CheckReport:
    """Named checks, each with an outcome and supporting numbers.

    ``failures`` holds one record per violated instance; ``flags`` holds
    diagnostics that are reported but do not fail the check.
    """

    name: str
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.failures and all(c.get("ok", True) for c in self.checks.values())

    def add(self, key, ok, **values):
        self.checks[key] = {"ok": bool(ok), **values}
        return self

    def to_dict(self):
        return _plain({
            "name": self.name,
            "ok": self.ok,
            "checks": self.checks,
            "failures": self.failures,
            "flags": self.flags,
            "data": self.data,
        })

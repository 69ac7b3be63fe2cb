from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum


class Method(str, Enum):
    EXACT_ENUM = "exact-enum"
    LOWER_BOUND = "lower-bound"
    QUADRATIC = "quadratic"
    UNQUANTIZED_QUADRATIC = "unquantized-quadratic"
    IID_CLOSED_FORM = "iid-closed-form"
    UPPER_BOUND_PROP1 = "upper-bound-prop1"


@dataclass(frozen=True)
class RateReport:
    """A rate in nats, per block of ``block_len`` uses when ``per_block``."""

    value: float
    std_error: float
    method: Method
    snr: float
    per_block: bool
    block_len: int = 1

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")
        for name in ("value", "std_error", "snr"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "method", Method(self.method))

    def per_symbol(self) -> "RateReport":
        if not self.per_block:
            return self
        n = self.block_len
        return replace(self, value=self.value / n, std_error=self.std_error / n, per_block=False)

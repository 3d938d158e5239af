"""CNOT overhead of turning a circuit for U into a circuit for controlled-U.

Conventional route: every gate of U gets controlled, costing at least 2p+q
extra CNOTs (decompositions land between 3p+q and 6p+2q in total).
Hilbert-space extension route: 4n extra CNOTs, whatever U is.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable

SHOR_COEFF = 72  # p + q for modular exponentiation on n qubits, roughly 72 n^3


@dataclass(frozen=True)
class ResourceProfile:
    n: int
    p: int  # CNOTs in U's circuit
    q: int  # single-qubit gates in U's circuit

    def __post_init__(self):
        for name in ("n", "p", "q"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")


def conventional_cost(profile: ResourceProfile) -> tuple[int, tuple[int, int]]:
    """(minimum extra CNOTs, (low, high) of the decomposed total)."""
    p, q = profile.p, profile.q
    return 2 * p + q, (3 * p + q, 6 * p + 2 * q)


def extension_cost(profile: ResourceProfile) -> int:
    return 4 * profile.n


def shor_profile(n: int, p_fraction: float = 0.5) -> ResourceProfile:
    """Profile with p + q = 72 n^3; the p/q split is an assumption (default even)."""
    if not 0.0 <= p_fraction <= 1.0:
        raise ValueError("p_fraction must lie in [0, 1]")
    total = SHOR_COEFF * n ** 3
    p = int(round(total * p_fraction))
    return ResourceProfile(n, p, total - p)


@dataclass(frozen=True)
class ComparisonRow:
    n: int
    p: int
    q: int
    conventional_min: int
    conventional_low: int
    conventional_high: int
    extension: int
    ratio: float | None  # conventional_min / extension; None when n == 0
    extension_wins: bool
    split_assumed: bool

    def to_dict(self) -> dict:
        return dict(vars(self))


FIELDS = tuple(ComparisonRow.__dataclass_fields__)


def compare_report(n_range: Iterable[int], pq_model="shor", p_fraction: float = 0.5) -> list[ComparisonRow]:
    """One row per n.  ``pq_model`` is "shor" or an explicit (p, q) pair."""
    ns = list(n_range)
    if not ns:
        raise ValueError("n_range is empty")
    rows = []
    for n in ns:
        if pq_model == "shor":
            prof, assumed = shor_profile(n, p_fraction), True
        else:
            p, q = pq_model
            prof, assumed = ResourceProfile(n, p, q), False
        cmin, (lo, hi) = conventional_cost(prof)
        ext = extension_cost(prof)
        rows.append(ComparisonRow(n, prof.p, prof.q, cmin, lo, hi, ext,
                                  cmin / ext if ext else None, ext < cmin, assumed))
    return rows


def crossover_n(p: int, q: int) -> int | None:
    """Largest n for which the extension is still cheaper at fixed (p, q), or None."""
    n = (2 * p + q - 1) // 4  # largest n with 4n < 2p + q
    return n if n >= 1 else None


def report_csv(rows: list[ComparisonRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in rows:
        w.writerow(["" if v is None else (f"{v:.12g}" if isinstance(v, float) else v)
                    for v in (getattr(r, f) for f in FIELDS)])
    return buf.getvalue()

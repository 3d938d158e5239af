"""Controlled operations by temporarily parking the target register in extra carrier levels.

Every target qubit lives on the two lowest levels of a larger carrier.  A
controlled level swap moves the whole register into the upper levels (the
"memory") for one control value; the operation only touches the qubit levels,
so the parked branch is left alone; a second swap brings it back.

Conventions
-----------
* The public contract is "op fires when the control is |1>".
* Internally the controlled X_a swap triggers on control |0>, so the |0>
  branch hides in memory while ``op`` acts on the qubit levels.
* With ``k`` controls the target carriers have ``2**(k+1)`` levels, split into
  banks of two; bank ``b`` (levels ``2b, 2b+1``) holds the register while the
  control register reads ``b``.  Bank 0 is the ordinary qubit subspace.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

from .operators import ATOL, CarrierState, DimensionMismatch, Operator


class ResidualPopulationError(ValueError):
    """Amplitude was left outside the qubit levels when it should have returned."""

    def __init__(self, leaked_weight: float):
        self.leaked_weight = leaked_weight
        super().__init__(f"residual memory population: weight {leaked_weight:.3e} outside qubit levels")


_XA = np.array([[0, 0, 1, 0],
                [0, 0, 0, 1],
                [1, 0, 0, 0],
                [0, 1, 0, 0]], dtype=complex)


def xa_gate() -> Operator:
    """The level swap |0><->|2>, |1><->|3> on a four-level carrier."""
    return Operator(_XA, (4,), (4,))


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def bank_isometry(n: int, bank: int, carrier_dim: int) -> np.ndarray:
    """Matrix (carrier_dim**n x 2**n) copying n qubits into bank ``bank`` of every carrier."""
    single = np.zeros((carrier_dim, 2), dtype=complex)
    single[2 * bank, 0] = single[2 * bank + 1, 1] = 1.0
    return _kron_all([single] * n)


def embedding_isometry(dims: Sequence[int]) -> np.ndarray:
    """Isometry from the all-qubit register into ``dims`` (qubit levels of each carrier)."""
    mats = []
    for d in dims:
        if d < 2:
            raise DimensionMismatch(f"carrier dimension {d} cannot host a qubit")
        m = np.zeros((d, 2), dtype=complex)
        m[0, 0] = m[1, 1] = 1.0
        mats.append(m)
    return _kron_all(mats)


def embed(psi: CarrierState, carrier_dim: int = 4) -> CarrierState:
    """Copy each qubit onto levels {0, 1} of a ``carrier_dim``-level carrier."""
    if any(d != 2 for d in psi.dims):
        raise DimensionMismatch(f"embed expects qubits, got dims {psi.dims}")
    dims = (carrier_dim,) * len(psi.dims)
    return CarrierState(embedding_isometry(dims) @ psi.amplitudes, dims)


def extract(state: CarrierState, atol: float = ATOL) -> CarrierState:
    """Restrict every carrier to its qubit levels.

    Carriers that already are qubits (e.g. the control) pass through.  Raises
    ``ResidualPopulationError`` when more than ``atol`` of weight sits elsewhere.
    """
    iso = embedding_isometry(state.dims)
    kept = iso.conj().T @ state.amplitudes
    leaked = state.probability - float(np.vdot(kept, kept).real)
    if leaked > atol:
        raise ResidualPopulationError(leaked)
    return CarrierState(kept, (2,) * len(state.dims))


def _qubit_op(op: Operator) -> int:
    if op.dims_in != op.dims_out or any(d != 2 for d in op.dims_in):
        raise DimensionMismatch(f"expected a square operator on qubits, got {op.dims_in}->{op.dims_out}")
    return len(op.dims_in)


def _bank_block(ops: Sequence[np.ndarray], n: int, carrier_dim: int) -> np.ndarray:
    """Apply ops[b] to the register when every carrier sits in bank b; identity elsewhere."""
    size = carrier_dim ** n
    out = np.eye(size, dtype=complex)
    for b, m in enumerate(ops):
        iso = bank_isometry(n, b, carrier_dim)
        out += iso @ (m - np.eye(2 ** n)) @ iso.conj().T
    return out


def controlled_xa(n_targets: int) -> Operator:
    """X_a on every target carrier when the control is |0>, identity otherwise."""
    if n_targets < 1:
        raise ValueError("n_targets must be at least 1")
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    m = np.kron(p0, _kron_all([_XA] * n_targets)) + np.kron(p1, np.eye(4 ** n_targets))
    dims = (2,) + (4,) * n_targets
    return Operator(m, dims, dims)


def memory_guarded(op: Operator) -> Operator:
    """The middle stage: ``op`` on the qubit levels of the targets, identity on everything else."""
    n = _qubit_op(op)
    block = _bank_block([op.matrix], n, 4)
    dims = (2,) + (4,) * n
    return Operator(np.kron(np.eye(2), block), dims, dims)


def add_control(op: Operator, fire_on: int = 1) -> Operator:
    """Controlled version of ``op`` without decomposing it.

    Returns ``CX_a . (I (x) op|qubit + 1|memory) . CX_a`` on dims ``[2, 4, ..., 4]``.
    For every control amplitude pair and target state,
    ``alpha|0>embed(psi) + beta|1>embed(psi)`` maps to
    ``alpha|0>embed(psi) + beta|1>embed(op psi)``.  ``op`` may be non-unitary.
    ``fire_on=0`` flips the control polarity by conjugating with X on the control.
    """
    n = _qubit_op(op)
    cx = controlled_xa(n)
    out = cx @ memory_guarded(op) @ cx
    if fire_on == 1:
        return out
    if fire_on != 0:
        raise ValueError("fire_on must be 0 or 1")
    flip = Operator(np.kron(np.array([[0, 1], [1, 0]]), np.eye(4 ** n)), out.dims, out.dims)
    return flip @ out @ flip


def _bank_shift(k: int, n: int, carrier_dim: int) -> np.ndarray:
    """Controlled bank swap: control value j exchanges banks 0 and j on every carrier."""
    blocks = []
    for j in range(2 ** k):
        perm = np.arange(carrier_dim)
        perm[[0, 1, 2 * j, 2 * j + 1]] = perm[[2 * j, 2 * j + 1, 0, 1]]
        single = np.eye(carrier_dim, dtype=complex)[:, perm]
        proj = np.zeros((2 ** k, 2 ** k))
        proj[j, j] = 1.0
        blocks.append(np.kron(proj, _kron_all([single] * n)))
    return sum(blocks)


def add_multi_control(ops: Sequence[Operator], k: int) -> Operator:
    """Select ``ops[j]`` by the value ``j`` of ``k`` control qubits.

    Target carriers have ``2**(k+1)`` levels.  A controlled bank swap parks the
    register in bank ``j``; the middle stage applies ``ops[b]`` to whatever
    sits in bank ``b``; the same swap brings the register home.  Output for
    control ``|j>`` and target ``psi`` is ``|j> (x) embed(ops[j] psi)``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(ops) != 2 ** k:
        raise DimensionMismatch(f"need exactly {2 ** k} operations for {k} controls, got {len(ops)}")
    n = _qubit_op(ops[0])
    for o in ops[1:]:
        if _qubit_op(o) != n:
            raise DimensionMismatch("all operations must act on the same number of qubits")
    carrier_dim = 2 ** (k + 1)
    shift = _bank_shift(k, n, carrier_dim)
    middle = np.kron(np.eye(2 ** k), _bank_block([o.matrix for o in ops], n, carrier_dim))
    dims = (2,) * k + (carrier_dim,) * n
    return Operator(shift @ middle @ shift, dims, dims)


def restrict_to_qubits(op: Operator) -> Operator:
    """Compress an operator on a carrier register to the embedded qubit subspace."""
    iso = embedding_isometry(op.dims)
    n = len(op.dims)
    return Operator(iso.conj().T @ op.matrix @ iso, (2,) * n, (2,) * n)


def textbook_controlled(ops: Sequence[Operator]) -> Operator:
    """Reference block-diagonal ``sum_j |j><j| (x) ops[j]`` built directly."""
    k = int(np.log2(len(ops)))
    n = _qubit_op(ops[0])
    size = 2 ** n
    m = np.zeros((2 ** k * size, 2 ** k * size), dtype=complex)
    for j, o in enumerate(ops):
        m[j * size:(j + 1) * size, j * size:(j + 1) * size] = o.matrix
    return Operator(m, (2,) * (k + n), (2,) * (k + n))


__all__ = [
    "ResidualPopulationError", "xa_gate", "embed", "extract", "controlled_xa",
    "add_control", "add_multi_control", "memory_guarded", "restrict_to_qubits",
    "textbook_controlled", "embedding_isometry", "bank_isometry",
]

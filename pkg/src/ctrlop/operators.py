"""Dense operators and state vectors over mixed-radix carrier registers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

ATOL = 1e-12


class DimensionMismatch(ValueError):
    """Raised when register dimensions of operands do not line up."""

    def __init__(self, detail: str = ""):
        msg = "dimension mismatch" + (f": {detail}" if detail else "")
        super().__init__(msg)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Operator:
    """Linear map between carrier registers; need not be unitary."""

    dims_in: tuple[int, ...]
    dims_out: tuple[int, ...]
    matrix: np.ndarray

    def __init__(self, matrix, dims_in: Sequence[int] | None = None,
                 dims_out: Sequence[int] | None = None):
        matrix = _frozen(matrix)
        if matrix.ndim != 2:
            raise DimensionMismatch("operator matrix must be two-dimensional")
        if dims_in is None:
            dims_in = _qubit_dims(matrix.shape[1])
        if dims_out is None:
            dims_out = dims_in if matrix.shape[0] == matrix.shape[1] else _qubit_dims(matrix.shape[0])
        dims_in, dims_out = tuple(int(d) for d in dims_in), tuple(int(d) for d in dims_out)
        if matrix.shape != (prod(dims_out), prod(dims_in)):
            raise DimensionMismatch(
                f"matrix shape {matrix.shape} does not match dims {dims_out} x {dims_in}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "dims_in", dims_in)
        object.__setattr__(self, "dims_out", dims_out)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def dims(self) -> tuple[int, ...]:
        if self.dims_in != self.dims_out:
            raise DimensionMismatch("operator is not square over a single register")
        return self.dims_in

    def is_unitary(self, atol: float = ATOL) -> bool:
        if self.dims_in != self.dims_out:
            return False
        m = self.matrix
        return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))) <= atol)

    def dagger(self) -> Operator:
        return Operator(self.matrix.conj().T, self.dims_out, self.dims_in)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            if self.dims_in != other.dims_out:
                raise DimensionMismatch(f"{self.dims_in} vs {other.dims_out}")
            return Operator(self.matrix @ other.matrix, other.dims_in, self.dims_out)
        if isinstance(other, CarrierState):
            if self.dims_in != other.dims:
                raise DimensionMismatch(f"{self.dims_in} vs {other.dims}")
            return CarrierState(self.matrix @ other.amplitudes, self.dims_out)
        return NotImplemented

    def __add__(self, other: Operator) -> Operator:
        self._check_same(other)
        return Operator(self.matrix + other.matrix, self.dims_in, self.dims_out)

    def __sub__(self, other: Operator) -> Operator:
        self._check_same(other)
        return Operator(self.matrix - other.matrix, self.dims_in, self.dims_out)

    def __mul__(self, scalar) -> Operator:
        return Operator(self.matrix * scalar, self.dims_in, self.dims_out)

    __rmul__ = __mul__

    def kron(self, other: Operator) -> Operator:
        return Operator(np.kron(self.matrix, other.matrix),
                        self.dims_in + other.dims_in, self.dims_out + other.dims_out)

    def _check_same(self, other: Operator) -> None:
        if (self.dims_in, self.dims_out) != (other.dims_in, other.dims_out):
            raise DimensionMismatch(f"{self.dims_in}->{self.dims_out} vs {other.dims_in}->{other.dims_out}")

    def allclose(self, other: Operator, atol: float = ATOL) -> bool:
        return self.shape == other.shape and bool(np.allclose(self.matrix, other.matrix, atol=atol, rtol=0))

    def to_dict(self) -> dict:
        d = {"dims": list(self.dims_in)}
        if self.dims_out != self.dims_in:
            d["dims_out"] = list(self.dims_out)
        d["re"] = self.matrix.real.tolist()
        d["im"] = self.matrix.imag.tolist()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> Operator:
        try:
            dims = [int(d) for d in data["dims"]]
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed operator JSON: {exc}") from exc
        if re.shape != im.shape:
            raise DimensionMismatch("re and im parts differ in shape")
        return cls(re + 1j * im, dims, data.get("dims_out", dims))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> Operator:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class CarrierState:
    """State vector over a register; post-selection may leave it sub-normalized."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amplitudes, dims: Sequence[int] | None = None):
        amplitudes = _frozen(np.ravel(amplitudes))
        if dims is None:
            dims = _qubit_dims(amplitudes.size)
        dims = tuple(int(d) for d in dims)
        if amplitudes.size != prod(dims):
            raise DimensionMismatch(f"{amplitudes.size} amplitudes for dims {dims}")
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "dims", dims)

    @property
    def probability(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> CarrierState:
        p = self.probability
        if p == 0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return CarrierState(self.amplitudes / np.sqrt(p), self.dims)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def kron(self, other: CarrierState) -> CarrierState:
        return CarrierState(np.kron(self.amplitudes, other.amplitudes), self.dims + other.dims)

    @classmethod
    def basis(cls, index: Sequence[int], dims: Sequence[int]) -> CarrierState:
        v = np.zeros(dims, dtype=complex)
        v[tuple(index)] = 1.0
        return cls(v.ravel(), dims)


def fidelity(a: CarrierState | np.ndarray, b: CarrierState | np.ndarray) -> float:
    """Overlap |<a|b>|^2 of the normalized vectors (global phase ignored)."""
    va = a.amplitudes if isinstance(a, CarrierState) else np.ravel(a)
    vb = b.amplitudes if isinstance(b, CarrierState) else np.ravel(b)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(np.vdot(va, vb)) ** 2 / (na * nb) ** 2)


def _qubit_dims(size: int) -> tuple[int, ...]:
    n = int(size).bit_length() - 1
    if size < 1 or 2 ** n != size:
        raise DimensionMismatch(f"size {size} is not a power of two; pass dims explicitly")
    return (2,) * n

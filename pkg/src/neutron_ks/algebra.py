"""Exact linear algebra on the spin (x) path two-qubit space.

Basis order is spin-major and fixed everywhere in the package::

    index 0: |up, I>    index 1: |up, II>
    index 2: |down, I>  index 3: |down, II>

so a product state is ``np.kron(spin_vector, path_vector)``. Spin-up and path I
are the +1 eigenvectors of the respective sigma_z.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from neutron_ks.errors import NonHermitian, NotNormalized

Axis = Literal["x", "y", "z", "id"]
Subsystem = Literal["spin", "path"]
Family = Literal["varphi", "phi"]

DIM = 4
EXACT_TOL = 1e-12
NORM_TOL = 1e-9
NORM_ERROR_TOL = 1e-6
IMAG_TOL = 1e-10

SQRT_HALF = 1.0 / np.sqrt(2.0)

_PAULI_2x2 = {
    "id": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)
PATH_I = np.array([1, 0], dtype=complex)
PATH_II = np.array([0, 1], dtype=complex)


def _finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} contains NaN or Inf")


@dataclass(frozen=True, eq=False)
class StateVector:
    """A (not necessarily normalized) ket in the 4-dim spin (x) path space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if a.shape != (DIM,):
            raise ValueError(f"expected {DIM} amplitudes, got {a.shape[0]}")
        _finite(a, "state")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def inner(self, other: StateVector) -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def normalized(self) -> StateVector:
        return StateVector(self.amplitudes / np.sqrt(self.norm_squared()))

    def allclose(self, other: StateVector, atol: float = EXACT_TOL) -> bool:
        return bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0, atol=atol))

    def __neg__(self) -> StateVector:
        return StateVector(-self.amplitudes)

    def __rmul__(self, scalar) -> StateVector:
        return StateVector(scalar * self.amplitudes)


@dataclass(frozen=True, eq=False)
class Operator:
    """A 4x4 complex matrix with an optional symbolic label.

    ``a @ b`` is the operator product and ``a @ psi`` applies ``a`` to a
    :class:`StateVector`.
    """

    matrix: np.ndarray
    label: str = field(default="")

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (DIM, DIM):
            raise ValueError(f"expected a {DIM}x{DIM} matrix, got {m.shape}")
        _finite(m, "operator")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            label = f"{self.label}·{other.label}" if self.label and other.label else ""
            return Operator(self.matrix @ other.matrix, label)
        if isinstance(other, StateVector):
            return StateVector(self.matrix @ other.amplitudes)
        return NotImplemented

    def __add__(self, other: Operator) -> Operator:
        return Operator(self.matrix + other.matrix)

    def __sub__(self, other: Operator) -> Operator:
        return Operator(self.matrix - other.matrix)

    def __neg__(self) -> Operator:
        return Operator(-self.matrix, f"-{self.label}" if self.label else "")

    def __rmul__(self, scalar) -> Operator:
        return Operator(scalar * self.matrix)

    @property
    def dagger(self) -> Operator:
        return Operator(self.matrix.conj().T, f"{self.label}†" if self.label else "")

    def is_hermitian(self, atol: float = EXACT_TOL) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, rtol=0, atol=atol))

    def is_unitary(self, atol: float = NORM_TOL) -> bool:
        return bool(np.allclose(self.matrix @ self.matrix.conj().T, np.eye(DIM), rtol=0, atol=atol))

    def allclose(self, other: Operator, atol: float = EXACT_TOL) -> bool:
        return bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=atol))

    def is_zero(self, atol: float = EXACT_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix)) <= atol)


IDENTITY = Operator(np.eye(DIM), "I")
ZERO = Operator(np.zeros((DIM, DIM)), "0")

_SYMBOL = {"x": "σx", "y": "σy", "z": "σz"}


def _label(spin_axis: str, path_axis: str) -> str:
    parts = []
    if spin_axis != "id":
        parts.append(f"{_SYMBOL[spin_axis]}^s")
    if path_axis != "id":
        parts.append(f"{_SYMBOL[path_axis]}^p")
    return "".join(parts) or "I"


def tensor_observable(spin_axis: Axis, path_axis: Axis) -> Operator:
    """``sigma_spin_axis (x) sigma_path_axis``; pass ``"id"`` for an identity factor."""
    if spin_axis not in _PAULI_2x2 or path_axis not in _PAULI_2x2:
        raise ValueError(f"unknown axis pair ({spin_axis!r}, {path_axis!r})")
    if spin_axis == "id" and path_axis == "id":
        raise ValueError("at least one axis must be a Pauli")
    return Operator(
        np.kron(_PAULI_2x2[spin_axis], _PAULI_2x2[path_axis]),
        _label(spin_axis, path_axis),
    )


def pauli(axis: Literal["x", "y", "z"], subsystem: Subsystem) -> Operator:
    """Single-subsystem Pauli operator embedded in the two-qubit space."""
    if axis not in ("x", "y", "z"):
        raise ValueError(f"unknown axis {axis!r}")
    if subsystem == "spin":
        return tensor_observable(axis, "id")
    if subsystem == "path":
        return tensor_observable("id", axis)
    raise ValueError(f"unknown subsystem {subsystem!r}")


def commutator(a: Operator, b: Operator) -> Operator:
    return Operator(a.matrix @ b.matrix - b.matrix @ a.matrix)


def product_state(spin: np.ndarray, path: np.ndarray) -> StateVector:
    return StateVector(np.kron(np.asarray(spin, dtype=complex), np.asarray(path, dtype=complex)))


def basis_state(spin: Literal["up", "down"], path: Literal["I", "II"]) -> StateVector:
    s = {"up": UP, "down": DOWN}[spin]
    p = {"I": PATH_I, "II": PATH_II}[path]
    return product_state(s, p)


def bell_state() -> StateVector:
    """(|down, I> - |up, II>) / sqrt(2): the spin-path entangled preparation."""
    return StateVector(SQRT_HALF * (basis_state("down", "I").amplitudes - basis_state("up", "II").amplitudes))


def eigenstate(family: Family, sign: Literal["+", "-"]) -> StateVector:
    """Common eigenstates of ``σx^s σy^p`` and ``σy^s σx^p``.

    ``varphi±`` = (|down, I> ± i|up, II>)/sqrt(2) has product eigenvalue -1,
    ``phi±`` = (|up, I> ± i|down, II>)/sqrt(2) has product eigenvalue +1.
    """
    s = {"+": 1.0, "-": -1.0}[sign]
    if family == "varphi":
        first, second = basis_state("down", "I"), basis_state("up", "II")
    elif family == "phi":
        first, second = basis_state("up", "I"), basis_state("down", "II")
    else:
        raise ValueError(f"unknown family {family!r}")
    return StateVector(SQRT_HALF * (first.amplitudes + s * 1j * second.amplitudes))


def expectation(observable: Operator, state: StateVector) -> float:
    """<state|observable|state> for a Hermitian observable and a unit state.

    Raises:
        NonHermitian: if the observable deviates from Hermitian by more than 1e-12.
        NotNormalized: if the squared norm differs from 1 by more than 1e-6.
    """
    if not observable.is_hermitian():
        raise NonHermitian(f"observable {observable.label or '<unnamed>'} is not Hermitian")
    n2 = state.norm_squared()
    if abs(n2 - 1.0) > NORM_ERROR_TOL:
        raise NotNormalized(f"state has norm² {n2!r}")
    value = np.vdot(state.amplitudes, observable.matrix @ state.amplitudes)
    # Hermiticity within 1e-12 bounds the imaginary part well below this.
    assert abs(value.imag) < IMAG_TOL, value
    return float(value.real)


def projection_probability(target: StateVector, state: StateVector) -> float:
    """|<target|state>|^2."""
    return abs(target.inner(state)) ** 2


def density_matrix(state: StateVector) -> np.ndarray:
    a = state.amplitudes
    return np.outer(a, a.conj())


def projector_probability(target: StateVector, rho: np.ndarray) -> float:
    """<target| rho |target> for a density matrix ``rho``."""
    t = target.amplitudes
    return float(np.vdot(t, rho @ t).real)


def sign_of_identity(op: Operator, atol: float = 1e-10) -> int | None:
    """Return +1 or -1 if ``op`` equals ±I within ``atol``, else None."""
    for s in (1, -1):
        if np.max(np.abs(op.matrix - s * np.eye(DIM))) <= atol:
            return s
    return None

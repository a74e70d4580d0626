"""Peres-Mermin magic square and noncontextual value-assignment bounds.

Subsystem 1 of the textbook square is mapped to spin and subsystem 2 to path.
Everything here is exhaustive enumeration over at most 2**9 assignments, so
results are exact and maximizers come out in a fixed (lexicographic) order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Literal

import numpy as np

from neutron_ks.algebra import (
    IDENTITY,
    Operator,
    StateVector,
    bell_state,
    commutator,
    expectation,
    sign_of_identity,
    tensor_observable,
)
from neutron_ks.errors import NotProportionalToIdentity

InequalityId = Literal["full_5term", "reduced_3term"]
INEQUALITIES: tuple[InequalityId, ...] = ("full_5term", "reduced_3term")

# (spin_axis, path_axis) per cell, rows as laid out in the square.
SQUARE_LAYOUT = (
    (("x", "id"), ("id", "x"), ("x", "x")),
    (("id", "y"), ("y", "id"), ("y", "y")),
    (("x", "y"), ("y", "x"), ("z", "z")),
)

EXPECTED_ROW_SIGNS = (1, 1, 1)
EXPECTED_COL_SIGNS = (1, 1, -1)

# Symbols carrying independent noncontextual values in the 5-term inequality.
SYMBOLS_FULL = ("xs", "xp", "ys", "yp", "xs_yp", "ys_xp")
SYMBOLS_REDUCED = ("xs", "xp", "ys", "yp")

CLASSICAL_BOUNDS = {"full_5term": 3, "reduced_3term": 1}


@dataclass(frozen=True)
class MagicSquare:
    grid: tuple[tuple[Operator, ...], ...]

    def row(self, i: int) -> tuple[Operator, ...]:
        return self.grid[i]

    def col(self, j: int) -> tuple[Operator, ...]:
        return tuple(r[j] for r in self.grid)

    @property
    def labels(self) -> tuple[tuple[str, ...], ...]:
        return tuple(tuple(op.label for op in r) for r in self.grid)


@dataclass(frozen=True)
class SquareReport:
    row_signs: tuple[int, int, int]
    col_signs: tuple[int, int, int]
    compatible: bool

    @property
    def matches_expected(self) -> bool:
        return (
            self.compatible
            and self.row_signs == EXPECTED_ROW_SIGNS
            and self.col_signs == EXPECTED_COL_SIGNS
        )


@dataclass(frozen=True)
class ContradictionReport:
    satisfiable: bool
    assignments_checked: int
    satisfying: tuple[tuple[int, ...], ...] = ()


@dataclass(frozen=True)
class NCHVAssignment:
    values: dict[str, int]

    def __post_init__(self):
        bad = {k: v for k, v in self.values.items() if v not in (1, -1)}
        if bad:
            raise ValueError(f"noncontextual values must be ±1, got {bad}")


@dataclass(frozen=True)
class BoundReport:
    inequality_id: InequalityId
    classical_max: float
    maximizing_assignments: tuple[NCHVAssignment, ...]
    qm_value: float
    assignments_checked: int = 0

    def to_dict(self) -> dict:
        return {
            "inequality_id": self.inequality_id,
            "classical_max": self.classical_max,
            "qm_value": self.qm_value,
            "assignments_checked": self.assignments_checked,
            "maximizing_assignments": [dict(a.values) for a in self.maximizing_assignments],
        }


def build_magic_square() -> MagicSquare:
    return MagicSquare(
        tuple(tuple(tensor_observable(s, p) for s, p in row) for row in SQUARE_LAYOUT)
    )


def _product(ops) -> Operator:
    out = IDENTITY
    for op in ops:
        out = out @ op
    return out


def _line_sign(ops) -> int:
    prod = _product(ops)
    s = sign_of_identity(prod, atol=1e-10)
    if s is None:
        raise NotProportionalToIdentity(
            "product of " + ", ".join(op.label or "?" for op in ops) + " is not ±I"
        )
    return s


def _mutually_commuting(ops) -> bool:
    return all(commutator(a, b).is_zero() for a, b in itertools.combinations(ops, 2))


def verify_square(square: MagicSquare) -> SquareReport:
    """Row/column product signs and pairwise compatibility of a square.

    Products are taken left to right (rows) and top to bottom (columns).

    Raises:
        NotProportionalToIdentity: a row or column product is not ±I within 1e-10.
    """
    rows = [square.row(i) for i in range(3)]
    cols = [square.col(j) for j in range(3)]
    return SquareReport(
        row_signs=tuple(_line_sign(r) for r in rows),
        col_signs=tuple(_line_sign(c) for c in cols),
        compatible=all(_mutually_commuting(line) for line in rows + cols),
    )


def assignment_contradiction(
    row_signs: tuple[int, int, int] = EXPECTED_ROW_SIGNS,
    col_signs: tuple[int, int, int] = EXPECTED_COL_SIGNS,
) -> ContradictionReport:
    """Search all 2**9 ±1 assignments to the nine cells for one obeying the
    given row and column product constraints."""
    satisfying = []
    checked = 0
    for values in itertools.product((1, -1), repeat=9):
        checked += 1
        v = np.reshape(values, (3, 3))
        if tuple(np.prod(v, axis=1)) == tuple(row_signs) and tuple(np.prod(v, axis=0)) == tuple(col_signs):
            satisfying.append(values)
    return ContradictionReport(bool(satisfying), checked, tuple(satisfying))


def classical_lhs(inequality_id: InequalityId, v: dict[str, int]) -> int:
    """Left-hand side for a single noncontextual assignment ``v``.

    In the full form the two sequential products (e.g. σx^sσy^p · σx^s · σy^p)
    take the product of three independent symbol values. In the reduced form
    the compound observables are fixed to the product of their factors.
    """
    if inequality_id == "full_5term":
        return (
            -v["xs"] * v["xp"]
            - v["ys"] * v["yp"]
            + v["xs_yp"] * v["xs"] * v["yp"]
            + v["ys_xp"] * v["ys"] * v["xp"]
            - v["xs_yp"] * v["ys_xp"]
        )
    if inequality_id == "reduced_3term":
        xs_yp = v["xs"] * v["yp"]
        ys_xp = v["ys"] * v["xp"]
        return -v["xs"] * v["xp"] - v["ys"] * v["yp"] - xs_yp * ys_xp
    raise ValueError(f"unknown inequality {inequality_id!r}")


def qm_terms(inequality_id: InequalityId, state: StateVector) -> dict[str, float]:
    """Exact expectation of every term appearing in the inequality."""
    xx = expectation(tensor_observable("x", "x"), state)
    yy = expectation(tensor_observable("y", "y"), state)
    xy, yx = tensor_observable("x", "y"), tensor_observable("y", "x")
    bell = expectation(xy @ yx, state)
    if inequality_id == "reduced_3term":
        return {"xx": xx, "yy": yy, "bell": bell}
    if inequality_id == "full_5term":
        seq_xy = expectation(xy @ tensor_observable("x", "id") @ tensor_observable("id", "y"), state)
        seq_yx = expectation(yx @ tensor_observable("y", "id") @ tensor_observable("id", "x"), state)
        return {"xx": xx, "yy": yy, "seq_xy": seq_xy, "seq_yx": seq_yx, "bell": bell}
    raise ValueError(f"unknown inequality {inequality_id!r}")


def qm_lhs(inequality_id: InequalityId, state: StateVector) -> float:
    t = qm_terms(inequality_id, state)
    if inequality_id == "reduced_3term":
        return -t["xx"] - t["yy"] - t["bell"]
    return -t["xx"] - t["yy"] + t["seq_xy"] + t["seq_yx"] - t["bell"]


def classical_bound(inequality_id: InequalityId) -> BoundReport:
    if inequality_id not in INEQUALITIES:
        raise ValueError(f"unknown inequality {inequality_id!r}")
    symbols = SYMBOLS_FULL if inequality_id == "full_5term" else SYMBOLS_REDUCED
    best = None
    maximizers: list[NCHVAssignment] = []
    checked = 0
    for values in itertools.product((1, -1), repeat=len(symbols)):
        checked += 1
        v = dict(zip(symbols, values))
        lhs = classical_lhs(inequality_id, v)
        if best is None or lhs > best:
            best, maximizers = lhs, [NCHVAssignment(v)]
        elif lhs == best:
            maximizers.append(NCHVAssignment(v))
    return BoundReport(
        inequality_id=inequality_id,
        classical_max=float(best),
        maximizing_assignments=tuple(maximizers),
        qm_value=qm_lhs(inequality_id, bell_state()),
        assignments_checked=checked,
    )

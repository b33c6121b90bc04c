"""Domain types: solutions, constraints, objective vectors, Pareto dominance.

Costs and bounds are integers throughout (inputs are scaled to integers
before they get here), so feasibility checks like c(x) <= B are exact and
never hit floating-point boundary ambiguity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ContractError(ValueError):
    """A caller violated an operation's precondition."""


class BoundNotApplicableError(ValueError):
    """Population bound requested for a constraint set it does not cover."""


class BitString:
    """Fixed-length binary solution vector.

    Immutable: the underlying array is marked read-only at construction.
    """

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ContractError("bits must be a nonempty 1-d sequence")
        if not np.all((arr == 0) | (arr == 1)):
            raise ContractError("bits must be 0/1")
        arr = arr.copy()
        arr.flags.writeable = False
        self.bits = arr

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "BitString":
        bits = np.zeros(n, dtype=np.uint8)
        idx = list(indices)
        if idx:
            bits[np.asarray(idx)] = 1
        return cls(bits)

    @property
    def n(self) -> int:
        return self.bits.size

    def ones_count(self) -> int:
        return int(self.bits.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def with_flipped(self, positions: Iterable[int]) -> "BitString":
        bits = self.bits.copy()
        for j in positions:
            bits[j] ^= 1
        return BitString(bits)

    def __eq__(self, other) -> bool:
        return isinstance(other, BitString) and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    def __repr__(self) -> str:
        idx = self.indices()
        return f"BitString(n={self.n}, ones={idx.tolist()})"


class ConstraintKind(enum.Enum):
    UNIT = "unit"
    UNIFORM_WEIGHTED = "uniform-weighted"
    KNAPSACK = "knapsack"


class Constraint:
    """Linear cost constraint: cost(x) = sum_j weights[j] * x[j] <= bound.

    The kind is inferred from the weights: all ones -> unit, all equal to one
    positive value -> uniform-weighted, anything else -> knapsack.
    """

    __slots__ = ("weights", "bound", "kind")

    def __init__(self, weights, bound: int):
        w = np.asarray(weights, dtype=np.int64)
        if w.ndim != 1 or w.size == 0:
            raise ContractError("weights must be a nonempty 1-d sequence")
        if np.any(w < 0):
            raise ContractError("weights must be nonnegative")
        bound = int(bound)
        if bound < 0:
            raise ContractError("bound must be nonnegative")
        w = w.copy()
        w.flags.writeable = False
        self.weights = w
        self.bound = bound
        if np.all(w == 1):
            self.kind = ConstraintKind.UNIT
        elif w[0] > 0 and np.all(w == w[0]):
            self.kind = ConstraintKind.UNIFORM_WEIGHTED
        else:
            self.kind = ConstraintKind.KNAPSACK

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def is_uniform(self) -> bool:
        return self.kind is not ConstraintKind.KNAPSACK

    def cost(self, x) -> int:
        bits = x.bits if isinstance(x, BitString) else np.asarray(x, dtype=np.uint8)
        if bits.size != self.n:
            raise ContractError(f"solution length {bits.size} != constraint n {self.n}")
        return int(self.weights @ bits.astype(np.int64))

    def is_feasible(self, x) -> bool:
        return self.cost(x) <= self.bound

    def __repr__(self) -> str:
        return f"Constraint(kind={self.kind.value}, n={self.n}, bound={self.bound})"


class ObjectiveVector:
    """The (k+1)-vector compared under Pareto dominance.

    Position 0 is the primary objective; positions 1..k hold negated costs
    when produced by the fitness formulations (not enforced here, since bare
    vectors are useful for dominance algebra on their own).
    """

    __slots__ = ("values",)

    def __init__(self, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ContractError("objective vector must be nonempty")
        self.values = vals

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def __iter__(self):
        return iter(self.values)

    def __eq__(self, other) -> bool:
        return isinstance(other, ObjectiveVector) and self.values == other.values

    def __hash__(self) -> int:
        return hash(self.values)

    def __repr__(self) -> str:
        return f"ObjectiveVector{self.values}"


class Dominance(enum.Enum):
    STRICT = "strictly-dominates"
    WEAK_ONLY = "weakly-dominates-only"
    NONE = "none"


def _values(v) -> tuple:
    return v.values if isinstance(v, ObjectiveVector) else tuple(float(x) for x in v)


def dominance(u, v) -> Dominance:
    """Compare two objective vectors under maximizing Pareto dominance.

    STRICT: u >= v componentwise with at least one strict inequality.
    WEAK_ONLY: u == v componentwise (weak dominance without strictness).
    NONE: otherwise.
    """
    a, b = _values(u), _values(v)
    if len(a) != len(b):
        raise ContractError(f"objective vector lengths differ: {len(a)} vs {len(b)}")
    ge = all(x >= y for x, y in zip(a, b))
    if not ge:
        return Dominance.NONE
    if any(x > y for x, y in zip(a, b)):
        return Dominance.STRICT
    return Dominance.WEAK_ONLY


def weakly_dominates(u, v) -> bool:
    a, b = _values(u), _values(v)
    if len(a) != len(b):
        raise ContractError(f"objective vector lengths differ: {len(a)} vs {len(b)}")
    return all(x >= y for x, y in zip(a, b))


class Population:
    """Archive of mutually nondominated (BitString, ObjectiveVector) members.

    Insertion order is preserved and removal is order-stable, so a run that
    indexes members by position is reproducible.  Vector uniqueness is an
    invariant: an offspring with an incumbent's exact vector replaces it.
    """

    def __init__(self):
        self.members: list[tuple[BitString, ObjectiveVector]] = []

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def vectors(self) -> list[ObjectiveVector]:
        return [gv for _, gv in self.members]

    def insert(self, y: BitString, gy: ObjectiveVector) -> bool:
        """Archive update rule of the (mu-less) Pareto archive.

        If some member strictly dominates gy the archive is unchanged;
        otherwise every member weakly dominated by gy (equality included) is
        removed and (y, gy) is appended.  Returns True iff y was added.
        """
        for _, gz in self.members:
            if dominance(gz, gy) is Dominance.STRICT:
                return False
        kept = [(z, gz) for z, gz in self.members if not weakly_dominates(gy, gz)]
        kept.append((y, gy))
        self.members = kept
        return True

    def check_invariants(self) -> None:
        """Raise if members are not mutually nondominated with unique vectors."""
        vecs = self.vectors()
        seen = set()
        for gv in vecs:
            if gv.values in seen:
                raise AssertionError(f"duplicate objective vector {gv}")
            seen.add(gv.values)
        for i, u in enumerate(vecs):
            for j, v in enumerate(vecs):
                if i != j and dominance(u, v) is Dominance.STRICT:
                    raise AssertionError(f"member {i} dominates member {j}: {u} > {v}")


def population_insert(population: Population, y: BitString, gy: ObjectiveVector) -> Population:
    """Functional wrapper around Population.insert (mutates and returns it)."""
    population.insert(y, gy)
    return population


def population_bound(constraints: Sequence[Constraint], n: int) -> int:
    """Archive size cap for unit/uniform-weighted constraint sets.

    Returns min(max_i floor(B_i / a_i), n) + 1.  Knapsack constraints void
    the cap, so their presence is an error.
    """
    if n <= 0:
        raise ContractError("n must be positive")
    if not constraints:
        raise ContractError("at least one constraint required")
    ratios = []
    for c in constraints:
        if c.kind is ConstraintKind.KNAPSACK:
            raise BoundNotApplicableError(
                "population bound applies only to unit/uniform-weighted constraints"
            )
        a = int(c.weights[0])
        ratios.append(c.bound // a)
    return min(max(ratios), n) + 1


class Mode(enum.Enum):
    CLASSICAL = "classical-single"
    MULTITASK = "multitasking"


@dataclass(frozen=True)
class ProblemSet:
    """One shared objective plus k cost constraints: the problems (f, c_i, B_i)."""

    objective: object
    constraints: tuple
    mode: Mode = Mode.MULTITASK

    def __post_init__(self):
        cons = tuple(self.constraints)
        object.__setattr__(self, "constraints", cons)
        if not cons:
            raise ContractError("problem set needs at least one constraint")
        if self.mode is Mode.CLASSICAL and len(cons) != 1:
            raise ContractError("classical-single mode requires exactly one constraint")
        n = self.objective.n
        for c in cons:
            if c.n != n:
                raise ContractError(
                    f"constraint n {c.n} != objective ground-set size {n}"
                )

    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def k(self) -> int:
        return len(self.constraints)

    @property
    def all_uniform(self) -> bool:
        return all(c.is_uniform for c in self.constraints)

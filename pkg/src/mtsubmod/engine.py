"""Backend selection and array packing for the run loop.

Two interchangeable backends implement the same loop:

  - "numba": JIT-compiled kernel (_kernel_numba), the default when numba
    imports cleanly; what the million-generation experiments use.
  - "numpy": pure-numpy mirror (_kernel_numpy), always available.

Selection: the MTSUBMOD_BACKEND environment variable ("auto", "numba",
"numpy"; default "auto"), overridable per call.  Both backends are
bit-identical for identical inputs; benchmarks/backend_bench.py measures
the gap and re-checks the equality.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import ContractError, ProblemSet, population_bound
from .rng import binomial_cdf_table

ENV_BACKEND = "MTSUBMOD_BACKEND"

_KNAPSACK_INITIAL_CAP = 256
_numba_import_error = None

try:
    from . import _kernel_numba
except ImportError as exc:  # pragma: no cover - exercised only without numba
    _kernel_numba = None
    _numba_import_error = exc

from . import _kernel_numpy


class InvariantViolation(AssertionError):
    """A runtime invariant of the optimizer was broken (implementation bug)."""


def resolve_backend(backend: str | None = None) -> str:
    """Resolve "auto"/None to a concrete backend name."""
    choice = backend or os.environ.get(ENV_BACKEND, "auto")
    if choice not in ("auto", "numba", "numpy"):
        raise ContractError(f"unknown backend {choice!r}")
    if choice == "auto":
        return "numba" if _kernel_numba is not None else "numpy"
    if choice == "numba" and _kernel_numba is None:
        raise ContractError(f"numba backend unavailable: {_numba_import_error}")
    return choice


def _loop(backend: str):
    return _kernel_numba.run_loop if backend == "numba" else _kernel_numpy.run_loop


@dataclass
class EngineResult:
    """Raw arrays out of one run loop call."""

    bits: np.ndarray        # uint64[size, nwords]
    ones: np.ndarray        # int64[size]
    costs: np.ndarray       # int64[size, k]
    f: np.ndarray           # float64[size]
    obj: np.ndarray         # float64[size, k+1]
    trace_size: np.ndarray  # int64[nc]
    trace_f: np.ndarray     # float64[nc, k], -1 where no feasible member
    trace_cost: np.ndarray  # int64[nc, k], -1 where no feasible member
    max_size: int
    backend: str


def _pack_objective(objective):
    if objective.kind == "coverage":
        max_count = int(np.diff(objective.indptr).max())
        if max_count > np.iinfo(np.uint16).max:
            raise ContractError(
                "coverage cache uses uint16 counts; max closed neighborhood "
                f"{max_count} exceeds {np.iinfo(np.uint16).max}"
            )
        dummy_vals = np.zeros(1, dtype=np.float64)
        return 0, objective.indptr, objective.indices, dummy_vals
    if objective.kind == "modular":
        dummy_ptr = np.zeros(2, dtype=np.int64)
        dummy_idx = np.zeros(0, dtype=np.int32)
        return 1, dummy_ptr, dummy_idx, np.asarray(objective.item_values, dtype=np.float64)
    raise ContractError(f"unsupported objective kind {objective.kind!r}")


def run_arrays(
    ps: ProblemSet,
    budget: int,
    init_kind: int,
    seed: int,
    checkpoints,
    backend: str | None = None,
) -> EngineResult:
    """Execute the archive loop and return raw result arrays."""
    if budget < 0:
        raise ContractError("budget must be >= 0")
    n = ps.n
    k = ps.k
    obj_kind, indptr, indices, mod_values = _pack_objective(ps.objective)
    weights = np.vstack([c.weights for c in ps.constraints]).astype(np.int64)
    bounds = np.array([c.bound for c in ps.constraints], dtype=np.int64)

    cps = np.asarray(sorted(int(c) for c in checkpoints), dtype=np.int64)
    if cps.size:
        if cps[0] < 0 or cps[-1] > budget:
            raise ContractError("checkpoints must lie within [0, budget]")
        if np.any(np.diff(cps) == 0):
            raise ContractError("checkpoints must be distinct")

    enforce_cap = ps.all_uniform
    if enforce_cap:
        cap = population_bound(ps.constraints, n) + 1
    else:
        cap = _KNAPSACK_INITIAL_CAP

    name = resolve_backend(backend)
    out = _loop(name)(
        obj_kind,
        indptr,
        indices,
        mod_values,
        weights,
        bounds,
        n,
        int(budget),
        int(init_kind),
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
        binomial_cdf_table(n, 1.0 / n),
        cps,
        cap,
        enforce_cap,
    )
    (bits, ones, costs, f, obj, trace_size, trace_f, trace_cost,
     max_size, cap_violated) = out

    if cap_violated:
        raise InvariantViolation(
            f"archive size exceeded the uniform-constraint bound {cap - 1}"
        )
    if enforce_cap and max_size > cap - 1:
        raise InvariantViolation(
            f"archive peaked at {max_size} > bound {cap - 1}"
        )
    return EngineResult(
        bits=bits,
        ones=ones,
        costs=costs,
        f=f,
        obj=obj,
        trace_size=trace_size,
        trace_f=trace_f,
        trace_cost=trace_cost,
        max_size=int(max_size),
        backend=name,
    )


def warm_up(backend: str | None = None) -> str:
    """Compile/load the selected backend on a toy instance; returns its name."""
    from .core import Constraint, Mode
    from .objectives import ModularObjective

    ps = ProblemSet(
        objective=ModularObjective([1.0, 2.0]),
        constraints=(Constraint([1, 1], 1),),
        mode=Mode.CLASSICAL,
    )
    return run_arrays(ps, 8, 0, 1, (8,), backend=backend).backend

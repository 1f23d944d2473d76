"""Count-series simulation and random hierarchy sampling.

Series follow an integer-valued ARMA(1,1) recursion with Poisson innovations,
where scalar multiplication is replaced by binomial thinning:

    X_t = alpha o X_{t-1} + eps_t + beta o eps_{t-1},   X_0 = eps_0

with eps_t ~ Poisson(lam) and (p o N) a Binomial(N, p) draw. Hierarchies are
sampled by drawing six child counts uniformly from 1..9 and picking that many
distinct bottom variables from the simulated pool.

Reproducibility: one root seed determines everything. Variable i uses the
child stream SeedSequence((seed, 1, i)); hierarchy sampling uses
SeedSequence((seed, 2)). Generation order therefore never affects output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive, check_probability
from .errors import ParameterError, StructureError
from .hierarchy import Hierarchy, MidNode, SeriesFrame

DEFAULT_BURN_IN = 100

N_MID_NODES = 6
CHILD_COUNT_LOW = 1
CHILD_COUNT_HIGH = 9


@dataclass(frozen=True)
class InarmaParams:
    """Thinning probabilities and Poisson innovation mean for one series."""

    alpha: float
    beta: float
    lam: float

    def __post_init__(self):
        check_probability(self.alpha, "alpha", upper_inclusive=False)
        check_probability(self.beta, "beta")
        check_positive(self.lam, "lam")


@dataclass(frozen=True)
class ParamRanges:
    """Uniform sampling ranges for per-variable INARMA parameters."""

    alpha: tuple[float, float] = (0.1, 0.7)
    beta: tuple[float, float] = (0.0, 0.5)
    lam: tuple[float, float] = (1.0, 10.0)

    def __post_init__(self):
        for name, (lo, hi) in (("alpha", self.alpha), ("beta", self.beta), ("lam", self.lam)):
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ParameterError(f"{name} range ({lo}, {hi}) is not a valid interval")
        check_probability(self.alpha[0], "alpha low", upper_inclusive=False)
        check_probability(self.alpha[1], "alpha high", upper_inclusive=False)
        check_probability(self.beta[0], "beta low")
        check_probability(self.beta[1], "beta high")
        check_positive(self.lam[0], "lam low")
        check_positive(self.lam[1], "lam high")

    def sample(self, rng: np.random.Generator) -> InarmaParams:
        return InarmaParams(
            alpha=rng.uniform(*self.alpha),
            beta=rng.uniform(*self.beta),
            lam=rng.uniform(*self.lam),
        )


@dataclass(frozen=True)
class HierarchySpec:
    """Six sampled child counts plus the selected bottom variable ids."""

    mid_child_counts: tuple[int, ...]
    selected_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "mid_child_counts", tuple(int(c) for c in self.mid_child_counts))
        object.__setattr__(self, "selected_ids", tuple(self.selected_ids))
        counts = self.mid_child_counts
        if len(counts) != N_MID_NODES:
            raise ParameterError(f"expected {N_MID_NODES} child counts, got {len(counts)}")
        if any(c < CHILD_COUNT_LOW or c > CHILD_COUNT_HIGH for c in counts):
            raise ParameterError(f"child counts must lie in [{CHILD_COUNT_LOW}, {CHILD_COUNT_HIGH}]")
        if len(self.selected_ids) != sum(counts):
            raise ParameterError(
                f"expected {sum(counts)} selected ids, got {len(self.selected_ids)}"
            )
        if len(set(self.selected_ids)) != len(self.selected_ids):
            raise ParameterError("selected ids must be distinct")

    @property
    def n_selected(self) -> int:
        return len(self.selected_ids)

    def to_hierarchy(self) -> Hierarchy:
        """Mid nodes m1..m6 owning consecutive runs of the selected ids."""
        nodes = []
        pos = 0
        for i, count in enumerate(self.mid_child_counts, start=1):
            nodes.append(MidNode(id=f"m{i}", children=self.selected_ids[pos : pos + count]))
            pos += count
        return Hierarchy(mid_nodes=tuple(nodes))

    def to_dict(self) -> dict:
        return {
            "mid_child_counts": list(self.mid_child_counts),
            "selected_ids": list(self.selected_ids),
        }


def binomial_thinning(count: int, prob: float, rng: np.random.Generator) -> int:
    """p o N: the sum of N independent Bernoulli(p) trials."""
    if count < 0:
        raise ParameterError(f"thinning needs a nonnegative count, got {count}")
    check_probability(prob, "thinning probability")
    return int(rng.binomial(count, prob))


def variable_name(index: int, n_vars: int) -> str:
    width = max(4, len(str(n_vars)))
    return f"v{index + 1:0{width}d}"


def _variable_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, 1, index)))


def inarma_generate(
    params: InarmaParams,
    length: int,
    seed: int,
    burn_in: int = DEFAULT_BURN_IN,
) -> np.ndarray:
    """Generate one count series of the requested length.

    The first ``burn_in`` steps of the recursion are discarded to remove the
    initialization transient; pass burn_in=0 to observe the recursion from
    X_0 = eps_0. Identical arguments produce identical output.
    """
    if length < 1:
        raise ParameterError(f"length must be >= 1, got {length}")
    if burn_in < 0:
        raise ParameterError(f"burn_in must be >= 0, got {burn_in}")
    rng = np.random.default_rng(seed)
    return _inarma_from_rng(params, length, rng, burn_in)


def _inarma_from_rng(
    params: InarmaParams, length: int, rng: np.random.Generator, burn_in: int
) -> np.ndarray:
    total = burn_in + length
    eps = rng.poisson(params.lam, size=total)
    ma = np.zeros(total, dtype=np.int64)
    if total > 1:
        ma[1:] = rng.binomial(eps[:-1], params.beta)
    x = np.empty(total, dtype=np.int64)
    x[0] = eps[0]
    for t in range(1, total):
        x[t] = rng.binomial(x[t - 1], params.alpha) + eps[t] + ma[t]
    return x[burn_in:]


def sample_hierarchy_spec(pool_size: int, seed: int) -> HierarchySpec:
    """Draw six child counts from 1..9 and that many distinct pool variables."""
    max_needed = N_MID_NODES * CHILD_COUNT_HIGH
    if pool_size < max_needed:
        raise ParameterError(f"pool_size must be >= {max_needed}, got {pool_size}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 2)))
    counts = rng.integers(CHILD_COUNT_LOW, CHILD_COUNT_HIGH + 1, size=N_MID_NODES)
    n = int(counts.sum())
    picks = rng.choice(pool_size, size=n, replace=False)
    ids = tuple(variable_name(int(i), pool_size) for i in picks)
    return HierarchySpec(mid_child_counts=tuple(int(c) for c in counts), selected_ids=ids)


def simulate_dataset(
    n_vars: int,
    length: int,
    param_ranges: ParamRanges | None = None,
    seed: int = 0,
    burn_in: int = DEFAULT_BURN_IN,
    ids: list[str] | None = None,
) -> SeriesFrame:
    """Simulate a frame of independent count series.

    Each variable draws its own INARMA parameters uniformly from
    ``param_ranges`` using its private seed stream, then generates its series
    from the same stream; columns are therefore reproducible independently of
    one another. ``ids`` restricts generation to a subset of columns, which
    yields bit-identical values to slicing the full frame.
    """
    if n_vars < 1:
        raise ParameterError(f"n_vars must be >= 1, got {n_vars}")
    if length < 1:
        raise ParameterError(f"length must be >= 1, got {length}")
    ranges = param_ranges if param_ranges is not None else ParamRanges()
    names = [variable_name(i, n_vars) for i in range(n_vars)]
    if ids is not None:
        unknown = sorted(set(ids) - set(names))
        if unknown:
            raise StructureError(f"unknown variable ids requested: {unknown}")
        wanted = set(ids)
        indices = [i for i, name in enumerate(names) if name in wanted]
    else:
        indices = range(n_vars)
    columns: dict[str, np.ndarray] = {}
    for i in indices:
        rng = _variable_rng(seed, i)
        params = ranges.sample(rng)
        columns[names[i]] = _inarma_from_rng(params, length, rng, burn_in).astype(float)
    return SeriesFrame(columns)

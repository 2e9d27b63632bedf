"""Forward simulation of the branching process with immigration.

Two engines share one random-stream layout:

* the founder-count engine follows, for each replicate, the number of
  generation-``n`` descendants of every generation-``m`` individual and of
  every immigrant arriving at generations ``m..n-1``; memory is proportional to
  the number of founders, not to the population;
* the ancestry engine materializes every individual with a parent pointer, so
  sampled individuals can be traced back to their most recent common ancestor.

Replicates are processed in blocks of :data:`BLOCK` and block ``b`` draws from a
Philox stream keyed by ``(seed, b)``, so results depend only on the seed and
the parameters, not on how many worker threads ran the blocks.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import ResourceLimit, SampleTooLarge
from .models import DistSpec, ModelSpec

BLOCK = 4096
DEFAULT_POP_CAP = 10**8
COUNT_LIMIT = 2**62
DEFAULT_HORIZON = 25


def pop_cap() -> int:
    return int(os.environ.get("GWC_POP_CAP", DEFAULT_POP_CAP))


def n_threads() -> int:
    return max(1, int(os.environ.get("GWC_THREADS", 1)))


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return block_rng(0 if seed is None else seed, 0)


def _draw(d: DistSpec, size: int, rng) -> np.ndarray:
    if d.is_deterministic:
        return np.full(size, d.pmf[0][0], dtype=np.int64)
    return rng.choice(d.values, size=size, p=d.probs)


def _grow(counts: np.ndarray, off: DistSpec, rng) -> np.ndarray:
    """Total offspring of ``counts[j]`` individuals, independently for each ``j``."""
    if counts.size and counts.max() > COUNT_LIMIT // max(off.max_support, 1):
        raise ResourceLimit("descendant counts would overflow 64-bit integers")
    if off.is_deterministic:
        return counts * off.pmf[0][0]
    return rng.multinomial(counts, off.probs) @ off.values


def falling_factorial_array(x: np.ndarray, k: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for j in range(k):
        out = out * (x - j)
    return out


# -- founder-count engine -----------------------------------------------------

@dataclass
class FounderBatch:
    """Founder descendant counts for a block of independent trees."""

    n: int
    track_from: int
    size: int
    rep: np.ndarray
    arrival: np.ndarray
    immigrant: np.ndarray
    index: np.ndarray
    counts: np.ndarray
    immigration: np.ndarray  # shape (size, n): I_k for k < n

    @property
    def population(self) -> np.ndarray:
        return np.bincount(self.rep, weights=self.counts, minlength=self.size).astype(np.int64)

    def quenched(self, i: int) -> np.ndarray:
        num = np.bincount(self.rep, weights=falling_factorial_array(self.counts, i), minlength=self.size)
        return num / falling_factorial_array(self.population, i)


def population_sizes(model: ModelSpec, m: int, size: int, rng, immigration=None) -> np.ndarray:
    """N_m for ``size`` independent trees; fills ``immigration[:, :m]`` when given."""
    N = np.zeros(size, dtype=np.int64)
    for k in range(m):
        I = _draw(model.immigration, size, rng)
        if immigration is not None:
            immigration[:, k] = I
        N = _grow(N + I, model.offspring, rng)
    return N


def simulate_founders(model: ModelSpec, n: int, m: int, size: int, rng, cap: Optional[int] = None) -> FounderBatch:
    if not 0 <= m < n:
        raise ValueError(f"need 0 <= m < n, got m={m}, n={n}")
    cap = pop_cap() if cap is None else cap
    immigration = np.zeros((size, n), dtype=np.int64)
    Nm = population_sizes(model, m, size, rng, immigration)
    if Nm.size and Nm.max() > cap:
        raise ResourceLimit(f"generation-{m} population {Nm.max()} exceeds the cap {cap}")
    reps = np.arange(size)
    rep = [np.repeat(reps, Nm)]
    arrival = [np.full(rep[0].size, m)]
    immigrant = [np.zeros(rep[0].size, dtype=bool)]
    index = [_local_index(Nm)]
    counts = np.ones(rep[0].size, dtype=np.int64)
    for k in range(m, n):
        I = _draw(model.immigration, size, rng)
        immigration[:, k] = I
        r = np.repeat(reps, I)
        rep.append(r)
        arrival.append(np.full(r.size, k))
        immigrant.append(np.ones(r.size, dtype=bool))
        index.append(_local_index(I))
        counts = _grow(np.concatenate([counts, np.ones(r.size, dtype=np.int64)]), model.offspring, rng)
    return FounderBatch(n=n, track_from=m, size=size, rep=np.concatenate(rep), arrival=np.concatenate(arrival),
                        immigrant=np.concatenate(immigrant), index=np.concatenate(index), counts=counts,
                        immigration=immigration)


def _local_index(sizes: np.ndarray) -> np.ndarray:
    """0..sizes[r]-1 for each r, concatenated."""
    total = int(sizes.sum())
    starts = np.repeat(np.cumsum(sizes) - sizes, sizes)
    return np.arange(total) - starts


# -- ancestry engine ----------------------------------------------------------

@dataclass
class AncestryBatch:
    """Every individual of generations 0..n for a block of trees.

    ``rep[g]``, ``parent[g]`` and ``immigrant[g]`` describe generation ``g``
    (immigrants arriving at ``g`` included for ``g < n``), sorted by replicate.
    ``parent[g]`` indexes generation ``g - 1`` and is -1 for immigrants.
    """

    n: int
    size: int
    rep: list
    parent: list
    immigrant: list

    def offsets(self, g: int) -> tuple[np.ndarray, np.ndarray]:
        counts = np.bincount(self.rep[g], minlength=self.size)
        return np.cumsum(counts) - counts, counts


def simulate_ancestry(model: ModelSpec, n: int, size: int, rng, cap: Optional[int] = None) -> AncestryBatch:
    cap = pop_cap() if cap is None else cap
    reps = np.arange(size)
    I = _draw(model.immigration, size, rng)
    rep = [np.repeat(reps, I)]
    parent = [np.full(rep[0].size, -1, dtype=np.int64)]
    imm = [np.ones(rep[0].size, dtype=bool)]
    for g in range(n):
        kids = _draw(model.offspring, rep[g].size, rng)
        par = np.repeat(np.arange(rep[g].size), kids)
        crep = rep[g][par]
        if g + 1 < n:
            I = _draw(model.immigration, size, rng)
            irep = np.repeat(reps, I)
            allrep = np.concatenate([crep, irep])
            order = np.argsort(allrep, kind="stable")
            crep = allrep[order]
            par = np.concatenate([par, np.full(irep.size, -1, dtype=np.int64)])[order]
        if crep.size and np.bincount(crep).max() > cap:
            raise ResourceLimit(f"generation-{g + 1} population exceeds the cap {cap}")
        rep.append(crep)
        parent.append(par)
        imm.append(par < 0)
    return AncestryBatch(n=n, size=size, rep=rep, parent=parent, immigrant=imm)


def _sample_without_replacement(N: np.ndarray, i: int, rng) -> np.ndarray:
    """``i`` distinct uniform draws from ``range(N[r])`` for every row ``r``."""
    rows = N.size
    sel = np.empty((rows, i), dtype=np.int64)
    for t in range(i):
        u = np.floor(rng.random(rows) * (N - t)).astype(np.int64)
        prev = np.sort(sel[:, :t], axis=1)
        for c in range(t):
            u = u + (u >= prev[:, c])
        sel[:, t] = u
    return sel


def coalescence_times(batch: AncestryBatch, i: int, rng, draws: int = 1, rep=None) -> np.ndarray:
    """Coalescence generation of ``i`` individuals sampled from generation ``n``.

    One sample per replicate (or ``draws`` samples of replicate ``rep``).
    Returns floats; ``inf`` when the lineages reach distinct immigrants.
    """
    n = batch.n
    start, N = batch.offsets(n)
    if rep is not None:
        start, N = np.full(draws, start[rep]), np.full(draws, N[rep])
    if np.any(N < i):
        raise SampleTooLarge(f"cannot sample {i} individuals from a generation of {N.min()}")
    cur = start[:, None] + _sample_without_replacement(N, i, rng)
    out = np.full(cur.shape[0], np.inf)
    live = np.arange(cur.shape[0])
    for g in range(n, 0, -1):
        p = batch.parent[g][cur]
        same = (p == p[:, :1]).all(axis=1)
        out[live[same]] = g - 1
        stop = same | batch.immigrant[g - 1][p].any(axis=1)
        live, cur = live[~stop], p[~stop]
        if live.size == 0:
            break
    return out


# -- single-tree interface ----------------------------------------------------

class Founder(NamedTuple):
    kind: str  # "individual" or "immigrant"
    generation: int
    index: int


@dataclass
class GenealogyState:
    generation: int
    track_from: int
    founders: tuple
    counts: np.ndarray
    immigration_log: np.ndarray
    ancestry: Optional[AncestryBatch] = field(default=None, repr=False)

    @property
    def population(self) -> int:
        return int(self.counts.sum())

    def retrack(self, m: int) -> "GenealogyState":
        """The same tree with founders taken at generation ``m``; needs ancestry."""
        if m == self.track_from:
            return self
        if self.ancestry is None:
            raise ValueError("re-tracking founders needs a state simulated with keep_ancestry=True")
        return _state_from_ancestry(self.ancestry, m, self.immigration_log)


def _state_from_ancestry(batch: AncestryBatch, m: int, immigration_log) -> GenealogyState:
    """Founder counts of replicate 0 of ``batch`` (a single-tree batch)."""
    n = batch.n
    if not 0 <= m < n:
        raise ValueError(f"need 0 <= m < n, got m={m}")
    idx = batch.parent[n].copy()
    gen = np.full(idx.size, m)
    done = np.zeros(idx.size, dtype=bool)
    for g in range(n - 1, m - 1, -1):
        active = np.flatnonzero(~done)
        stop = active[batch.immigrant[g][idx[active]] | (g == m)]
        gen[stop] = g
        done[stop] = True
        if g > m:
            move = np.flatnonzero(~done)
            idx[move] = batch.parent[g][idx[move]]
    founders, counts = [], []
    for g in range(m, n):
        imm = batch.immigrant[g]
        n_ind = int(np.count_nonzero(~imm))
        hits = np.bincount(idx[gen == g], minlength=imm.size)
        for j in range(imm.size):
            if imm[j]:
                founders.append(Founder("immigrant", g, j - n_ind))
            elif g == m:
                founders.append(Founder("individual", g, j))
            else:
                continue
            counts.append(int(hits[j]))
    return GenealogyState(generation=n, track_from=m, founders=tuple(founders),
                          counts=np.array(counts, dtype=np.int64), immigration_log=immigration_log,
                          ancestry=batch)


def simulate(model: ModelSpec, n: int, track_from: int = 0, seed=None, keep_ancestry: bool = False,
             cap: Optional[int] = None) -> GenealogyState:
    """One realization of generation ``n`` with every individual attributed to its founder."""
    if not 0 <= track_from < n:
        raise ValueError(f"need 0 <= track_from < n, got {track_from}")
    rng = _as_rng(seed)
    if keep_ancestry:
        batch = simulate_ancestry(model, n, 1, rng, cap)
        log = np.array([int(np.count_nonzero(batch.immigrant[g])) for g in range(n)], dtype=np.int64)
        return _state_from_ancestry(batch, track_from, log)
    fb = simulate_founders(model, n, track_from, 1, rng, cap)
    founders = tuple(Founder("immigrant" if im else "individual", int(a), int(j))
                     for im, a, j in zip(fb.immigrant, fb.arrival, fb.index))
    return GenealogyState(generation=n, track_from=track_from, founders=founders, counts=fb.counts,
                          immigration_log=fb.immigration[0])


def quenched_prob(state: GenealogyState, i: int, m: Optional[int] = None) -> float:
    """P(m <= X < inf | tree) = sum over founders of (count)_i divided by (N_n)_i."""
    if m is not None:
        state = state.retrack(m)
    N = state.population
    if i > N:
        raise SampleTooLarge(f"cannot sample {i} individuals from a generation of {N}")
    num = math.fsum(falling_factorial_array(state.counts, i))
    return num / float(falling_factorial_array(np.array([N]), i)[0])


def sample_coalescence(state: GenealogyState, i: int, rng=None, size: Optional[int] = None):
    """Coalescence generation of ``i`` uniformly sampled individuals (``inf`` if none).

    Returns one value, or an array of ``size`` independent draws on the same tree.
    """
    if state.ancestry is None:
        raise ValueError("direct sampling needs a state simulated with keep_ancestry=True")
    rng = _as_rng(rng)
    times = coalescence_times(state.ancestry, i, rng, draws=1 if size is None else size, rep=0)
    return times if size is not None else (math.inf if np.isinf(times[0]) else int(times[0]))


# -- Monte Carlo estimators -------------------------------------------------------

@dataclass
class McEstimate:
    mean: float
    std_error: float
    replicates: int
    seed: int
    horizon_n: Optional[int] = None
    horizon_remainder: Optional[float] = None

    def to_json(self) -> dict:
        out = {"estimate": float(self.mean), "std_error": float(self.std_error),
               "replicates": int(self.replicates), "seed": int(self.seed), "horizon_n": self.horizon_n}
        if self.horizon_remainder is not None:
            out["horizon_remainder"] = float(self.horizon_remainder)
        return out


def _run_blocks(fn, replicates: int, seed: int) -> np.ndarray:
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    sizes = [min(BLOCK, replicates - b * BLOCK) for b in range(-(-replicates // BLOCK))]
    jobs = [(b, s) for b, s in enumerate(sizes)]
    threads = n_threads()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda job: fn(job[1], block_rng(seed, job[0])), jobs))
    else:
        parts = [fn(s, block_rng(seed, b)) for b, s in jobs]
    return np.concatenate(parts)


def _summarize(values: np.ndarray, seed: int, **kw) -> McEstimate:
    r = values.size
    constant = bool(np.all(values == values[0]))
    se = 0.0 if r == 1 or constant else float(values.std(ddof=1) / math.sqrt(r))
    return McEstimate(mean=float(values.mean()), std_error=se, replicates=r, seed=seed, **kw)


def annealed_samples(model: ModelSpec, n: int, i: int, m: int, replicates: int, seed: int,
                     mode: str = "quenched") -> np.ndarray:
    """Per-tree values whose mean estimates P(m <= X < inf).

    ``mode="quenched"`` averages the exact conditional probability given each
    tree; ``mode="direct"`` samples ``i`` individuals once per tree and records
    the indicator of ``m <= X < inf``.
    """
    if not n >= i >= 2:
        raise ValueError(f"need n >= i >= 2, got n={n}, i={i}")
    if mode == "quenched":
        fn = lambda size, rng: simulate_founders(model, n, m, size, rng).quenched(i)
    elif mode == "direct":
        def fn(size, rng):
            t = coalescence_times(simulate_ancestry(model, n, size, rng), i, rng)
            return ((t >= m) & np.isfinite(t)).astype(float)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _run_blocks(fn, replicates, seed)


def annealed_estimate(model: ModelSpec, n: int, i: int, m: int, replicates: int, seed: int,
                      mode: str = "quenched") -> McEstimate:
    values = annealed_samples(model, n, i, m, replicates, seed, mode)
    return _summarize(values, seed, horizon_n=n)


# -- martingale functionals -----------------------------------------------------------

class MartingaleSample(NamedTuple):
    W_n: float
    X_n: float
    V_n: float
    n: int


def _martingale_block(model: ModelSpec, n: int, size: int, rng) -> np.ndarray:
    fb = simulate_founders(model, n, 0, size, rng)
    mu = model.mu
    first = (fb.arrival == 0) & (fb.index == 0)
    W = np.zeros(size)
    W[fb.rep[first]] = fb.counts[first] / mu**n
    X = fb.population / mu**n
    c = fb.counts.astype(float)
    V = np.bincount(fb.rep, weights=c * c, minlength=size) / mu ** (2 * n)
    return np.stack([W, X, V], axis=1)


def martingale_samples(model: ModelSpec, n: int, replicates: int, seed: int) -> np.ndarray:
    """Array of shape ``(replicates, 3)`` with columns ``W_n, X_n, V_n``.

    ``W_n`` scales the generation-``n`` descendants of the first generation-0
    immigrant by ``mu**-n``; ``X_n`` scales all immigrant-line sizes by
    ``mu**-n``; ``V_n`` sums their squares scaled by ``mu**-2n``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return _run_blocks(lambda size, rng: _martingale_block(model, n, size, rng), replicates, seed)


def martingale_sample(model: ModelSpec, n: int, seed) -> MartingaleSample:
    W, X, V = _martingale_block(model, n, 1, _as_rng(seed))[0]
    return MartingaleSample(float(W), float(X), float(V), n)


def martingale_means(model: ModelSpec, n: int) -> tuple[float, float]:
    """Closed-form ``E[X_n]`` and ``E[V_n]``.

    Both carry the mean immigration ``lam``; for unit immigration ``E[X_n]``
    reduces to ``mu (mu^n - 1) / (mu^n (mu - 1))``.
    """
    mu, s2, lam = model.mu, model.sigma2, model.lam
    ex = lam * mu * (mu**n - 1) / (mu**n * (mu - 1))
    ev = lam / mu ** (2 * n) * (s2 / (mu - 1) * (mu * (mu ** (2 * n) - 1) / (mu**2 - 1) - (mu**n - 1) / (mu - 1))
                                + mu**2 * (mu ** (2 * n) - 1) / (mu**2 - 1))
    return ex, ev


# -- limit law --------------------------------------------------------------------------

def _limit_block(model: ModelSpec, m: int, horizon: int, size: int, rng) -> np.ndarray:
    mu = model.mu
    Nm = population_sizes(model, m, size, rng)
    lines = np.ones(int(Nm.sum()), dtype=np.int64)
    for _ in range(horizon):
        lines = _grow(lines, model.offspring, rng)
    W = lines / mu**horizon
    owner = np.repeat(np.arange(size), Nm)
    sw = np.bincount(owner, weights=W, minlength=size)
    sw2 = np.bincount(owner, weights=W * W, minlength=size)
    fb = simulate_founders(model, horizon, 0, size, rng)
    X = fb.population / mu**horizon
    c = fb.counts.astype(float)
    V = np.bincount(fb.rep, weights=c * c, minlength=size) / mu ** (2 * horizon)
    return (sw2 + V) / (sw + X) ** 2


def limit_law_estimate(model: ModelSpec, m: int, n: int = DEFAULT_HORIZON, i: int = 2,
                       replicates: int = 10_000, seed: int = 0) -> McEstimate:
    """Estimate lim P(m <= X_2 < inf) = E[(sum W_l^2 + V) / (sum W_l + X)^2].

    The sums run over the ``N_m`` individuals of generation ``m``; every
    ``W_l`` and the pair ``(X, V)`` come from fresh independent trees grown to
    horizon ``n``, which stands in for ``n = inf`` with an ``O(mu**-n)`` error.
    """
    if i != 2:
        raise ValueError("the limit law is available for pairs (i = 2) only")
    if m < 0 or n < 1:
        raise ValueError("need m >= 0 and n >= 1")
    values = _run_blocks(lambda size, rng: _limit_block(model, m, n, size, rng), replicates, seed)
    return _summarize(values, seed, horizon_n=n, horizon_remainder=model.mu ** (-n))

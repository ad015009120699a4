"""Monte-Carlo hitting probabilities and an exact oracle for lattice chains.

Trials draw disturbances from a counter-based stream keyed by
(seed, trial, step), so results do not depend on how trials are split across
threads.  Simulation only ever estimates the probability of reaching the
target within the horizon; the report says so.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve
from scipy.stats import beta

from . import kernels
from .model import ProblemError, ProblemSpec, RegionSpec

SEMANTICS = ("reach-invariant", "reach-avoid")
OUTCOME_NAMES = {kernels.HIT: "hit", kernels.EXIT: "exit", kernels.CENSORED: "censored"}
MAX_LATTICE_STATES = 2_000_000


@dataclass(frozen=True)
class TrialConfig:
    seed: int = 0
    horizon: int = 200
    trials: int = 10_000
    semantics: str = "reach-invariant"
    workers: int = 1
    level: float = 0.99

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if self.semantics not in SEMANTICS:
            raise ValueError(f"semantics must be one of {SEMANTICS}")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TrialOutcome:
    kind: str  # hit | exit | censored
    step: int


@dataclass(frozen=True)
class ProbabilityEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    hits: int
    exits: int
    censored: int
    trials: int
    horizon: int
    semantics: str
    level: float
    x0: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "quantity": f"P(reach Xr within {self.horizon} steps)",
            "note": "finite-horizon estimate; a lower estimate of the eventual reach probability",
            "x0": list(self.x0),
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
            "hits": self.hits,
            "exits": self.exits,
            "censored": self.censored,
            "trials": self.trials,
            "horizon": self.horizon,
            "semantics": self.semantics,
        }


def clopper_pearson(hits: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    alpha = 1.0 - level
    lo = 0.0 if hits == 0 else float(beta.ppf(alpha / 2, hits, trials - hits + 1))
    hi = 1.0 if hits == trials else float(beta.ppf(1 - alpha / 2, hits + 1, trials - hits))
    return lo, hi


def _boxes(region: RegionSpec) -> np.ndarray:
    if region.is_empty():
        return np.zeros((0, region.arity, 2))
    return np.array([piece.bounds for piece in region.pieces], dtype=np.float64)


def _dynamics_arrays(spec: ProblemSpec):
    exps, coeffs, offsets = [], [], [0]
    for f in spec.model.dynamics:
        e, c = f.arrays()
        exps.append(e.reshape(-1, f.arity))
        coeffs.append(c)
        offsets.append(offsets[-1] + len(c))
    arity = spec.model.state_dim + spec.model.dist_dim
    return (np.ascontiguousarray(np.vstack(exps) if exps else np.zeros((0, arity)), dtype=np.int64),
            np.ascontiguousarray(np.concatenate(coeffs), dtype=np.float64),
            np.array(offsets, dtype=np.int64))


def simulate_trials(spec: ProblemSpec, x0: Sequence[float], config: TrialConfig) -> tuple[np.ndarray, np.ndarray]:
    """Outcome kind and step for every trial, in trial order."""
    x = np.asarray(x0, dtype=np.float64).reshape(-1)
    if x.size != spec.n:
        raise ProblemError(f"x0 has dimension {x.size}, expected {spec.n}")
    if not spec.X.contains_point(x):
        raise ProblemError("x0 not in X")
    dyn_exps, dyn_coeffs, offsets = _dynamics_arrays(spec)
    support = np.array(spec.dist.support, dtype=np.float64)
    cum = np.cumsum(spec.dist.probs)
    cum[-1] = 1.0
    target, domain = _boxes(spec.Xr), _boxes(spec.X)
    avoid = config.semantics == "reach-avoid"

    def run(start: int, count: int):
        return kernels.simulate(dyn_exps, dyn_coeffs, offsets, support, cum, x, target, domain,
                                config.seed, start, count, config.horizon, avoid)

    workers = max(1, min(config.workers, config.trials))
    if workers == 1:
        return run(0, config.trials)
    bounds = np.linspace(0, config.trials, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda i: run(int(bounds[i]), int(bounds[i + 1] - bounds[i])), range(workers)))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def simulate_reach(spec: ProblemSpec, x0: Sequence[float], config: TrialConfig, trial: int = 0) -> TrialOutcome:
    """Outcome of a single trial of the stream."""
    one = TrialConfig(config.seed, config.horizon, trial + 1, config.semantics, 1, config.level)
    kinds, steps = simulate_trials(spec, x0, one)
    return TrialOutcome(OUTCOME_NAMES[int(kinds[trial])], int(steps[trial]))


def estimate_probability(spec: ProblemSpec, x0: Sequence[float], config: TrialConfig,
                         csv_path: str | Path | None = None) -> ProbabilityEstimate:
    kinds, steps = simulate_trials(spec, x0, config)
    if csv_path is not None:
        write_trials_csv(csv_path, kinds, steps)
    hits = int(np.count_nonzero(kinds == kernels.HIT))
    exits = int(np.count_nonzero(kinds == kernels.EXIT))
    censored = config.trials - hits - exits
    lo, hi = clopper_pearson(hits, config.trials, config.level)
    return ProbabilityEstimate(hits / config.trials, lo, hi, hits, exits, censored, config.trials,
                               config.horizon, config.semantics, config.level,
                               tuple(float(t) for t in x0))


def write_trials_csv(path: str | Path, kinds: np.ndarray, steps: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["trial", "outcome", "step"])
        for i, (k, s) in enumerate(zip(kinds.tolist(), steps.tolist())):
            out.writerow([i, OUTCOME_NAMES[k], s])


def x0_grid(region: RegionSpec, per_dim: int = 3) -> list[tuple[float, ...]]:
    """Corner, center and evenly spaced points of each X0 piece."""
    pts: list[tuple[float, ...]] = []
    for piece in region.pieces:
        axes = [np.unique(np.linspace(lo, hi, per_dim)) for lo, hi in piece.bounds]
        for p in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, region.arity):
            t = tuple(float(v) for v in p)
            if t not in pts:
                pts.append(t)
    return pts


# ---------------------------------------------------------------------------
# exact oracle


@dataclass(frozen=True)
class ChainSolution:
    probabilities: dict[tuple[int, ...], float]
    step: tuple[float, ...]
    origin: tuple[float, ...]
    method: str
    semantics: str

    def index_of(self, x: Sequence[float]) -> tuple[int, ...]:
        idx = []
        for xi, h, o in zip(x, self.step, self.origin):
            q = (xi - o) / h
            r = round(q)
            if abs(q - r) > 1e-9:
                raise ProblemError(f"point {tuple(x)} is not on the lattice")
            idx.append(int(r))
        return tuple(idx)

    def at(self, x: Sequence[float]) -> float:
        key = self.index_of(x)
        if key not in self.probabilities:
            raise ProblemError(f"point {tuple(x)} is not a state of the chain")
        return self.probabilities[key]


def _lattice_states(region: RegionSpec, step, origin) -> list[tuple[int, ...]]:
    states: set[tuple[int, ...]] = set()
    for piece in region.pieces:
        ranges = []
        for (lo, hi), h, o in zip(piece.bounds, step, origin):
            a = math.ceil((lo - o) / h - 1e-9)
            b = math.floor((hi - o) / h + 1e-9)
            ranges.append(range(a, b + 1))
        count = math.prod(len(r) for r in ranges)
        if len(states) + count > MAX_LATTICE_STATES:
            raise ProblemError("lattice has too many states")
        for idx in np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, region.arity) if count else []:
            states.add(tuple(int(i) for i in idx))
    return sorted(states)


def exact_chain_probability(spec: ProblemSpec, step: Sequence[float], origin: Sequence[float] | None = None,
                            semantics: str = "reach-avoid", tol: float = 1e-12) -> ChainSolution:
    """Absorption probabilities into Xr for a chain living on a lattice.

    States are the lattice points of X.  Under reach-avoid a successor outside X
    is absorbing with value 0; under reach-invariant it is an error.
    """
    n = spec.n
    step = tuple(float(h) for h in step)
    origin = tuple(float(o) for o in origin) if origin is not None else (0.0,) * n
    if len(step) != n or len(origin) != n or any(not h > 0 for h in step):
        raise ProblemError("lattice step must be positive with one entry per state dimension")
    if semantics not in SEMANTICS:
        raise ProblemError(f"semantics must be one of {SEMANTICS}")
    states = _lattice_states(spec.X, step, origin)
    index = {s: i for i, s in enumerate(states)}

    def coord(s):
        return tuple(o + h * i for i, h, o in zip(s, step, origin))

    def snap(y):
        idx = []
        for yi, h, o in zip(y, step, origin):
            q = (yi - o) / h
            r = round(q)
            if abs(q - r) > 1e-9 * max(1.0, abs(q)):
                raise ProblemError(f"dynamics leave the lattice at {tuple(y)}")
            idx.append(int(r))
        return tuple(idx)

    N = len(states)
    target = np.array([spec.Xr.contains_point(coord(s)) for s in states], dtype=bool)
    succ: list[list[tuple[int, float]]] = [[] for _ in range(N)]
    for i, s in enumerate(states):
        if target[i]:
            continue
        x = coord(s)
        for j, p in enumerate(spec.dist.probs):
            y = spec.step(x, j)
            key = snap(y)
            if key in index:
                succ[i].append((index[key], p))
            elif spec.X.contains_point(coord(key)):
                raise ProblemError(f"successor {coord(key)} missing from the lattice")
            elif semantics == "reach-invariant":
                raise ProblemError(f"dynamics leave X at {coord(key)}; use reach-avoid")
            # exit under reach-avoid: contributes 0

    # states with no path to the target have probability 0
    pred: list[list[int]] = [[] for _ in range(N)]
    for i, out in enumerate(succ):
        for k, _ in out:
            pred[k].append(i)
    can = target.copy()
    queue = deque(np.flatnonzero(target).tolist())
    while queue:
        k = queue.popleft()
        for i in pred[k]:
            if not can[i]:
                can[i] = True
                queue.append(i)
    prob = np.where(target, 1.0, 0.0)
    unknown = np.flatnonzero(can & ~target)
    method = "direct"
    if unknown.size:
        pos = {int(i): r for r, i in enumerate(unknown)}
        rows, cols, vals = [], [], []
        rhs = np.zeros(unknown.size)
        for r, i in enumerate(unknown):
            rows.append(r), cols.append(r), vals.append(1.0)
            for k, p in succ[i]:
                if target[k]:
                    rhs[r] += p
                elif k in pos:
                    rows.append(r), cols.append(pos[k]), vals.append(-p)
        A = sparse.csc_matrix((vals, (rows, cols)), shape=(unknown.size, unknown.size))
        sol = None
        try:
            with np.errstate(all="ignore"):
                sol = spsolve(A, rhs)
            if not np.all(np.isfinite(sol)) or np.max(np.abs(A @ sol - rhs)) > 1e-10:
                sol = None
        except Exception:  # singular factorization
            sol = None
        if sol is None:
            method = "value-iteration"
            sol = _value_iteration(A, rhs, tol)
        prob[unknown] = np.clip(sol, 0.0, 1.0)
    return ChainSolution({s: float(prob[i]) for i, s in enumerate(states)}, step, origin, method, semantics)


def _value_iteration(A, rhs, tol, max_iter=10_000_000):
    # A = I - Q, iterate p <- Q p + rhs from 0 (monotone convergence)
    Q = sparse.identity(A.shape[0], format="csr") - A.tocsr()
    p = np.zeros_like(rhs)
    for _ in range(max_iter):
        nxt = Q @ p + rhs
        if np.max(np.abs(nxt - p)) <= tol:
            return nxt
        p = nxt
    raise ProblemError("value iteration did not converge")

"""Dense linear programming by revised simplex with Bland's rule.

Problems are stated as ``minimize/maximize c.z subject to G z >= h`` with
optional per-variable bounds.  The solver works on the dual
``max h.y s.t. G^T y = c, y >= 0`` whose basis has one row per primal
variable, which keeps the basis small when there are many sampled rows.  The
primal solution is read off the final simplex multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RESIDUAL_TOL = 1e-8
_PIVOT_TOL = 1e-6
_COST_TOL = 1e-13
_COST_TOL_MAX = 1e-8


@dataclass
class LpProblem:
    objective: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    sense: str = "min"
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=np.float64).ravel()
        n = self.objective.size
        self.rows = np.asarray(self.rows, dtype=np.float64).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=np.float64).ravel()
        if self.rhs.size != self.rows.shape[0]:
            raise ValueError("row count and rhs length differ")
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=np.float64)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=np.float64)
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        for arr in (self.objective, self.rows, self.rhs):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")

    @property
    def num_vars(self) -> int:
        return self.objective.size

    def residual(self, z: np.ndarray) -> float:
        """Largest violation of rows and bounds at ``z``."""
        worst = 0.0
        if self.rows.size:
            scale = np.maximum(1.0, np.abs(self.rows).max(axis=1))
            worst = max(worst, float(np.max((self.rhs - self.rows @ z) / scale, initial=0.0)))
        worst = max(worst, float(np.max(self.lower - z, initial=0.0)), float(np.max(z - self.upper, initial=0.0)))
        return worst


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | unresolved
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0
    message: str = ""


class _Simplex:
    """min cost.y subject to A y = b, y >= 0, two phases, Bland's rule."""

    def __init__(self, A: np.ndarray, b: np.ndarray, cost: np.ndarray, max_pivots: int):
        self.m, self.ncols = A.shape
        flip = b < 0
        self.flip = flip
        self.A = np.where(flip[:, None], -A, A)
        self.b = np.where(flip, -b, b)
        self.cost = cost
        self.max_pivots = max_pivots
        self.pivots = 0

    def _run(self, A, cost, basis, allowed):
        m = self.m
        # Bland's rule cannot revisit a basis in exact arithmetic; a repeat means
        # rounding noise in the reduced costs, so the tolerance is loosened
        cost_tol = _COST_TOL
        seen: set[tuple[int, ...]] = set()
        while True:
            if self.pivots >= self.max_pivots:
                return "pivot-limit", basis, None
            key = tuple(sorted(basis))
            if key in seen:
                if cost_tol >= _COST_TOL_MAX:
                    return "cycling", basis, None
                cost_tol *= 10.0
                seen.clear()
            seen.add(key)
            B = A[:, basis]
            try:
                xb = np.linalg.solve(B, self.b)
                pi = np.linalg.solve(B.T, cost[basis])
            except np.linalg.LinAlgError:
                return "singular", basis, None
            reduced = cost - A.T @ pi
            reduced[basis] = 0.0
            tol = cost_tol * max(1.0, float(np.abs(pi).max(initial=0.0)))
            cand = np.flatnonzero((reduced < -tol) & allowed)
            if cand.size == 0:
                return "optimal", basis, pi
            j = int(cand[0])
            u = np.linalg.solve(B, A[:, j])
            pos = u > _PIVOT_TOL * max(1.0, float(np.abs(u).max()))
            if not pos.any():
                return "unbounded", basis, pi
            ratios = np.full(m, np.inf)
            ratios[pos] = np.maximum(xb[pos], 0.0) / u[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, best))
            r = int(ties[np.argmin(np.asarray(basis)[ties])])
            basis = list(basis)
            basis[r] = j
            self.pivots += 1

    def solve(self):
        m, N = self.m, self.ncols
        A_full = np.hstack([self.A, np.eye(m)])
        phase1 = np.concatenate([np.zeros(N), np.ones(m)])
        basis = list(range(N, N + m))
        allowed = np.ones(N + m, dtype=bool)
        status, basis, _ = self._run(A_full, phase1, basis, allowed)
        if status != "optimal":
            return status, None, None
        xb = np.linalg.solve(A_full[:, basis], self.b)
        infeas = sum(xb[i] for i, col in enumerate(basis) if col >= N)
        if infeas > 1e-9 * max(1.0, float(np.abs(self.b).max(initial=0.0))):
            return "infeasible", None, None
        # drive zero-level artificials out where possible
        for i in range(m):
            if basis[i] < N:
                continue
            B = A_full[:, basis]
            row = np.linalg.solve(B, A_full[:, :N])[i]
            cand = [j for j in np.flatnonzero(np.abs(row) > 1e-7) if j not in basis]
            if cand:
                basis[i] = int(cand[0])
        allowed = np.concatenate([np.ones(N, dtype=bool), np.zeros(m, dtype=bool)])
        cost2 = np.concatenate([self.cost, np.zeros(m)])
        status, basis, pi = self._run(A_full, cost2, basis, allowed)
        if status != "optimal":
            return status, None, None
        y = np.zeros(N + m)
        y[basis] = np.linalg.solve(A_full[:, basis], self.b)
        pi = np.where(self.flip, -pi, pi)
        return "optimal", y[:N], pi


def _constraint_form(lp: LpProblem):
    rows = [lp.rows]
    rhs = [lp.rhs]
    n = lp.num_vars
    eye = np.eye(n)
    lo = np.isfinite(lp.lower)
    hi = np.isfinite(lp.upper)
    if lo.any():
        rows.append(eye[lo])
        rhs.append(lp.lower[lo])
    if hi.any():
        rows.append(-eye[hi])
        rhs.append(-lp.upper[hi])
    G = np.vstack(rows) if rows else np.zeros((0, n))
    h = np.concatenate(rhs)
    scale = np.linalg.norm(G, axis=1)
    keep = scale > 0
    # rows with all-zero coefficients are either trivially true or infeasible
    if np.any(~keep & (h > RESIDUAL_TOL)):
        return None, None
    G = G[keep] / scale[keep, None]
    h = h[keep] / scale[keep]
    return G, h


def solve_lp(lp: LpProblem, max_pivots: int = 50_000) -> LpResult:
    c = lp.objective if lp.sense == "min" else -lp.objective
    G, h = _constraint_form(lp)
    if G is None:
        return LpResult("infeasible", message="row with zero coefficients and positive rhs")
    solver = _Simplex(G.T.copy(), c.copy(), -h, max_pivots)
    status, _, pi = solver.solve()
    iters = solver.pivots
    if status == "optimal":
        z = -pi
        if lp.residual(z) > RESIDUAL_TOL:
            return LpResult("unresolved", iterations=iters, message=f"residual {lp.residual(z):.3g}")
        obj = float(lp.objective @ z)
        return LpResult("optimal", z, obj, iters)
    if status == "unbounded":
        return LpResult("infeasible", iterations=iters)
    if status == "infeasible":
        probe = _Simplex(G.T.copy(), np.zeros_like(c), -h, max_pivots)
        st, _, _ = probe.solve()
        iters += probe.pivots
        if st == "unbounded":
            return LpResult("infeasible", iterations=iters)
        if st == "optimal":
            return LpResult("unbounded", iterations=iters)
        return LpResult("unresolved", iterations=iters, message=st)
    return LpResult("unresolved", iterations=iters, message=status)

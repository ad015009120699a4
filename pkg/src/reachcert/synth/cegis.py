"""Counterexample-guided template synthesis.

Each obligation of a proposition is affine in the template coefficients and
the threshold parameter, so sampling the obligation regions gives a linear
program.  Its solution is a candidate only: the rigorous checker decides, and
its witnesses and unresolved boxes become new samples.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..certify import (
    BOUND_KIND, DEFAULT_DELTA, REQUIRED_PARAMS, THRESHOLD, CertReport, Certificate, CertifyError,
    PropositionId, check_certificate, compile_obligations,
)
from ..expectation import stopped_endpoints
from ..model import ProblemSpec, RegionSpec
from ..outcome import Status
from ..poly import Box, Polynomial, evaluate_many, monomial_basis
from ..regioncheck import DEFAULT_DEPTH, bound_infimum, bound_supremum
from .lp import LpProblem, LpResult, solve_lp

P = PropositionId

DEGREE_CAP = 24
USES_W = {P.P6, P.P6_XHAT, P.P7, P.P8, P.P13, P.P14, P.P14_ALPHA, P.P15}
# with use_w off these take w = M v for a swept M, the rest take w = 0
SCALED_W = {P.P6, P.P6_XHAT, P.P13}

# how the threshold is read off v over X0: (extreme, complement)
_THRESHOLD_FORM = {
    P.P2: ("sup", True),
    P.P6: ("inf", False),
    P.P6_XHAT: ("inf", False),
    P.P9: ("inf", False),
    P.P13: ("inf", True),
}


class SynthStatus(str, enum.Enum):
    CERTIFIED = "Certified"
    INFEASIBLE = "Infeasible"
    UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class TemplateSpec:
    degree_v: int = 2
    degree_w: int = 0
    use_w: bool = False
    fixed_params: Mapping[str, float] = field(default_factory=dict)
    objective: str | None = None  # "maximize" | "minimize" | None for the proposition default
    slack: float = 1e-4
    coeff_bound: float = 1e4
    grid: int = 5
    random_per_region: int = 64
    seed: int = 0
    w_scales: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0)

    def __post_init__(self):
        if self.degree_v < 0 or self.degree_w < 0:
            raise CertifyError("template degrees must be non-negative")
        if max(self.degree_v, self.degree_w) > DEGREE_CAP:
            raise CertifyError(f"template degree exceeds cap {DEGREE_CAP}")
        if self.objective not in (None, "maximize", "minimize"):
            raise CertifyError("objective must be 'maximize' or 'minimize'")
        if not self.slack >= 0 or not self.coeff_bound > 0:
            raise CertifyError("slack must be non-negative and coeff_bound positive")
        object.__setattr__(self, "fixed_params", dict(self.fixed_params))


@dataclass(frozen=True)
class Budget:
    iterations: int = 30
    seconds: float = 60.0


@dataclass
class SynthResult:
    status: SynthStatus
    certificate: Certificate | None = None
    report: CertReport | None = None
    iterations: int = 0
    samples_used: int = 0
    lp_objective: float | None = None
    history: list[dict] = field(default_factory=list)
    message: str = ""

    def to_dict(self, state_vars) -> dict:
        from ..certify import certificate_to_dict
        return {
            "status": self.status.value,
            "certificate": None if self.certificate is None else certificate_to_dict(self.certificate, state_vars),
            "report": None if self.report is None else self.report.to_dict(state_vars),
            "iterations": self.iterations,
            "samples_used": self.samples_used,
            "lp_objective": self.lp_objective,
            "history": self.history,
            "message": self.message,
        }


# ---------------------------------------------------------------------------
# template and sampling


def template_basis(spec: ProblemSpec, degree: int) -> list[Polynomial]:
    """Chebyshev products over the domain's bounding box rescaled to [-1, 1].

    The span is that of all monomials of total degree <= ``degree``; the
    Chebyshev form keeps the sampled LP columns well conditioned.
    """
    box = spec.domain().bounding_box()
    n = spec.n
    cheb: list[list[Polynomial]] = []
    for i, (lo, hi) in enumerate(box.bounds):
        half = (hi - lo) / 2.0
        mid = (hi + lo) / 2.0
        xi = Polynomial.variable(n, i)
        z = (xi - mid) / half if half > 0 else xi - mid
        seq = [Polynomial.constant(n, 1.0), z]
        while len(seq) <= degree:
            seq.append(2.0 * z * seq[-1] - seq[-2])
        cheb.append(seq)
    out = []
    for exps in monomial_basis(n, degree):
        term = Polynomial.constant(n, 1.0)
        for i, e in enumerate(exps):
            if e:
                term = term * cheb[i][e]
        out.append(term)
    if not out:
        raise CertifyError("empty template basis")
    return out


def initial_samples(region: RegionSpec, grid: int, random_count: int, rng: np.random.Generator) -> np.ndarray:
    pts: list[tuple[float, ...]] = []
    for piece in region.pieces:
        axes = [np.unique(np.linspace(lo, hi, grid)) for lo, hi in piece.bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts.extend(map(tuple, np.stack([m.ravel() for m in mesh], axis=1)))
    pieces = region.pieces
    for _ in range(random_count):
        piece = pieces[int(rng.integers(len(pieces)))]
        pts.append(tuple(rng.uniform(piece.lo, piece.hi)))
    return _dedupe(np.asarray(pts, dtype=np.float64).reshape(-1, region.arity))


def _dedupe(pts: np.ndarray) -> np.ndarray:
    _, idx = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(idx)]


# ---------------------------------------------------------------------------
# LP construction


@dataclass
class _Layout:
    v_basis: list[Polynomial]
    w_basis: list[Polynomial]
    w_scale: float | None
    threshold: str | None
    sense: str | None

    @property
    def size(self) -> int:
        return len(self.v_basis) + len(self.w_basis) + (1 if self.threshold else 0)


def _w_mode(prop: PropositionId, template: TemplateSpec) -> str:
    if prop not in USES_W:
        return "none"
    if template.use_w:
        return "free"
    return "scaled" if prop in SCALED_W else "zero"


def _base_params(prop: PropositionId, template: TemplateSpec) -> dict[str, float]:
    params = dict(template.fixed_params)
    if "delta" in REQUIRED_PARAMS[prop]:
        params.setdefault("delta", DEFAULT_DELTA)
    missing = [p for p in REQUIRED_PARAMS[prop]
               if p not in params and (THRESHOLD[prop] is None or p != THRESHOLD[prop][0])]
    if missing:
        raise CertifyError(f"{prop.value}: synthesis needs fixed values for {', '.join(missing)}")
    return params


def _layout(prop, template, spec, w_scale) -> _Layout:
    v_basis = template_basis(spec, template.degree_v)
    mode = _w_mode(prop, template)
    w_basis = template_basis(spec, template.degree_w) if mode == "free" else []
    thr = THRESHOLD[prop]
    threshold = None
    sense = None
    if thr is not None and thr[0] not in template.fixed_params:
        threshold = thr[0]
        sense = template.objective or ("maximize" if thr[1] else "minimize")
        if (sense == "maximize") != thr[1]:
            raise CertifyError(f"objective {sense} does not improve the {BOUND_KIND[prop]} bound of {prop.value}")
    return _Layout(v_basis, w_basis, w_scale if mode == "scaled" else None, threshold, sense)


def _probe(prop, spec, params, v, w, w_scale):
    if w_scale is not None:
        w = w_scale * v
    cert = Certificate(prop, v, w, params)
    return compile_obligations(prop, cert, spec)


def _stopped_rows(spec: ProblemSpec, basis: list[Polynomial], pts: np.ndarray, k: int) -> np.ndarray:
    """Row block of v(x) - E[v(stopped_k(x))] for each basis element."""
    out = np.zeros((pts.shape[0], len(basis)))
    for r, x in enumerate(pts):
        if spec.Xr.contains_point(x):
            continue
        ends = stopped_endpoints(spec, x, k)
        ys = np.array([y for _, y in ends])
        ws = np.array([p for p, _ in ends])
        for c, phi in enumerate(basis):
            out[r, c] = evaluate_many(phi, x[None, :])[0] - ws @ evaluate_many(phi, ys)
    return out


def build_lp(prop, template: TemplateSpec, spec: ProblemSpec, samples: Mapping[RegionSpec, np.ndarray],
             w_scale: float | None = None) -> tuple[LpProblem, _Layout]:
    """Sampled relaxation: one row per obligation and sample point.

    Rows read ``q(x) >= slack * |row|`` where q is the oriented obligation, so
    the slack is a distance in coefficient space and vanishes where every
    template agrees (fixed points of the dynamics, for instance).
    """
    prop = PropositionId.parse(prop)
    params = _base_params(prop, template)
    lay = _layout(prop, template, spec, w_scale)
    n = spec.n
    zero = Polynomial.zero(n)
    thr = lay.threshold

    base_params = dict(params)
    if thr:
        base_params[thr] = 0.0
    base = _probe(prop, spec, base_params, zero, zero, lay.w_scale)
    v_cols = [_probe(prop, spec, base_params, phi, zero, lay.w_scale) for phi in lay.v_basis]
    w_cols = [_probe(prop, spec, base_params, zero, psi, None) for psi in lay.w_basis]
    t_col = _probe(prop, spec, {**base_params, thr: 1.0}, zero, zero, lay.w_scale) if thr else None

    rows: list[np.ndarray] = []
    rhs: list[np.ndarray] = []
    for i, ob in enumerate(base):
        if ob.region.is_empty():
            continue
        pts = samples.get(ob.region)
        if pts is None or len(pts) == 0:
            raise CertifyError(f"no samples for the region of '{ob.label}'")
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, n)
        if ob.stopped_k is not None:
            block = _stopped_rows(spec, lay.v_basis, pts, ob.stopped_k)
            if lay.w_basis:
                block = np.hstack([block, np.zeros((len(pts), len(lay.w_basis)))])
            if thr:
                block = np.hstack([block, np.zeros((len(pts), 1))])
            q0 = np.zeros(len(pts))
        else:
            q0 = evaluate_many(ob.oriented(), pts)
            cols = [evaluate_many(c[i].oriented(), pts) - q0 for c in v_cols]
            cols += [evaluate_many(c[i].oriented(), pts) - q0 for c in w_cols]
            if thr:
                cols.append(evaluate_many(t_col[i].oriented(), pts) - q0)
            block = np.stack(cols, axis=1)
        norms = np.linalg.norm(block, axis=1)
        keep = (norms > 1e-12) | (q0 < -1e-9)
        rows.append(block[keep])
        rhs.append(template.slack * norms[keep] - q0[keep])

    size = lay.size
    G = np.vstack(rows) if rows else np.zeros((0, size))
    h = np.concatenate(rhs) if rhs else np.zeros(0)
    R = template.coeff_bound
    lower = np.full(size, -R)
    upper = np.full(size, R)
    objective = np.zeros(size)
    if thr:
        lower[-1], upper[-1] = 0.0, 1.0
        objective[-1] = 1.0
    names = [f"a{j}" for j in range(len(lay.v_basis))] + [f"b{j}" for j in range(len(lay.w_basis))]
    if thr:
        names.append(thr)
    sense = "max" if lay.sense == "maximize" else "min"
    return LpProblem(objective, G, h, lower, upper, sense, names), lay


def _assemble(prop, template, spec, lay: _Layout, z: np.ndarray, depth_limit: int) -> Certificate:
    nv, nw = len(lay.v_basis), len(lay.w_basis)
    v = Polynomial.zero(spec.n)
    for a, phi in zip(z[:nv], lay.v_basis):
        v = v + float(a) * phi
    w = None
    if lay.w_basis:
        w = Polynomial.zero(spec.n)
        for b, psi in zip(z[nv:nv + nw], lay.w_basis):
            w = w + float(b) * psi
    elif lay.w_scale is not None:
        w = lay.w_scale * v
    elif prop in USES_W:
        w = Polynomial.zero(spec.n)
    params = _base_params(prop, template)
    if lay.w_scale is not None:
        params["M"] = lay.w_scale
    if lay.threshold:
        extreme, complement = _THRESHOLD_FORM.get(prop, ("sup", False))
        if extreme == "sup":
            val = bound_supremum(v, spec.X0, depth_limit)
        else:
            val = bound_infimum(v, spec.X0, depth_limit)
        if complement:
            val = 1.0 - val
        if lay.threshold.endswith("_prime"):
            val = min(max(val, 0.0), 1.0)
        params[lay.threshold] = val
    return Certificate(prop, v, w, params)


# ---------------------------------------------------------------------------
# loop


def _new_points(report: CertReport, limit: int = 8) -> dict[RegionSpec, list[tuple[float, ...]]]:
    found: dict[RegionSpec, list[tuple[float, ...]]] = {}
    for ob, out in report.obligations:
        if out.status is Status.DISPROVED and out.witness is not None:
            found.setdefault(ob.region, []).append(tuple(out.witness))
        elif out.status is Status.UNKNOWN:
            found.setdefault(ob.region, []).extend(b.center() for b in out.frontier[:limit])
    return found


def _grow(samples: dict, region: RegionSpec, pts, rng, extra: int) -> int:
    old = samples[region]
    merged = _dedupe(np.vstack([old, np.asarray(pts, dtype=np.float64).reshape(-1, region.arity)]))
    if len(merged) == len(old):
        merged = _dedupe(np.vstack([old, initial_samples(region, 0, extra, rng)]))
    samples[region] = merged
    return len(merged) - len(old)


def _run(prop, template, spec, budget, depth_limit, w_scale, start, workers) -> SynthResult:
    rng = np.random.default_rng(template.seed)
    probe_params = _base_params(prop, template)
    thr = THRESHOLD[prop]
    if thr is not None and thr[0] not in probe_params:
        probe_params[thr[0]] = 0.0
    zero = Polynomial.zero(spec.n)
    regions = []
    for ob in _probe(prop, spec, probe_params, zero, zero, None):
        if not ob.region.is_empty() and ob.region not in regions:
            regions.append(ob.region)
    samples = {r: initial_samples(r, template.grid, template.random_per_region, rng) for r in regions}
    history: list[dict] = []
    result = SynthResult(SynthStatus.UNRESOLVED, message="budget exhausted")
    for it in range(1, budget.iterations + 1):
        lp, lay = build_lp(prop, template, spec, samples, w_scale)
        sol: LpResult = solve_lp(lp)
        used = sum(len(s) for s in samples.values())
        entry = {"iteration": it, "lp": sol.status, "samples": used}
        history.append(entry)
        if sol.status == "infeasible":
            return SynthResult(SynthStatus.INFEASIBLE, iterations=it, samples_used=used, history=history,
                               message="sampled relaxation infeasible")
        if sol.status != "optimal":
            return SynthResult(SynthStatus.UNRESOLVED, iterations=it, samples_used=used, history=history,
                               message=f"LP {sol.status}: {sol.message}")
        try:
            cert = _assemble(prop, template, spec, lay, sol.x, depth_limit)
            report = check_certificate(prop, cert, spec, depth_limit, workers=workers)
        except CertifyError as exc:
            entry["status"] = "invalid"
            result = SynthResult(SynthStatus.UNRESOLVED, iterations=it, samples_used=used, history=history,
                                 lp_objective=sol.objective, message=str(exc))
            break
        entry["status"] = report.status.value
        if lay.threshold:
            entry[lay.threshold] = cert.params[lay.threshold]
        result = SynthResult(SynthStatus.UNRESOLVED, cert, report, it, used, sol.objective, history,
                             "budget exhausted")
        if report.status is Status.PROVED:
            result.status = SynthStatus.CERTIFIED
            result.message = ""
            return result
        if not all(o.proved for _, o in report.assumptions):
            result.message = "required assumption not proved"
            return result
        grown = 0
        for region, pts in _new_points(report).items():
            if region in samples:
                grown += _grow(samples, region, pts, rng, 16)
        if grown == 0:
            for region in regions:
                grown += _grow(samples, region, np.zeros((0, spec.n)), rng, 16)
        if time.monotonic() - start > budget.seconds:
            result.message = "time budget exhausted"
            break
    return result


def synthesize_cegis(prop, template: TemplateSpec, spec: ProblemSpec, budget: Budget | None = None,
                     depth_limit: int = DEFAULT_DEPTH, workers: int = 1) -> SynthResult:
    prop = PropositionId.parse(prop)
    budget = budget or Budget()
    start = time.monotonic()
    if _w_mode(prop, template) != "scaled":
        return _run(prop, template, spec, budget, depth_limit, None, start, workers)
    best = None
    for m in template.w_scales:
        res = _run(prop, template, spec, budget, depth_limit, float(m), start, workers)
        if res.status is SynthStatus.CERTIFIED:
            return res
        best = res if best is None or res.status is SynthStatus.UNRESOLVED else best
        if time.monotonic() - start > budget.seconds:
            break
    return best

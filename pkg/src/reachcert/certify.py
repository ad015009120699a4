"""Certificate conditions, checking, closed-form bounds and embeddings.

Every proposition compiles to a list of sign obligations over box regions.
Obligations that quantify over the transient set use closure(X minus Xr);
the strict inequality of the almost-sure condition is strengthened by
``strict_margin``.  In xhat mode the families that allow a non-invariant X
additionally constrain v on closure(Xhat minus X).
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .expectation import k_post_expectation, post_expectation, stopped_expectation_check
from .model import ProblemError, ProblemSpec, RegionSpec, boundary_faces, check_assumption1, check_xhat
from .outcome import CheckOutcome, Status, worst
from .poly import Polynomial, PolyError, parse_poly
from .regioncheck import DEFAULT_DEPTH, DEFAULT_MARGIN, SignObligation, bound_supremum, prove_sign

DEFAULT_DELTA = 1e-3
DEFAULT_STRICT_MARGIN = 1e-6


class CertifyError(ValueError):
    """Missing or out-of-range parameter, or an incompatible problem."""


class PropositionId(str, enum.Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    P5 = "P5"
    P6 = "P6"
    P6_XHAT = "P6-xhat"
    P7 = "P7"
    P8 = "P8"
    P9 = "P9"
    P10 = "P10"
    P11 = "P11"
    P12 = "P12"
    P13 = "P13"
    P14 = "P14"
    P14_ALPHA = "P14-alpha"
    P15 = "P15"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str | "PropositionId") -> "PropositionId":
        if isinstance(text, PropositionId):
            return text
        for member in cls:
            if member.value.lower() == str(text).strip().lower():
                return member
        raise CertifyError(f"unknown proposition {text!r}")


P = PropositionId

# propositions whose proof needs X to be invariant
NEEDS_INVARIANCE = {P.P1, P.P2, P.P3, P.P4, P.P5, P.P7, P.P13, P.P14, P.P14_ALPHA, P.P15}
# propositions that admit an over-set Xhat instead
XHAT_FAMILY = {P.P6, P.P6_XHAT, P.P8, P.P9, P.P10, P.P11, P.P12}

REQUIRED_PARAMS: dict[PropositionId, tuple[str, ...]] = {
    P.P1: ("eps2",),
    P.P2: ("eps1", "delta"),
    P.P3: ("c",),
    P.P4: ("eps2_prime", "k", "c"),
    P.P5: ("eps1_prime", "k", "c", "delta"),
    P.P6: ("eps1",),
    P.P6_XHAT: ("eps1",),
    P.P7: ("eps2",),
    P.P8: ("eps2",),
    P.P9: ("eps1", "lambda"),
    P.P10: ("eps2_prime", "lambda", "N"),
    P.P11: ("eps2_prime", "alpha_tilde", "beta_tilde", "N"),
    P.P12: ("eps2_prime", "alpha_tilde", "beta_tilde", "N"),
    P.P13: ("eps1_prime", "k"),
    P.P14: ("eps2_prime", "k", "c"),
    P.P14_ALPHA: ("eps2_prime", "k", "alpha"),
    P.P15: ("eps2_prime", "k", "c"),
}

# threshold parameter compared against v on X0, and whether a larger value is better
THRESHOLD: dict[PropositionId, tuple[str, bool] | None] = {
    P.P1: ("eps2", False),
    P.P2: ("eps1", True),
    P.P3: None,
    P.P4: ("eps2_prime", False),
    P.P5: ("eps1_prime", False),
    P.P6: ("eps1", True),
    P.P6_XHAT: ("eps1", True),
    P.P7: ("eps2", False),
    P.P8: ("eps2", False),
    P.P9: ("eps1", True),
    P.P10: ("eps2_prime", False),
    P.P11: ("eps2_prime", False),
    P.P12: ("eps2_prime", False),
    P.P13: ("eps1_prime", False),
    P.P14: ("eps2_prime", False),
    P.P14_ALPHA: ("eps2_prime", False),
    P.P15: ("eps2_prime", False),
}

BOUND_KIND = {
    P.P1: "upper", P.P2: "lower", P.P3: "almost-sure", P.P4: "upper", P.P5: "lower",
    P.P6: "lower", P.P6_XHAT: "lower", P.P7: "upper", P.P8: "upper", P.P9: "lower",
    P.P10: "upper", P.P11: "upper", P.P12: "upper", P.P13: "lower", P.P14: "upper",
    P.P14_ALPHA: "upper", P.P15: "upper",
}

FINITE_HORIZON = {P.P10, P.P11, P.P12}
INTEGER_PARAMS = {"k", "N"}
PARAM_NAMES = ("eps1", "eps2", "eps1_prime", "eps2_prime", "k", "c", "delta", "lambda",
               "alpha_tilde", "beta_tilde", "alpha", "N", "M")


@dataclass(frozen=True)
class Certificate:
    prop: PropositionId
    v: Polynomial
    w: Polynomial | None = None
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "prop", PropositionId.parse(self.prop))
        clean = {}
        for key, val in dict(self.params).items():
            if key not in PARAM_NAMES:
                raise CertifyError(f"unknown parameter {key!r}")
            clean[key] = int(val) if key in INTEGER_PARAMS else float(val)
        object.__setattr__(self, "params", clean)
        if self.w is not None and self.w.arity != self.v.arity:
            raise CertifyError("v and w have different arity")

    def with_params(self, **updates) -> "Certificate":
        params = dict(self.params)
        params.update(updates)
        return Certificate(self.prop, self.v, self.w, params)

    def for_prop(self, prop) -> "Certificate":
        return Certificate(prop, self.v, self.w, self.params)


@dataclass(frozen=True)
class Bound:
    kind: str
    value: float
    horizon: int | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value,
                "horizon": "infinite" if self.horizon is None else self.horizon}


@dataclass
class CertReport:
    prop: PropositionId
    status: Status
    obligations: list[tuple[SignObligation, CheckOutcome]]
    bound: Bound | None
    assumptions: list[tuple[str, CheckOutcome]]
    semantics: str
    margin: float
    strict_margin: float
    depth_limit: int
    notes: list[str] = field(default_factory=list)

    def to_dict(self, state_vars) -> dict:
        return {
            "prop": self.prop.value,
            "status": self.status.value,
            "semantics": self.semantics,
            "bound": None if self.bound is None else self.bound.to_dict(),
            "margin": self.margin,
            "strict_margin": self.strict_margin,
            "depth_limit": self.depth_limit,
            "assumptions": [{"name": n, **o.to_dict()} for n, o in self.assumptions],
            "obligations": [
                {"label": ob.label, "sense": ob.sense, "region": ob.region.to_lists(),
                 "poly": ob.poly.to_string(state_vars),
                 **({"stopped_k": ob.stopped_k} if ob.stopped_k else {}), **out.to_dict()}
                for ob, out in self.obligations
            ],
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# parameter validation


def _param(cert: Certificate, name: str) -> float:
    try:
        return cert.params[name]
    except KeyError:
        raise CertifyError(f"{cert.prop.value}: missing parameter {name!r}") from None


def validate_params(prop: PropositionId, params: Mapping[str, float]) -> None:
    prop = PropositionId.parse(prop)
    for name in REQUIRED_PARAMS[prop]:
        if name not in params:
            raise CertifyError(f"{prop.value}: missing parameter {name!r}")
    p = params
    for name in ("eps1", "eps2", "eps1_prime", "eps2_prime", "c", "delta", "lambda",
                 "alpha_tilde", "beta_tilde", "alpha", "M"):
        if name in p and not math.isfinite(p[name]):
            raise CertifyError(f"parameter {name} must be finite")
    for name in ("eps1_prime", "eps2_prime"):
        if name in REQUIRED_PARAMS[prop] and not 0.0 <= p[name] <= 1.0:
            raise CertifyError(f"{name} must lie in [0, 1]")
    if "k" in REQUIRED_PARAMS[prop] and (int(p["k"]) != p["k"] or p["k"] < 1):
        raise CertifyError("k must be a positive integer")
    if "N" in REQUIRED_PARAMS[prop] and (int(p["N"]) != p["N"] or p["N"] < 0):
        raise CertifyError("N must be a non-negative integer")
    if "c" in REQUIRED_PARAMS[prop]:
        if prop is P.P3 and not p["c"] > 0:
            raise CertifyError("c must be positive")
        if p["c"] < 0:
            raise CertifyError("c must be non-negative")
    if "delta" in REQUIRED_PARAMS[prop] and not p["delta"] > 0:
        raise CertifyError("delta must be positive")
    if "lambda" in REQUIRED_PARAMS[prop] and not p["lambda"] > 0:
        raise CertifyError("lambda must be positive")
    if "alpha" in REQUIRED_PARAMS[prop] and not p["alpha"] > 0:
        raise CertifyError("alpha must be positive")
    if "alpha_tilde" in REQUIRED_PARAMS[prop]:
        a = p["alpha_tilde"]
        if prop is P.P12 and not 0 < a < 1:
            raise CertifyError("alpha_tilde must lie in (0, 1)")
        if not 0 < a <= 1:
            raise CertifyError("alpha_tilde must lie in (0, 1]")
    if "beta_tilde" in REQUIRED_PARAMS[prop] and not 0 <= p["beta_tilde"] < 1:
        raise CertifyError("beta_tilde must lie in [0, 1)")


# ---------------------------------------------------------------------------
# obligation compilers


def _uses_xhat(prop: PropositionId, spec: ProblemSpec) -> bool:
    if prop is P.P6_XHAT:
        if spec.mode != "xhat":
            raise CertifyError("P6-xhat needs a problem in xhat mode")
        return True
    return prop in XHAT_FAMILY and spec.mode == "xhat"


def compile_obligations(prop, cert: Certificate, spec: ProblemSpec,
                        margin: float = DEFAULT_MARGIN,
                        strict_margin: float = DEFAULT_STRICT_MARGIN) -> list[SignObligation]:
    prop = PropositionId.parse(prop)
    validate_params(prop, cert.params)
    n = spec.n
    v = cert.v
    if v.arity != n:
        raise CertifyError(f"v has arity {v.arity}, state dimension is {n}")
    w = cert.w if cert.w is not None else Polynomial.zero(n)
    if w.arity != n:
        raise CertifyError(f"w has arity {w.arity}, state dimension is {n}")
    one = Polynomial.constant(n, 1.0)
    X, X0, Xr = spec.X, spec.X0, spec.Xr
    D = spec.transient()
    xhat = _uses_xhat(prop, spec)
    out_region = spec.outside() if xhat else RegionSpec(n)

    def ob(poly: Polynomial, region: RegionSpec, sense: str, label: str, stopped_k=None):
        return SignObligation(poly, region, sense, margin, label, stopped_k)

    def T(u: Polynomial) -> Polynomial:
        return post_expectation(u, spec)

    def Tk(u: Polynomial, k: int) -> Polynomial:
        return k_post_expectation(u, spec, k)

    def faces() -> RegionSpec:
        try:
            return boundary_faces(X, Xr)
        except ProblemError:
            raise CertifyError(f"{prop.value} needs X to be a single box") from None

    g = lambda name: _param(cert, name)  # noqa: E731
    obs: list[SignObligation] = []

    if prop is P.P1:
        obs = [
            ob(v - g("eps2"), X0, "<=0", "v <= eps2 on X0"),
            ob(v - 1.0, Xr, ">=0", "v >= 1 on Xr"),
            ob(v - T(v), X, ">=0", "E[v(f)] - v <= 0 on X"),
            ob(v, X, ">=0", "v >= 0 on X"),
        ]
    elif prop is P.P2:
        obs = [
            ob(v - (1.0 - g("eps1")), X0, "<=0", "v <= 1 - eps1 on X0"),
            ob(v - 1.0, faces(), ">=0", "v >= 1 on boundary of X outside boundary of Xr"),
            ob(v - T(v) - g("delta"), D, ">=0", "E[v(f)] - v <= -delta on closure(X minus Xr)"),
            ob(v, X, ">=0", "v >= 0 on X"),
        ]
    elif prop is P.P3:
        c = g("c")
        obs = [
            ob(v - c, D, ">=0", "v >= c on X minus Xr"),
            ob(c - v - strict_margin, Xr, ">=0", "v < c on Xr (strict, strengthened)"),
            ob(v - T(v) - 1.0, D, ">=0", "E[v(f)] - v <= -1 on X minus Xr"),
            ob(v, X, ">=0", "v >= 0 on X"),
        ]
    elif prop is P.P4:
        k, c = int(g("k")), g("c")
        obs = [
            ob(v - g("eps2_prime"), X0, "<=0", "v <= eps2' on X0"),
            ob(v - 1.0, Xr, ">=0", "v >= 1 on Xr"),
            ob(v + c - T(v), X, ">=0", "E[v(f)] - v <= c on X"),
            ob(v - Tk(v, k), X, ">=0", "E[v(f^k)] - v <= 0 on X"),
            ob(v, X, ">=0", "v >= 0 on X"),
        ]
    elif prop is P.P5:
        k, c = int(g("k")), g("c")
        obs = [
            ob(v - g("eps1_prime"), X0, "<=0", "v <= eps1' on X0"),
            ob(v - 1.0, faces(), ">=0", "v >= 1 on boundary of X outside boundary of Xr"),
            ob(v + c - T(v), D, ">=0", "E[v(f)] - v <= c on closure(X minus Xr)"),
            ob(v - Tk(v, k) - g("delta"), D, ">=0", "E[v(f^k)] - v <= -delta on closure(X minus Xr)"),
            ob(v, X, ">=0", "v >= 0 on X"),
        ]
    elif prop in (P.P6, P.P6_XHAT):
        obs = [
            ob(v - g("eps1"), X0, ">=0", "v >= eps1 on X0"),
            ob(T(v) - v, D, ">=0", "v <= E[v(f)] on X minus Xr"),
            ob(T(w) - w - v, D, ">=0", "v <= E[w(f)] - w on X minus Xr"),
            ob(one - v, Xr, ">=0", "v <= 1 on Xr"),
        ]
        if xhat:
            obs.append(ob(v, out_region, "<=0", "v <= 0 on Xhat minus X"))
    elif prop in (P.P7, P.P8):
        obs = [
            ob(v - g("eps2"), X0, "<=0", "v <= eps2 on X0"),
            ob(v - T(v), D, ">=0", "v >= E[v(f)] on X minus Xr"),
            ob(v - (T(w) - w), D, ">=0", "v >= E[w(f)] - w on X minus Xr"),
            ob(v - 1.0, Xr, ">=0", "v >= 1 on Xr"),
        ]
        if xhat:
            obs.append(ob(v, out_region, ">=0", "v >= 0 on Xhat minus X"))
    elif prop is P.P9:
        lam = g("lambda")
        obs = [
            ob(v - g("eps1"), X0, ">=0", "v >= eps1 on X0"),
            ob(lam * (T(v) - v) - v, D, ">=0", "v <= lambda (E[v(f)] - v) on X minus Xr"),
            ob(one - v, Xr, ">=0", "v <= 1 on Xr"),
        ]
        if xhat:
            obs.append(ob(v, out_region, "<=0", "v <= 0 on Xhat minus X"))
    elif prop is P.P10:
        lam = g("lambda")
        obs = [
            ob(v - g("eps2_prime"), X0, "<=0", "v <= eps2' on X0"),
            ob(v - lam * (T(v) - v), D, ">=0", "v >= lambda (E[v(f)] - v) on X minus Xr"),
            ob(v - 1.0, Xr, ">=0", "v >= 1 on Xr"),
        ]
        if xhat:
            obs.append(ob(v, out_region, ">=0", "v >= 0 on Xhat minus X"))
    elif prop is P.P11:
        a, b = g("alpha_tilde"), g("beta_tilde")
        obs = [
            ob(v - g("eps2_prime"), X0, "<=0", "v <= eps2' on X0"),
            ob(v - a * T(v) + a * b, D, ">=0", "v >= a E[v(f)] - a b on X minus Xr"),
            ob(v - 1.0, Xr, ">=0", "v >= 1 on Xr"),
            ob(v, D, ">=0", "v >= 0 on X minus Xr"),
        ]
        if xhat:
            obs.append(ob(v, out_region, ">=0", "v >= 0 on Xhat minus X"))
    elif prop is P.P12:
        a, b = g("alpha_tilde"), g("beta_tilde")
        obs = [
            ob(v - g("eps2_prime"), X0, "<=0", "v <= eps2' on X0"),
            ob(v - a * T(v) + a * b, D, ">=0", "v >= a E[v(f)] - a b on X minus Xr"),
            ob(v - 1.0, Xr, ">=0", "v >= 1 on Xr"),
        ]
        if xhat:
            obs.append(ob(v + a * b / (1.0 - a), out_region, ">=0",
                          "v >= -a b / (1 - a) on Xhat minus X"))
    elif prop is P.P13:
        k = int(g("k"))
        obs = [
            ob(v - (1.0 - g("eps1_prime")), X0, ">=0", "v >= 1 - eps1' on X0"),
            ob(Tk(v, k) - v, D, ">=0", "v <= E[v(f^k)] on X minus Xr"),
            ob(Tk(w, k) - w - v, D, ">=0", "v <= E[w(f^k)] - w on X minus Xr"),
            ob(one - v, Xr, ">=0", "v <= 1 on Xr"),
        ]
    elif prop in (P.P14, P.P14_ALPHA):
        k = int(g("k"))
        if prop is P.P14:
            second = ob(v + g("c") - T(v), X, ">=0", "c + v >= E[v(f)] on X")
        else:
            second = ob(g("alpha") * v - T(v), X, ">=0", "E[v(f)] - alpha v <= 0 on X")
        obs = [
            ob(v - g("eps2_prime"), X0, "<=0", "v <= eps2' on X0"),
            second,
            ob(v - Tk(v, k), D, ">=0", "v >= E[v(f^k)] on X minus Xr"),
            ob(v - (Tk(w, k) - w), D, ">=0", "v >= E[w(f^k)] - w on X minus Xr"),
            ob(v - 1.0, Xr, ">=0", "v >= 1 on Xr"),
        ]
    elif prop is P.P15:
        k = int(g("k"))
        obs = [
            ob(v - g("eps2_prime"), X0, "<=0", "v <= eps2' on X0"),
            ob(v - T(v) + g("c"), D, ">=0", "v >= E[v(f)] - c on X minus Xr"),
            ob(v, X, ">=0", "v >= E[v(stopped after k steps)] on X", stopped_k=k),
            ob(v - (T(w) - w), D, ">=0", "v >= E[w(f)] - w on X minus Xr"),
            ob(v - 1.0, Xr, ">=0", "v >= 1 on Xr"),
        ]
    return obs


# ---------------------------------------------------------------------------
# bounds


def _exact(x) -> Fraction:
    return Fraction(repr(float(x))) if not isinstance(x, int) else Fraction(x)


def certified_bound(prop, params: Mapping[str, float]) -> Bound:
    """Closed-form probability bound, evaluated exactly and rounded once."""
    prop = PropositionId.parse(prop)
    validate_params(prop, params)
    q = {k: _exact(v) for k, v in params.items() if k in REQUIRED_PARAMS[prop]}
    horizon = int(params["N"]) if prop in FINITE_HORIZON else None
    if prop is P.P1 or prop in (P.P7, P.P8):
        val = q["eps2"]
    elif prop in (P.P2, P.P6, P.P6_XHAT, P.P9):
        val = q["eps1"]
    elif prop is P.P3:
        val = Fraction(1)
    elif prop in (P.P4, P.P14):
        k = q["k"]
        val = k * q["eps2_prime"] + k * (k - 1) * q["c"] / 2
    elif prop is P.P5:
        k = q["k"]
        val = 1 - k * q["eps1_prime"] - k * (k - 1) * q["c"] / 2
    elif prop is P.P13:
        val = 1 - q["eps1_prime"]
    elif prop is P.P10:
        lam = q["lambda"]
        val = ((1 + lam) / lam) ** horizon * q["eps2_prime"]
    elif prop is P.P11:
        a, b, e = q["alpha_tilde"], q["beta_tilde"], q["eps2_prime"]
        if a == 1:
            val = e + b * horizon
        else:
            inv = a ** (-horizon)
            val = e * inv + (1 - inv) * a * b / (a - 1)
    elif prop is P.P12:
        a, b, e = q["alpha_tilde"], q["beta_tilde"], q["eps2_prime"]
        inv = a ** (-horizon)
        val = (e * inv * (1 - a) + a * b * inv) / (1 + a * b - a)
    elif prop is P.P14_ALPHA:
        a, k, e = q["alpha"], q["k"], q["eps2_prime"]
        val = k * e if a == 1 else e * (1 - a ** int(k)) / (1 - a)
    elif prop is P.P15:
        val = q["eps2_prime"] + (q["k"] - 1) * q["c"] / 2
    else:  # pragma: no cover
        raise CertifyError(f"no bound for {prop}")
    return Bound(BOUND_KIND[prop], float(val), horizon)


# ---------------------------------------------------------------------------
# checking


def semantics_of(prop: PropositionId, spec: ProblemSpec) -> str:
    if prop in XHAT_FAMILY and spec.mode == "xhat":
        return "reach-avoid"
    return "reach"


def required_assumption(prop: PropositionId, spec: ProblemSpec) -> str:
    if _uses_xhat(prop, spec):
        return "Xhat contains f(X, Theta)"
    return "X invariant under f"


def _dispatch(ob: SignObligation, spec: ProblemSpec, depth_limit: int) -> CheckOutcome:
    if ob.region.is_empty():
        return CheckOutcome(Status.PROVED)
    if ob.stopped_k is not None:
        return stopped_expectation_check(ob.poly, spec, ob.stopped_k, ob.region, depth_limit, ob.margin)
    return prove_sign(ob, depth_limit)


def check_certificate(prop, cert: Certificate, spec: ProblemSpec, depth_limit: int = DEFAULT_DEPTH,
                      margin: float = DEFAULT_MARGIN, strict_margin: float = DEFAULT_STRICT_MARGIN,
                      workers: int = 1) -> CertReport:
    prop = PropositionId.parse(prop)
    obligations = compile_obligations(prop, cert, spec, margin, strict_margin)
    if _uses_xhat(prop, spec):
        assumption = ("Xhat contains f(X, Theta)", check_xhat(spec, depth_limit))
    else:
        assumption = ("X invariant under f", check_assumption1(spec, depth_limit))
    if workers > 1 and len(obligations) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda o: _dispatch(o, spec, depth_limit), obligations))
    else:
        outcomes = [_dispatch(o, spec, depth_limit) for o in obligations]
    notes: list[str] = []
    ob_status = worst(o.status for o in outcomes)
    status = worst([ob_status, assumption[1].status])
    if not assumption[1].proved:
        if prop in NEEDS_INVARIANCE or spec.mode != "xhat":
            notes.append("X is not proved invariant; use P6, P8-P12 with an Xhat in xhat mode")
        else:
            notes.append("Xhat is not proved to contain the one-step image of X")
    if prop is P.P15:
        notes.append("stopped constraint checked as v >= E[v(stopped)], the direction the bound needs")
    if prop is P.P12:
        notes.append("bound conditioned on X0")
    if spec.xhat_defaulted and _uses_xhat(prop, spec):
        notes.append(f"Xhat defaulted to {spec.Xhat.to_lists()}")
    bound = certified_bound(prop, cert.params) if status is Status.PROVED else None
    return CertReport(prop, status, list(zip(obligations, outcomes)), bound, [assumption],
                      semantics_of(prop, spec), margin, strict_margin, depth_limit, notes)


# ---------------------------------------------------------------------------
# embeddings


class EmbeddingError(ValueError):
    pass


def dualize(v: Polynomial) -> Polynomial:
    return Polynomial.constant(v.arity, 1.0) - v


def embed_zero_w(cert: Certificate, spec: ProblemSpec, depth_limit: int = DEFAULT_DEPTH,
                 margin: float = DEFAULT_MARGIN) -> Certificate:
    """Upper-bound certificate with w = 0 from a nonnegative supermartingale one."""
    if cert.prop is not P.P1:
        raise EmbeddingError("embed_zero_w expects a P1 certificate")
    pos = prove_sign(SignObligation(cert.v, spec.X, ">=0", margin, "v >= 0 on X"), depth_limit)
    if not pos.proved:
        raise EmbeddingError(f"v >= 0 on X is {pos.status.value}")
    return Certificate(P.P7, cert.v, Polynomial.zero(cert.v.arity), {"eps2": _param(cert, "eps2")})


def embedding_scale(sup_bound: float, delta: float) -> float:
    """M with M * delta >= sup_bound, doubled for slack."""
    if not delta > 0:
        raise EmbeddingError("delta must be positive")
    if not math.isfinite(sup_bound):
        raise EmbeddingError("sup bound must be finite")
    m = 2 * math.ceil(sup_bound / delta)
    return float(max(m, 1))


def embed_supermartingale(cert: Certificate, sup_bound: float) -> Certificate:
    """Lower-bound certificate (u, M u) with u = 1 - v from a P2 certificate.

    ``sup_bound`` must bound sup over X of u = 1 - v.
    """
    if cert.prop is not P.P2:
        raise EmbeddingError("embed_supermartingale expects a P2 certificate")
    delta = cert.params.get("delta", 0.0)
    m = embedding_scale(sup_bound, delta)
    u = dualize(cert.v)
    return Certificate(P.P6, u, m * u, {"eps1": _param(cert, "eps1"), "M": m})


def embed_p2(cert: Certificate, spec: ProblemSpec, depth_limit: int = DEFAULT_DEPTH) -> Certificate:
    """embed_supermartingale with the sup bound computed over X."""
    return embed_supermartingale(cert, bound_supremum(dualize(cert.v), spec.X, depth_limit))


# ---------------------------------------------------------------------------
# certificate files


def certificate_from_dict(data: dict, state_vars) -> Certificate:
    if "prop" not in data or "v" not in data:
        raise CertifyError("certificate needs 'prop' and 'v'")
    try:
        v = parse_poly(data["v"], state_vars)
        w = parse_poly(data["w"], state_vars) if data.get("w") is not None else None
    except PolyError as exc:
        raise CertifyError(f"certificate polynomial: {exc}") from None
    return Certificate(PropositionId.parse(data["prop"]), v, w, dict(data.get("params", {})))


def certificate_to_dict(cert: Certificate, state_vars) -> dict:
    out: dict[str, Any] = {"prop": cert.prop.value, "v": cert.v.to_string(state_vars),
                           "params": dict(sorted(cert.params.items()))}
    if cert.w is not None:
        out["w"] = cert.w.to_string(state_vars)
    return out


def read_certificate_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise CertifyError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CertifyError(f"{path}: parse error at line {exc.lineno} column {exc.colno}") from None


def load_certificate(path: str | Path, spec: ProblemSpec) -> Certificate:
    return certificate_from_dict(read_certificate_file(path), spec.state_vars)


def save_certificate(cert: Certificate, spec: ProblemSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(certificate_to_dict(cert, spec.state_vars), indent=2, sort_keys=True) + "\n")

"""Template synthesis: sampled linear programs closed by the rigorous checker."""

from .cegis import Budget, SynthResult, SynthStatus, TemplateSpec, build_lp, synthesize_cegis, template_basis
from .lp import LpProblem, LpResult, solve_lp

__all__ = [
    "LpProblem", "LpResult", "solve_lp",
    "Budget", "TemplateSpec", "SynthResult", "SynthStatus", "build_lp", "synthesize_cegis", "template_basis",
]

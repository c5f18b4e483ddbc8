"""coniq: an interior-point solver for conic programs with quadratic objectives."""

from .model import (
    EXP,
    NONNEG,
    POW,
    PSD,
    SOC,
    ZERO,
    BadConeParameter,
    ConeDimensionMismatch,
    ConeSpec,
    DimensionMismatch,
    NonFiniteData,
    ProblemData,
    ProblemError,
    Settings,
    SolveResult,
    Status,
    validate_problem,
)

__version__ = "0.1.0"

__all__ = [
    "EXP",
    "NONNEG",
    "POW",
    "PSD",
    "SOC",
    "ZERO",
    "BadConeParameter",
    "ConeDimensionMismatch",
    "ConeSpec",
    "DimensionMismatch",
    "NonFiniteData",
    "ProblemData",
    "ProblemError",
    "Settings",
    "SolveResult",
    "Status",
    "__version__",
    "solve",
    "validate_problem",
]


def solve(problem, settings=None, log_sink=None, **overrides):
    """Solve a conic program; lazy import keeps model-only use light.

    Keyword overrides are applied on top of ``settings``. Sparse PSD blocks
    are decomposed along their clique structure first (see ``chordal``)
    unless ``chordal=False``.
    """
    from .solver import solve as _solve

    settings = settings or Settings()
    if overrides:
        settings = settings.copy(**overrides)
    if settings.chordal and any(c.kind == PSD for c in problem.cones):
        from .chordal import decompose, recover

        transformed, dmap = decompose(problem, settings)
        if dmap is not None:
            return recover(_solve(transformed, settings, log_sink), dmap)
    return _solve(problem, settings, log_sink)

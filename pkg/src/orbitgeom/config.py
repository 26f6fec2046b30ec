"""Global numerical tolerances.

All thresholds default to 1e-10 absolute on matrix-valued residuals. The
module-level ``tolerances`` instance is consulted by every routine that does
not receive an explicit override, so the whole stack can be tightened or
relaxed in one place.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class Tolerances:
    matrix_residual: float = 1e-10      # reconstruction / orthogonality residuals (max-norm)
    boundary_band: float = 1e-8         # |radial - 1| band counting as "on the curve"
    certificate_residual: float = 1e-8  # largest accepted certificate mismatch
    recheck_residual: float = 1e-12     # independent re-evaluation agreement
    tie_gap: float = 1e-9               # relative singular-value gap treated as tied
    degenerate_rank: float = 1e-10      # sv_min <= tol * sv_max marks a degenerate shape
    off_span_tol: float = 1e-8          # component off a degenerate span treated as unreachable
    bisection_xtol: float = 1e-12
    bisection_gtol: float = 1e-12
    max_bisection_iter: int = 200

    def as_dict(self) -> dict:
        return asdict(self)


tolerances = Tolerances()

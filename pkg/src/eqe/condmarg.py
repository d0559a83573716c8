"""Conditionals and marginals of the quartic exponential under coordinate
splits x = (x1, x2).

Both reduce to the same observation: with q = q1 + q2 the joint exponent
lambda1 q - lambda2 q**2 splits into a term in q1 alone plus
(lambda1 - 2 lambda2 q1) q2 - lambda2 q2**2, so conditioning shifts the
linear coefficient and marginalizing integrates x2 into a lower-dimensional
normalization constant at that shifted coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core
from .errors import ConvergenceError, DomainError

_PEAK_GRID_SIZE = 512
_PEAK_TOL = 1e-10


@dataclass(frozen=True)
class BlockSplit:
    """Split of the coordinates into a leading block of dim1 and a trailing
    block of dim2; dim1 + dim2 must equal the dimension of the law it is
    used with."""

    dim1: int
    dim2: int

    def __post_init__(self):
        for name in ("dim1", "dim2"):
            val = getattr(self, name)
            if isinstance(val, bool) or not float(val).is_integer() or val < 1:
                raise DomainError(
                    f"{name} must be a positive integer, got {val!r}")
            object.__setattr__(self, name, int(val))

    @property
    def total_dim(self) -> int:
        return self.dim1 + self.dim2


def _check_split(p: core.RadialParams, split: BlockSplit) -> None:
    if isinstance(p, core.EllipticalParams):
        raise DomainError(
            "conditionals and marginals are defined for the spherical form; "
            "whiten elliptical data first (axis-aligned blocks only)")
    if not isinstance(p, core.RadialParams):
        raise DomainError(f"expected RadialParams, got {type(p)!r}")
    if split.total_dim != p.dim:
        raise DomainError(
            f"split {split.dim1}+{split.dim2} does not cover dim {p.dim}")


def conditional_params(p: core.RadialParams, split: BlockSplit,
                       x2_norm_sq: float) -> core.RadialParams:
    """Law of x1 given |x2|**2 = x2_norm_sq: same lambda2, linear
    coefficient shifted to lambda1 - 2 lambda2 x2_norm_sq.

    For lambda1 > 0 the result is annular exactly when x2_norm_sq lies
    inside the squared mode radius, and unimodal at the origin otherwise.
    """
    _check_split(p, split)
    x2_norm_sq = float(x2_norm_sq)
    if not (math.isfinite(x2_norm_sq) and x2_norm_sq >= 0.0):
        raise DomainError(
            f"x2_norm_sq must be finite and nonnegative, got {x2_norm_sq}")
    return core.RadialParams(split.dim1,
                             p.lambda1 - 2.0 * p.lambda2 * x2_norm_sq,
                             p.lambda2)


def _marginal_log_density_q(p: core.RadialParams, split: BlockSplit,
                            q1: float) -> float:
    shifted = p.lambda1 - 2.0 * p.lambda2 * q1
    log_z_inner = core.log_norm_const(
        core.RadialParams(split.dim2, shifted, p.lambda2))
    return (p.lambda1 * q1 - p.lambda2 * q1 * q1 + log_z_inner
            - core.log_norm_const(p))


def marginal_log_density(p: core.RadialParams, split: BlockSplit,
                         x1) -> float:
    """Log density of the leading block at the point x1, with the trailing
    dim2 coordinates integrated out.

    The inner integral over x2 is exactly the dim2-dimensional
    normalization constant at the shifted linear coefficient, so

        log p(x1) = lambda1 q1 - lambda2 q1**2
                    + log Z_dim2(lambda1 - 2 lambda2 q1, lambda2)
                    - log Z_D(lambda1, lambda2),   q1 = |x1|**2.
    """
    _check_split(p, split)
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    if x1.shape != (split.dim1,):
        raise DomainError(
            f"x1 must be a vector of length {split.dim1}, got shape "
            f"{x1.shape}")
    if not np.all(np.isfinite(x1)):
        raise DomainError("x1 must be finite")
    return _marginal_log_density_q(p, split, float(x1 @ x1))


def _marginal_slope(p: core.RadialParams, split: BlockSplit,
                    q1: float) -> float:
    """d/dq1 of the marginal log density.

    By the gradient identity d log Z / d lambda1 = E[q], this is exactly
    shifted - 2 lambda2 E[q2 | shifted], no finite differencing needed.
    """
    shifted = p.lambda1 - 2.0 * p.lambda2 * q1
    inner = core.RadialParams(split.dim2, shifted, p.lambda2)
    return shifted - 2.0 * p.lambda2 * core.radial_moment(inner, 2)


def marginal_peaks(p: core.RadialParams, split: BlockSplit) -> list[float]:
    """Radii of the local maxima of the marginal density along r1 = |x1|,
    ascending.  Includes 0.0 when the marginal decays from the origin.

    The slope in q1 is bounded above by the shifted linear coefficient,
    which is negative for q1 past the squared mode radius, so every
    stationary point lies in [0, R**2]; a sign-change scan over a grid
    clustered toward R brackets them and bisection sharpens each to 1e-10
    in r.  The marginal has at most two stationary points in r1; more sign
    changes than that indicate a numerical fault and raise.
    """
    _check_split(p, split)
    slope0 = _marginal_slope(p, split, 0.0)
    if p.lambda1 <= 0.0 or slope0 == 0.0:
        # slope <= shifted coefficient <= lambda1 <= 0: monotone decay
        return [0.0]
    r_mode = core.mode_radius(p)
    # grid over (0, R), log-clustered toward R where the crossing sits
    gaps = r_mode * np.exp(np.linspace(math.log(1e-12), 0.0,
                                       _PEAK_GRID_SIZE))
    grid = np.concatenate(([0.0], (r_mode - gaps)[::-1], [r_mode]))
    slopes = [slope0]
    slopes.extend(_marginal_slope(p, split, r * r) for r in grid[1:])
    crossings = []
    for i in range(len(grid) - 1):
        if slopes[i] > 0.0 >= slopes[i + 1]:
            crossings.append((grid[i], grid[i + 1], 1))
        elif slopes[i] < 0.0 <= slopes[i + 1]:
            crossings.append((grid[i], grid[i + 1], -1))
    if len(crossings) > 2:
        raise ConvergenceError(
            f"found {len(crossings)} stationary points of the marginal; "
            "at most two are possible for a quartic exponent")
    peaks = [0.0] if slope0 < 0.0 else []
    for lo, hi, direction in crossings:
        if direction != 1:
            continue  # minimum
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo <= _PEAK_TOL:
                break
            if _marginal_slope(p, split, mid * mid) > 0.0:
                lo = mid
            else:
                hi = mid
        peaks.append(0.5 * float(lo + hi))
    return sorted(peaks)

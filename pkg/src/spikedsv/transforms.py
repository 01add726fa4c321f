"""The D-transform, its edge limits and inverses, and the rectangular C/U pair.

For a singular-value law mu with aspect ratio c = lim n/m in [0, 1],

    D(z) = phi_mu(z) * (c * phi_mu(z) + (1 - c)/z),        z > b,

with phi_mu(z) the integral of z/(z^2 - t^2) dmu(t).  D is positive and
strictly decreasing on (b, inf), so it has a functional inverse there; the
critical spike strength for the largest singular value is D(b+)^(-1/2).  The
square-matrix smallest-singular-value analogue replaces D by phi itself on
(0, a).

One-sided limits at the support edges are taken along the geometric sequence
eps_k = (b - a + 1) * 2^-k, k = 10..40, with a divergence cutoff of 1e12 and
a Cauchy stop at relative 1e-6, followed by Aitken extrapolation of the last
three values.  Divergence (including failure to pass the Cauchy test by the
end of the sequence) is a legal outcome and maps to threshold 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from . import measures
from .errors import DomainError, NonConvergence, OutOfRange
from .measures import SpectralMeasure, SupportBounds

EDGE_SEQ_KMIN = 10
EDGE_SEQ_KMAX = 40
EDGE_DIVERGENCE_CUTOFF = 1e12
EDGE_CAUCHY_RTOL = 1e-6
INVERSE_RTOL = 1e-12


@dataclass
class TransformContext:
    """A measure with its aspect ratio and cached support data.

    Immutable in spirit: the only mutation is memoization of the edge
    limits, which is idempotent and safe under concurrent use.
    """

    mu: SpectralMeasure
    c: float
    bounds: SupportBounds = field(init=False)
    mu_tilde: SpectralMeasure = field(init=False)
    _d_at_b_plus: Optional[float] = field(init=False, default=None, repr=False)
    _phi_at_a_minus_abs: Optional[float] = field(init=False, default=None, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise DomainError("aspect ratio c must lie in [0, 1]")
        self.bounds = measures.support_bounds(self.mu)
        self.mu_tilde = measures.tilde(self.mu, self.c)


def phi_tilde(ctx: TransformContext, z: float) -> float:
    """phi of the tilde measure, via linearity: c * phi_mu(z) + (1 - c)/z."""
    val = ctx.c * measures.phi(ctx.mu, z) if ctx.c > 0.0 else 0.0
    return val + (1.0 - ctx.c) / z


def d_transform(ctx: TransformContext, z: float) -> float:
    """D(z) for z above the support; positive and strictly decreasing."""
    if z <= ctx.bounds.b:
        raise DomainError(f"D-transform needs z > b = {ctx.bounds.b}, got {z!r}")
    p = measures.phi(ctx.mu, z)
    return p * (ctx.c * p + (1.0 - ctx.c) / z)


def d_prime(ctx: TransformContext, z: float) -> float:
    """dD/dz by the product rule; strictly negative for z > b."""
    if z <= ctx.bounds.b:
        raise DomainError(f"D-transform needs z > b = {ctx.bounds.b}, got {z!r}")
    p = measures.phi(ctx.mu, z)
    dp = measures.phi_prime(ctx.mu, z)
    pt = ctx.c * p + (1.0 - ctx.c) / z
    dpt = ctx.c * dp - (1.0 - ctx.c) / (z * z)
    return dp * pt + p * dpt


def _aitken(v0: float, v1: float, v2: float) -> float:
    d1 = v1 - v0
    d2 = v2 - v1
    den = d2 - d1
    if den == 0.0 or not math.isfinite(den):
        return v2
    out = v2 - d2 * d2 / den
    # Reject wild extrapolations from a non-geometric tail.
    if not math.isfinite(out) or abs(out - v2) > 10.0 * abs(d2) + 1e-300:
        return v2
    return out


def _one_sided_limit(f, edge: float, side: int, scale: float) -> Optional[float]:
    """Limit of f along edge + side * eps_k; None signals divergence.

    A square-root edge makes the raw values converge like sqrt(eps_k), whose
    increments only reach ~1.4e-6 relative by k = 40, so the Cauchy stop is
    applied to the Aitken-accelerated sequence (the raw errors form a clean
    geometric ladder in k, which Aitken strips mode by mode).  Slowly
    diverging sequences (log singularities) defeat the acceleration and fall
    through to the divergence outcome, as they should.
    """
    raw = []
    acc = []
    for k in range(EDGE_SEQ_KMIN, EDGE_SEQ_KMAX + 1):
        z = edge + side * scale * 2.0**-k
        if z <= 0.0:
            continue
        try:
            v = f(z)
        except NonConvergence:
            continue
        if not math.isfinite(v) or abs(v) > EDGE_DIVERGENCE_CUTOFF:
            return None
        raw.append(v)
        if len(raw) < 3:
            continue
        acc.append(_aitken(raw[-3], raw[-2], raw[-1]))
        if len(acc) < 2:
            continue
        settled = abs(acc[-1] - acc[-2]) <= EDGE_CAUCHY_RTOL * max(abs(acc[-1]), 1e-30)
        shrinking = abs(raw[-1] - raw[-2]) <= abs(raw[-2] - raw[-3]) + 1e-30
        if settled and shrinking:
            if len(acc) >= 3:
                return _aitken(acc[-3], acc[-2], acc[-1])
            return acc[-1]
    return None


def d_at_b_plus(ctx: TransformContext) -> float:
    """One-sided limit D(b+); +inf when the transform diverges at the edge."""
    if ctx._d_at_b_plus is None:
        scale = ctx.bounds.b - ctx.bounds.a + 1.0
        lim = _one_sided_limit(lambda z: d_transform(ctx, z), ctx.bounds.b, +1, scale)
        ctx._d_at_b_plus = math.inf if lim is None else lim
    return ctx._d_at_b_plus


def threshold_large(ctx: TransformContext) -> float:
    """Critical spike strength D(b+)^(-1/2), with (+inf)^(-1/2) = 0."""
    d = d_at_b_plus(ctx)
    return 0.0 if math.isinf(d) else d**-0.5


def d_inverse(ctx: TransformContext, w: float) -> float:
    """The unique z in (b, inf) with D(z) = w.

    Bracket expansion (upper bound doubling from b + 1) followed by
    bisection; bisection rather than Newton because D' blows up at the edge
    for fractional-power edge densities.
    """
    if w <= 0.0:
        raise DomainError(f"d_inverse needs w > 0, got {w!r}")
    dbp = d_at_b_plus(ctx)
    if w >= dbp:
        raise OutOfRange(
            f"w = {w!r} is not below D(b+) = {dbp!r}: spike below threshold"
        )
    b = ctx.bounds.b
    span = ctx.bounds.b - ctx.bounds.a + 1.0

    lo = 1e-3 * span
    while d_transform(ctx, b + lo) <= w:
        lo /= 16.0
        if lo < 1e-18 * span:
            return b + lo
    hi = 1.0
    while d_transform(ctx, b + hi) >= w:
        hi *= 2.0
        if hi > 2.0**70:
            raise NonConvergence("upper bracket expansion failed in d_inverse")
    lo = min(lo, 0.25 * hi)

    while hi - lo > INVERSE_RTOL * max(1.0, b + hi):
        mid = 0.5 * (lo + hi)
        if d_transform(ctx, b + mid) > w:
            lo = mid
        else:
            hi = mid
    return b + 0.5 * (lo + hi)


def phi_at_a_minus_abs(ctx: TransformContext) -> float:
    """|phi(a-)| in the square regime; +inf when phi diverges at the edge.

    Only defined for c = 1 with a > 0 (the smallest-singular-value theory
    avoids rectangular matrices, where D is non-monotone on [0, a)).
    """
    if ctx.c != 1.0:
        raise DomainError("phi_at_a_minus_abs requires the square regime c = 1")
    a = ctx.bounds.a
    if a <= 0.0:
        raise DomainError("phi_at_a_minus_abs requires a > 0")
    if ctx._phi_at_a_minus_abs is None:
        scale = ctx.bounds.b - a + 1.0
        lim = _one_sided_limit(lambda z: abs(measures.phi(ctx.mu, z)), a, -1, scale)
        ctx._phi_at_a_minus_abs = math.inf if lim is None else lim
    return ctx._phi_at_a_minus_abs


def threshold_small(ctx: TransformContext) -> float:
    """Critical spike strength 1/|phi(a-)|, with (+inf)^(-1) = 0."""
    p = phi_at_a_minus_abs(ctx)
    return 0.0 if math.isinf(p) else 1.0 / p


def phi_inverse_small(ctx: TransformContext, theta: float) -> float:
    """The unique z in (0, a) with phi(z) = -1/theta.

    phi decreases from 0 at z = 0+ to phi(a-) < 0, so the equation
    |phi(z)| = 1/theta has exactly one root once theta exceeds the
    small-spike threshold.
    """
    if theta <= 0.0:
        raise DomainError(f"theta must be positive, got {theta!r}")
    if ctx.c != 1.0:
        raise DomainError("phi_inverse_small requires the square regime c = 1")
    a = ctx.bounds.a
    if a <= 0.0:
        raise DomainError("phi_inverse_small requires a > 0")
    if theta <= threshold_small(ctx):
        raise OutOfRange(f"theta = {theta!r} at or below the small-spike threshold")
    target = -1.0 / theta

    lo = a * 1e-12
    if measures.phi(ctx.mu, lo) <= target:
        raise OutOfRange(f"no root above {lo!r}; theta too large for this measure")
    hi_off = a * 1e-3
    while measures.phi(ctx.mu, a - hi_off) >= target:
        hi_off /= 16.0
        if hi_off < a * 1e-17:
            raise OutOfRange(
                f"phi never crosses -1/theta near a; theta = {theta!r} is subcritical"
            )
    hi = a - hi_off

    while hi - lo > INVERSE_RTOL * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if measures.phi(ctx.mu, mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def u_function(c: float, z: float) -> float:
    """Inverse of u -> c u^2 + (c+1) u on the principal branch; U(z) = z at c = 0."""
    if not 0.0 <= c <= 1.0:
        raise DomainError("u_function requires 0 <= c <= 1")
    if c == 0.0:
        return z
    radicand = (c + 1.0) ** 2 + 4.0 * c * z
    if radicand < 0.0:
        raise DomainError(f"u_function radicand negative at z = {z!r}")
    return (-(c + 1.0) + math.sqrt(radicand)) / (2.0 * c)


def c_transform(ctx: TransformContext, z: float) -> float:
    """Rectangular-convolution linearizer U(z * Dinv(z)^2 - 1) with ratio c."""
    if z <= 0.0:
        raise DomainError(f"c_transform needs z > 0, got {z!r}")
    zinv = d_inverse(ctx, z)
    return u_function(ctx.c, z * zinv * zinv - 1.0)


def phi_prime_at_b_plus(ctx: TransformContext) -> float:
    """One-sided limit phi'(b+); -inf when the derivative diverges.

    Divergence here is the delocalization hypothesis of the subcritical
    singular-vector statement, and corresponds to edge decay exponent
    alpha <= 1.
    """
    scale = ctx.bounds.b - ctx.bounds.a + 1.0
    lim = _one_sided_limit(
        lambda z: measures.phi_prime(ctx.mu, z), ctx.bounds.b, +1, scale
    )
    return -math.inf if lim is None else lim

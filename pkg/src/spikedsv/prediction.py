"""Asymptotic predictions for low-rank additive spikes.

Given a limiting singular-value law, an aspect ratio, and spike strengths
theta_1 >= ... >= theta_r, this module produces the almost-sure limits of the
perturbed matrix's extreme singular values, the squared projections of the
corresponding singular vectors onto the planted directions, and (for a single
spike) the standard deviation of the sqrt(n)-scale Gaussian fluctuations.

Supercritical spikes (theta above the threshold) detach from the bulk edge;
subcritical ones stick to it and their predicted projections are zero.  The
zero-projection statement carries an extra hypothesis (divergence of phi' at
the edge), which is reported via ``delocalization_hypothesis_met`` rather
than silently assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

from . import measures, transforms
from .errors import DomainError, InvalidSpec, NegativeVariance, OutOfRange
from .measures import SpectralMeasure
from .transforms import TransformContext

MODELS = ("iid", "orthonormalized")
FIELDS = ("real", "complex")


@dataclass(frozen=True)
class SpikeSpec:
    """Spike strengths plus the perturbation model and scalar field.

    ``model`` selects how the planted directions are drawn: raw normalized
    random columns ("iid") or orthonormalized blocks ("orthonormalized").
    ``field`` selects real (beta = 1) or complex (beta = 2) scalars.
    """

    thetas: Tuple[float, ...]
    model: str = "orthonormalized"
    field: str = "real"

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        object.__setattr__(self, "thetas", thetas)
        if not thetas:
            raise InvalidSpec("at least one spike strength is required")
        if any(t <= 0 for t in thetas):
            raise InvalidSpec("spike strengths must be positive")
        if any(a < b for a, b in zip(thetas, thetas[1:])):
            raise InvalidSpec("spike strengths must be non-increasing")
        if self.model not in MODELS:
            raise InvalidSpec(f"model must be one of {MODELS}, got {self.model!r}")
        if self.field not in FIELDS:
            raise InvalidSpec(f"field must be one of {FIELDS}, got {self.field!r}")

    @property
    def r(self) -> int:
        return len(self.thetas)

    @property
    def beta(self) -> int:
        return 1 if self.field == "real" else 2


@dataclass(frozen=True)
class SpikePrediction:
    theta: float
    supercritical: bool
    limit: float
    left_proj_sq: float
    right_proj_sq: float
    fluct_std: Optional[float] = None
    delocalization_hypothesis_met: Optional[bool] = None


def classify_edge(alpha: float) -> Tuple[bool, bool]:
    """Phase-transition consequences of edge decay f(t) ~ M (b-t)^alpha.

    Returns (threshold positive, phi' diverges at the edge); the second flag
    is the delocalization hypothesis for subcritical spikes.  Both hold in
    the square-root-edge case alpha = 1/2.
    """
    if alpha <= -1.0:
        raise DomainError("edge decay exponent must exceed -1")
    return (alpha > 0.0, alpha <= 1.0)


def _deloc_flag(mu: SpectralMeasure, edge: str) -> Optional[bool]:
    if mu.density is None:
        return None
    alpha = mu.density.edge_alpha[1 if edge == "upper" else 0]
    if alpha is None:
        return None
    return classify_edge(alpha)[1]


def predict_projections_largest(ctx: TransformContext, theta: float) -> Tuple[float, float]:
    """Squared projection limits onto the planted left/right spans.

    left  = -2 phi(rho)        / (theta^2 D'(rho))
    right = -2 phi_tilde(rho)  / (theta^2 D'(rho)),  rho = Dinv(1/theta^2).
    """
    if theta <= transforms.threshold_large(ctx):
        raise OutOfRange(f"theta = {theta!r} is subcritical for the largest spike")
    rho = transforms.d_inverse(ctx, 1.0 / (theta * theta))
    dp = transforms.d_prime(ctx, rho)
    p = measures.phi(ctx.mu, rho)
    pt = transforms.phi_tilde(ctx, rho)
    denom = theta * theta * dp
    return (-2.0 * p / denom, -2.0 * pt / denom)


def predict_largest(ctx: TransformContext, spec: SpikeSpec) -> List[SpikePrediction]:
    """One prediction per spike for the top of the spectrum."""
    bar = transforms.threshold_large(ctx)
    deloc = _deloc_flag(ctx.mu, "upper")
    out = []
    for theta in spec.thetas:
        if theta > bar:
            rho = transforms.d_inverse(ctx, 1.0 / (theta * theta))
            left, right = predict_projections_largest(ctx, theta)
            std = None
            if spec.r == 1:
                std = fluct_std_largest(ctx, spec)
            out.append(SpikePrediction(theta, True, rho, left, right, std, deloc))
        else:
            out.append(
                SpikePrediction(theta, False, ctx.bounds.b, 0.0, 0.0, None, deloc)
            )
    return out


def predict_projections_smallest_square(
    ctx: TransformContext, theta: float
) -> Tuple[float, float]:
    """Both squared projections equal -1/phi'(rho) in the square case."""
    if theta <= transforms.threshold_small(ctx):
        raise OutOfRange(f"theta = {theta!r} is subcritical for the smallest spike")
    rho = transforms.phi_inverse_small(ctx, theta)
    val = -1.0 / measures.phi_prime(ctx.mu, rho)
    return (val, val)


def predict_smallest_square(ctx: TransformContext, spec: SpikeSpec) -> List[SpikePrediction]:
    """One prediction per spike for the bottom of a square matrix's spectrum."""
    if ctx.c != 1.0:
        raise DomainError("smallest-singular-value predictions require c = 1")
    if ctx.bounds.a <= 0.0:
        raise DomainError("smallest-singular-value predictions require a > 0")
    under = transforms.threshold_small(ctx)
    deloc = _deloc_flag(ctx.mu, "lower")
    out = []
    for theta in spec.thetas:
        if theta > under:
            rho = transforms.phi_inverse_small(ctx, theta)
            left, right = predict_projections_smallest_square(ctx, theta)
            std = None
            if spec.r == 1:
                std = fluct_std_smallest_square(ctx, spec)
            out.append(SpikePrediction(theta, True, rho, left, right, std, deloc))
        else:
            out.append(
                SpikePrediction(theta, False, ctx.bounds.a, 0.0, 0.0, None, deloc)
            )
    return out


def _near_upper_edge(ctx: TransformContext, z: float) -> Optional[str]:
    if ctx.mu.density is None:
        return None
    d = ctx.mu.density
    return "upper" if z - d.b < measures.NEAR_EDGE_FRACTION * (d.b - d.a) else None


def fluct_std_largest(ctx: TransformContext, spec: SpikeSpec) -> float:
    """Std of sqrt(n) (sigma_1(perturbed) - rho) for a single spike.

    The fluctuation comes from the root shift of the 2x2 master determinant
    phi(z) phi_tilde(z) - 1/theta^2 under the sqrt(n)-scale noise of its
    entries: the entry noise has variance f^2-ish combinations (two
    squared-ratio terms over mu and its tilde plus a cross term, reduced by
    the orthonormalization in that model), and the root responds through
    1/D'(rho).  Concretely

        s^2 = [f^2 or (f^2 - 2)] / (2 beta) * (2 / (theta^2 D'(rho)))^2,

    validated against the Monte Carlo simulator (the same expression without
    the trailing D'(rho) factor does not reproduce simulation).
    """
    if spec.r != 1:
        raise InvalidSpec("fluctuation theory covers a single spike only")
    theta = spec.thetas[0]
    if theta <= transforms.threshold_large(ctx):
        raise OutOfRange(f"theta = {theta!r} is subcritical for the largest spike")
    rho = transforms.d_inverse(ctx, 1.0 / (theta * theta))
    sing = _near_upper_edge(ctx, rho)

    def inv_sq(t):
        return 1.0 / (rho * rho - t * t) ** 2

    def t2_inv_sq(t):
        return t * t / (rho * rho - t * t) ** 2

    i_mu = measures.integrate(ctx.mu, inv_sq, endpoint_singularity=sing)
    i_tl = measures.integrate(ctx.mu_tilde, inv_sq, endpoint_singularity=sing)
    j_mu = measures.integrate(ctx.mu, t2_inv_sq, endpoint_singularity=sing)
    p = measures.phi(ctx.mu, rho)
    pt = transforms.phi_tilde(ctx, rho)
    f_sq = rho * rho * i_mu / (p * p) + rho * rho * i_tl / (pt * pt) + 2.0 * j_mu / (p * pt)
    corr = 2.0 / (theta * theta * abs(transforms.d_prime(ctx, rho)))
    return _std_from_f_sq(f_sq, spec) * corr


def fluct_std_smallest_square(ctx: TransformContext, spec: SpikeSpec) -> float:
    """Std of sqrt(n) (sigma_n(perturbed) - rho) for a single spike, c = 1.

    f^2 = 2 theta^2 * integral of (rho^2 + t^2)/(rho^2 - t^2)^2 dmu(t), which
    equals -2 theta^2 phi'(rho).  The same root-shift normalization as in
    :func:`fluct_std_largest` applies; with phi(rho) = -1/theta it reduces to
    the factor 1/(theta |phi'(rho)|).
    """
    if spec.r != 1:
        raise InvalidSpec("fluctuation theory covers a single spike only")
    if ctx.c != 1.0 or ctx.bounds.a <= 0.0:
        raise DomainError("smallest-spike fluctuations require c = 1 and a > 0")
    theta = spec.thetas[0]
    if theta <= transforms.threshold_small(ctx):
        raise OutOfRange(f"theta = {theta!r} is subcritical for the smallest spike")
    rho = transforms.phi_inverse_small(ctx, theta)
    sing = None
    if ctx.mu.density is not None:
        d = ctx.mu.density
        if d.a - rho < measures.NEAR_EDGE_FRACTION * (d.b - d.a):
            sing = "lower"
    pp = measures.phi_prime(ctx.mu, rho)
    f_sq = 2.0 * theta * theta * measures.integrate(
        ctx.mu,
        lambda t: (rho * rho + t * t) / (rho * rho - t * t) ** 2,
        endpoint_singularity=sing,
    )
    corr = 1.0 / (theta * abs(pp))
    return _std_from_f_sq(f_sq, spec) * corr


def _std_from_f_sq(f_sq: float, spec: SpikeSpec) -> float:
    if spec.model == "iid":
        s_sq = f_sq / (2.0 * spec.beta)
    else:
        if f_sq < 2.0:
            raise NegativeVariance(
                f"orthonormalized-model variance (f^2 - 2)/(2 beta) < 0 at f^2 = {f_sq!r}"
            )
        s_sq = (f_sq - 2.0) / (2.0 * spec.beta)
    return math.sqrt(s_sq)

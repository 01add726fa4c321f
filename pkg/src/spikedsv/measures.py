"""Compactly supported singular-value measures and their integral functionals.

A measure is stored as a finite atomic part plus an optional weighted density
part on a compact interval.  The three public constructions are purely atomic
measures, pure densities, and empirical singular-value lists (equal-weight
atoms); mixtures arise internally from :func:`tilde`, which adds an atom at
zero to a scaled copy of an existing measure.

Everything downstream reduces to integrals of resolvent-type kernels such as
z/(z^2 - t^2) against the measure, evaluated at real z outside the support.
Atomic parts are summed exactly; density parts go through adaptive
Gauss-Legendre panels with recursive bisection.

Edges need care twice over.  A density decaying like (b - t)^alpha with
fractional alpha defeats plain panels, so such edges are integrated in the
substituted variable t = b - s^2 (mirrored at the lower edge), which turns a
half-power edge into a smooth integrand.  And when the evaluation point z is
pressed against an edge, both the density and the kernel must be computed
from the *distance* to the edge rather than from t itself: forming
b^2 - t^2 or z^2 - t^2 at t close to b loses every significant digit and the
resulting noise floor stalls the refinement.  Densities may therefore carry
stable edge evaluators (density as a function of distance-to-edge), and
phi/phi' assemble their near-edge kernels from (z - b) + s^2 directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, NonConvergence

DEFAULT_QUAD_TOL = 1e-10

# Evaluation points closer to a support edge than this fraction of the
# support width switch phi/phi' to the stable substituted kernels.
NEAR_EDGE_FRACTION = 1e-3


class SupportBounds(NamedTuple):
    a: float
    b: float


@dataclass(frozen=True)
class DensityPart:
    """A probability density on [a, b] with optional edge metadata.

    ``edge_alpha`` holds the power-law exponents of the density at the lower
    and upper edges (``f(t) ~ M (t-a)^alpha`` resp. ``(b-t)^alpha``); ``None``
    means the density extends smoothly to the edge.  Fractional exponents
    make plain panels converge only algebraically, so those edges are always
    integrated in the substituted variable.

    ``pdf_lower``/``pdf_upper``, when given, evaluate the density at distance
    d from the corresponding edge (t = a + d resp. t = b - d) without the
    cancellation that computing pdf(b - d) directly incurs; they are used by
    the substituted integrals.
    """

    a: float
    b: float
    pdf: Callable[[np.ndarray], np.ndarray]
    edge_alpha: Tuple[Optional[float], Optional[float]] = (None, None)
    pdf_lower: Optional[Callable[[np.ndarray], np.ndarray]] = None
    pdf_upper: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def eval_lower(self, dist: np.ndarray) -> np.ndarray:
        if self.pdf_lower is not None:
            return self.pdf_lower(dist)
        return self.pdf(self.a + dist)

    def eval_upper(self, dist: np.ndarray) -> np.ndarray:
        if self.pdf_upper is not None:
            return self.pdf_upper(dist)
        return self.pdf(self.b - dist)


@dataclass(frozen=True)
class SpectralMeasure:
    """A probability measure on [0, inf): atoms plus an optional density part.

    ``atom_locations``/``atom_weights`` describe the atomic part,
    ``density``/``density_mass`` the absolutely continuous part.  Total mass
    must be 1.  Instances are immutable and safe to share across threads.
    """

    atom_locations: np.ndarray
    atom_weights: np.ndarray
    density: Optional[DensityPart] = None
    density_mass: float = 0.0

    def __post_init__(self):
        locs = np.asarray(self.atom_locations, dtype=float)
        wts = np.asarray(self.atom_weights, dtype=float)
        object.__setattr__(self, "atom_locations", locs)
        object.__setattr__(self, "atom_weights", wts)
        if locs.shape != wts.shape or locs.ndim != 1:
            raise DomainError("atom locations/weights must be matching 1-d arrays")
        if locs.size and locs.min() < 0:
            raise DomainError("atom locations must be nonnegative")
        if wts.size and wts.min() <= 0:
            raise DomainError("atom weights must be positive")
        if self.density is not None:
            d = self.density
            if not (0.0 <= d.a <= d.b):
                raise DomainError("density support must satisfy 0 <= a <= b")
            if self.density_mass <= 0:
                raise DomainError("density part present but carries no mass")
        total = float(wts.sum()) + self.density_mass
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"measure mass {total!r} differs from 1 beyond 1e-12")

    @property
    def is_atomic(self) -> bool:
        return self.density is None


def atomic(atoms: Sequence[Tuple[float, float]]) -> SpectralMeasure:
    """Measure from (location, weight) pairs; weights must sum to 1."""
    if not atoms:
        raise DomainError("atomic measure needs at least one atom")
    locs = np.array([loc for loc, _ in atoms], dtype=float)
    wts = np.array([w for _, w in atoms], dtype=float)
    return SpectralMeasure(locs, wts)


def point_mass(location: float) -> SpectralMeasure:
    return atomic([(location, 1.0)])


def empirical(values: Sequence[float]) -> SpectralMeasure:
    """Equal-weight atoms at the given singular values (no smoothing)."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise DomainError("empirical measure needs at least one value")
    wts = np.full(vals.shape, 1.0 / vals.size)
    return SpectralMeasure(vals, wts)


def density(
    a: float,
    b: float,
    pdf: Callable[[np.ndarray], np.ndarray],
    edge_alpha: Tuple[Optional[float], Optional[float]] = (None, None),
    pdf_lower: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    pdf_upper: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    check_normalization: bool = True,
    tol: float = DEFAULT_QUAD_TOL,
) -> SpectralMeasure:
    """Measure with density ``pdf`` on [a, b].

    ``pdf`` must accept numpy arrays.  Normalization is checked once here
    (tolerance 1e-8), not on every later integral.
    """
    part = DensityPart(float(a), float(b), pdf, edge_alpha, pdf_lower, pdf_upper)
    mu = SpectralMeasure(np.empty(0), np.empty(0), density=part, density_mass=1.0)
    if check_normalization:
        total = integrate(mu, lambda t: np.ones_like(t), tol=tol)
        if abs(total - 1.0) > 1e-8:
            raise DomainError(f"density integrates to {total!r}, not 1 within 1e-8")
    return mu


class _MarchenkoPasturPdf:
    """Singular-value density sqrt((b^2-x^2)(x^2-a^2)) / (pi c x) on (a, b)."""

    def __init__(self, c: float):
        self.c = c
        self.a = 1.0 - math.sqrt(c)
        self.b = 1.0 + math.sqrt(c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        rad = (self.b * self.b - x * x) * (x * x - self.a * self.a)
        rad = np.clip(rad, 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.sqrt(rad) / (np.pi * self.c * x)
        return np.where((x > self.a) & (x < self.b) & (x > 0), out, 0.0)

    # Factored forms: (b-x)(b+x)(x-a)(x+a) with the distance to the edge
    # supplied exactly, so no digits cancel at the edge itself.
    def upper(self, dist):
        dist = np.asarray(dist, dtype=float)
        x = self.b - dist
        rad = dist * (2.0 * self.b - dist) * (self.b - self.a - dist) * (self.b + self.a - dist)
        rad = np.clip(rad, 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.sqrt(rad) / (np.pi * self.c * x)
        return np.where((dist > 0) & (x > self.a), out, 0.0)

    def lower(self, dist):
        dist = np.asarray(dist, dtype=float)
        x = self.a + dist
        rad = (self.b - x) * (self.b + x) * dist * (2.0 * self.a + dist)
        rad = np.clip(rad, 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.sqrt(rad) / (np.pi * self.c * x)
        return np.where((dist > 0) & (x < self.b) & (x > 0), out, 0.0)


class _UniformPdf:
    def __init__(self, a: float, b: float):
        self.a = a
        self.b = b
        self.height = 1.0 / (b - a)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), self.height, 0.0)

    def edge(self, dist):
        dist = np.asarray(dist, dtype=float)
        return np.where((dist >= 0) & (dist <= self.b - self.a), self.height, 0.0)


def marchenko_pastur(c: float) -> SpectralMeasure:
    """Limiting singular-value law of n x m Gaussian noise, c = lim n/m.

    Support is [1-sqrt(c), 1+sqrt(c)] with square-root decay at the upper
    edge (and at the lower edge too when c < 1).
    """
    if not 0.0 < c <= 1.0:
        raise DomainError("marchenko_pastur requires 0 < c <= 1")
    pdf = _MarchenkoPasturPdf(c)
    lower_alpha = 0.5 if pdf.a > 0 else None
    return density(
        pdf.a,
        pdf.b,
        pdf,
        edge_alpha=(lower_alpha, 0.5),
        pdf_lower=pdf.lower,
        pdf_upper=pdf.upper,
    )


def uniform(a: float, b: float) -> SpectralMeasure:
    if not 0.0 <= a < b:
        raise DomainError("uniform requires 0 <= a < b")
    pdf = _UniformPdf(a, b)
    return density(a, b, pdf, pdf_lower=pdf.edge, pdf_upper=pdf.edge)


def support_bounds(mu: SpectralMeasure) -> SupportBounds:
    """Infimum and supremum of the support."""
    lows = []
    highs = []
    if mu.atom_locations.size:
        lows.append(float(mu.atom_locations.min()))
        highs.append(float(mu.atom_locations.max()))
    if mu.density is not None:
        lows.append(mu.density.a)
        highs.append(mu.density.b)
    return SupportBounds(min(lows), max(highs))


def tilde(mu: SpectralMeasure, c: float) -> SpectralMeasure:
    """The mixture c * mu + (1 - c) * delta_0.

    This is the singular-value law seen from the wide side of an n x m
    matrix with n/m -> c.  For c = 1 the measure is returned unchanged.
    """
    if not 0.0 <= c <= 1.0:
        raise DomainError("tilde requires 0 <= c <= 1")
    if c == 1.0:
        return mu
    locs = list(mu.atom_locations)
    wts = [w * c for w in mu.atom_weights]
    if 0.0 in locs:
        wts[locs.index(0.0)] += 1.0 - c
    else:
        locs.append(0.0)
        wts.append(1.0 - c)
    if c == 0.0:
        return SpectralMeasure(np.array([0.0]), np.array([1.0]))
    return SpectralMeasure(
        np.asarray(locs, dtype=float),
        np.asarray(wts, dtype=float),
        density=mu.density,
        density_mass=mu.density_mass * c,
    )


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)

# A panel whose refinement difference falls below this multiple of its L1
# mass is saturated by double-precision roundoff; further splitting only
# refines noise.
ROUNDOFF_FLOOR = 1e-14


def _gl_panel(f, lo: float, hi: float) -> Tuple[float, float]:
    """(integral, L1 estimate) of one 15-point Gauss-Legendre panel."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    vals = f(mid + half * _GL_NODES)
    return half * float(_GL_WEIGHTS @ vals), half * float(_GL_WEIGHTS @ np.abs(vals))


def adaptive_quadrature(f, lo: float, hi: float, tol: float, max_panels: int = 20000) -> float:
    """Integrate ``f`` over [lo, hi] to absolute tolerance ``tol``.

    15-point Gauss-Legendre panels, bisected recursively until the coarse
    panel value agrees with the sum of its halves within the panel's share
    of the tolerance budget, or until the difference reaches the roundoff
    floor of the panel's L1 mass (so the achieved accuracy is bounded by
    tol + ROUNDOFF_FLOOR * integral of |f|).  ``f`` must accept numpy
    arrays.
    """
    if hi <= lo:
        return 0.0
    width = hi - lo
    stack = [(lo, hi, _gl_panel(f, lo, hi)[0], tol)]
    total = 0.0
    panels = 0
    while stack:
        a_, b_, coarse, budget = stack.pop()
        panels += 1
        if panels > max_panels:
            raise NonConvergence(
                f"adaptive quadrature exceeded {max_panels} panels at tol {tol:g}"
            )
        mid = 0.5 * (a_ + b_)
        left, left_abs = _gl_panel(f, a_, mid)
        right, right_abs = _gl_panel(f, mid, b_)
        fine = left + right
        err = abs(fine - coarse)
        if (
            err <= budget
            or err <= ROUNDOFF_FLOOR * (left_abs + right_abs)
            or (b_ - a_) <= 1e-15 * width
        ):
            total += fine
        else:
            stack.append((a_, mid, left, 0.5 * budget))
            stack.append((mid, b_, right, 0.5 * budget))
    return total


def _fractional(alpha: Optional[float]) -> bool:
    return alpha is not None and not float(alpha).is_integer()


def _refine_flags(part: DensityPart, endpoint_singularity: Optional[str]) -> Tuple[bool, bool]:
    if endpoint_singularity not in (None, "lower", "upper", "both"):
        raise DomainError(f"unknown endpoint_singularity {endpoint_singularity!r}")
    lower = _fractional(part.edge_alpha[0]) or endpoint_singularity in ("lower", "both")
    upper = _fractional(part.edge_alpha[1]) or endpoint_singularity in ("upper", "both")
    return lower, upper


def _density_integral(
    part: DensityPart,
    g,
    tol: float,
    refine_lower: bool,
    refine_upper: bool,
    g_lower=None,
    g_upper=None,
) -> float:
    """Integral of g(t) pdf(t) dt over [a, b] with optional edge substitution.

    ``g_lower``/``g_upper`` are stable kernel forms taking the distance d to
    the edge (t = a + d resp. t = b - d); they default to g(t) with t
    reconstructed from d.
    """
    a, b, pdf = part.a, part.b, part.pdf
    if b <= a:
        return 0.0

    def plain(t):
        return g(t) * pdf(t)

    if not refine_lower and not refine_upper:
        return adaptive_quadrature(plain, a, b, tol)

    mid = 0.5 * (a + b)
    if g_lower is None:
        g_lower = lambda d: g(a + d)  # noqa: E731
    if g_upper is None:
        g_upper = lambda d: g(b - d)  # noqa: E731

    total = 0.0
    if refine_lower:
        def f_lo(s):
            d = s * s
            return 2.0 * s * g_lower(d) * part.eval_lower(d)

        total += adaptive_quadrature(f_lo, 0.0, math.sqrt(mid - a), 0.5 * tol)
    else:
        total += adaptive_quadrature(plain, a, mid, 0.5 * tol)
    if refine_upper:
        def f_hi(s):
            d = s * s
            return 2.0 * s * g_upper(d) * part.eval_upper(d)

        total += adaptive_quadrature(f_hi, 0.0, math.sqrt(b - mid), 0.5 * tol)
    else:
        total += adaptive_quadrature(plain, mid, b, 0.5 * tol)
    return total


def integrate(
    mu: SpectralMeasure,
    g,
    tol: float = DEFAULT_QUAD_TOL,
    endpoint_singularity: Optional[str] = None,
) -> float:
    """Integral of ``g`` against ``mu`` with absolute error <= tol.

    Atomic and empirical parts are exact weighted sums.  ``g`` must accept
    numpy arrays for density measures.  Callers whose integrand is nearly
    singular at a support edge (integrable singularity) should declare it
    via ``endpoint_singularity`` in {'lower', 'upper', 'both'}.
    """
    total = 0.0
    if mu.atom_locations.size:
        vals = np.asarray(g(mu.atom_locations), dtype=float)
        total += float(np.dot(mu.atom_weights, vals))
    if mu.density is not None:
        lower, upper = _refine_flags(mu.density, endpoint_singularity)
        total += mu.density_mass * _density_integral(mu.density, g, tol, lower, upper)
    return total


# ---------------------------------------------------------------------------
# Resolvent-type functionals
# ---------------------------------------------------------------------------


def _check_outside(mu: SpectralMeasure, z: float) -> SupportBounds:
    bounds = support_bounds(mu)
    if z <= 0:
        raise DomainError(f"z = {z!r} must be positive")
    if bounds.a <= z <= bounds.b:
        raise DomainError(f"z = {z!r} lies inside the support [{bounds.a}, {bounds.b}]")
    return bounds


def _resolvent_density_integral(part: DensityPart, z: float, deriv: bool, tol: float) -> float:
    """Density-part integral of the phi (or phi') kernel at z outside [a, b].

    Away from the edges the kernels are evaluated directly.  When z sits
    within NEAR_EDGE_FRACTION of the support width of an edge, the kernel's
    z^2 - t^2 factor is assembled as (z - t)(z + t) with z - t = delta + d,
    where delta is the exact offset of z from the edge and d the substituted
    distance variable; together with the stable density edge forms this
    keeps the integrand noise-free down to delta ~ 1e-12.
    """
    a, b = part.a, part.b
    width = max(b - a, 1e-300)

    if deriv:
        def g(t):
            return -(z * z + t * t) / (z * z - t * t) ** 2
    else:
        def g(t):
            return z / (z * z - t * t)

    g_lower = g_upper = None
    refine_lower, refine_upper = _refine_flags(part, None)
    if z > b:
        delta = z - b
        if delta < NEAR_EDGE_FRACTION * width:
            refine_upper = True
            if deriv:
                def g_upper(d):  # noqa: F811
                    t = b - d
                    return -(z * z + t * t) / ((delta + d) ** 2 * (z + t) ** 2)
            else:
                def g_upper(d):
                    t = b - d
                    return z / ((delta + d) * (z + t))
    else:
        delta = a - z
        if delta < NEAR_EDGE_FRACTION * width:
            refine_lower = True
            if deriv:
                def g_lower(d):  # noqa: F811
                    t = a + d
                    return -(z * z + t * t) / ((delta + d) ** 2 * (z + t) ** 2)
            else:
                def g_lower(d):
                    t = a + d
                    return -z / ((delta + d) * (z + t))
    return _density_integral(part, g, tol, refine_lower, refine_upper, g_lower, g_upper)


def _resolvent_functional(mu: SpectralMeasure, z: float, deriv: bool, tol: float) -> float:
    _check_outside(mu, z)
    total = 0.0
    if mu.atom_locations.size:
        t = mu.atom_locations
        if deriv:
            vals = -(z * z + t * t) / (z * z - t * t) ** 2
        else:
            vals = z / (z * z - t * t)
        total += float(np.dot(mu.atom_weights, vals))
    if mu.density is not None:
        total += mu.density_mass * _resolvent_density_integral(mu.density, z, deriv, tol)
    return total


def phi(mu: SpectralMeasure, z: float, tol: float = DEFAULT_QUAD_TOL) -> float:
    """The functional integral of z/(z^2 - t^2) dmu(t).

    Defined for z > 0 outside the support; positive above the support,
    negative below it.  This single functional drives the D-transform, the
    phase-transition thresholds, and all projection limits.
    """
    return _resolvent_functional(mu, z, deriv=False, tol=tol)


def phi_prime(mu: SpectralMeasure, z: float, tol: float = DEFAULT_QUAD_TOL) -> float:
    """d/dz of :func:`phi`; equals -integral of (z^2 + t^2)/(z^2 - t^2)^2.

    Strictly negative everywhere on the valid domain.
    """
    return _resolvent_functional(mu, z, deriv=True, tol=tol)

import math

import numpy as np
import pytest
from scipy.integrate import quad

import spikedsv as sv
from spikedsv.errors import DomainError, OutOfRange

from conftest import semicircle_measure, semicircle_phi_at_a


def mp_d_closed(c: float, z: float) -> float:
    q = z * z - (c + 1.0)
    return (q - math.sqrt(q * q - 4.0 * c)) / (2.0 * c)


def mp_dinv_closed(c: float, w: float) -> float:
    return math.sqrt((w + 1.0) * (c * w + 1.0) / w)


# ---------------------------------------------------------------------------
# D-transform
# ---------------------------------------------------------------------------


def test_d_transform_haar_closed_form(haar_ctx):
    assert abs(sv.d_transform(haar_ctx, 2.0) - 4.0 / 9.0) < 1e-14
    for z in (1.3, 2.7, 5.0):
        closed = z * z / (z * z - 1.0) ** 2
        assert abs(sv.d_transform(haar_ctx, z) - closed) < 1e-13
    assert sv.d_transform(haar_ctx, 1e7) < 1e-10


@pytest.mark.parametrize("c", [0.25, 0.5, 1.0])
def test_d_transform_mp_closed_form(c):
    ctx = sv.TransformContext(sv.marchenko_pastur(c), c)
    b = ctx.bounds.b
    for z in np.linspace(b + 0.05, b + 4.0, 15):
        assert abs(sv.d_transform(ctx, float(z)) - mp_d_closed(c, float(z))) < 1e-8


def test_d_transform_equals_phi_times_phi_tilde(mp025_ctx):
    z = 2.0
    direct = sv.d_transform(mp025_ctx, z)
    via_tilde = sv.phi(mp025_ctx.mu, z) * sv.phi(mp025_ctx.mu_tilde, z)
    assert abs(direct - via_tilde) < 1e-10


def test_d_transform_domain(mp1_ctx):
    with pytest.raises(DomainError):
        sv.d_transform(mp1_ctx, 2.0)
    with pytest.raises(DomainError):
        sv.d_transform(mp1_ctx, 1.0)


def test_d_prime_haar_closed_form(haar_ctx):
    # d/dz of z^2/(z^2-1)^2 is -2z(z^2+1)/(z^2-1)^3: at z = 2 this is -20/27.
    assert abs(sv.d_prime(haar_ctx, 2.0) - (-20.0 / 27.0)) < 1e-13


def test_d_prime_matches_finite_differences(mp1_ctx):
    h = 1e-5
    for z in (2.3, 2.5, 3.1):
        fd = (sv.d_transform(mp1_ctx, z + h) - sv.d_transform(mp1_ctx, z - h)) / (2 * h)
        assert abs(sv.d_prime(mp1_ctx, z) - fd) < 1e-6


@pytest.mark.parametrize(
    "ctx_name", ["mp1_ctx", "mp025_ctx", "haar_ctx", "semicircle_ctx"]
)
def test_d_monotone_decreasing(ctx_name, request):
    ctx = request.getfixturevalue(ctx_name)
    b = ctx.bounds.b
    zs = np.linspace(b + 0.05, b + 5.0, 100)
    vals = [sv.d_transform(ctx, float(z)) for z in zs]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert all(v > 0 for v in vals)
    dvals = [sv.d_prime(ctx, float(z)) for z in np.linspace(b + 0.05, b + 5.0, 20)]
    assert all(v < 0 for v in dvals)


# ---------------------------------------------------------------------------
# edge limits and thresholds
# ---------------------------------------------------------------------------


def test_d_at_b_plus_mp():
    for c in (0.25, 0.5, 1.0):
        ctx = sv.TransformContext(sv.marchenko_pastur(c), c)
        assert abs(sv.d_at_b_plus(ctx) - 1.0 / math.sqrt(c)) < 1e-6


def test_d_at_b_plus_divergent(haar_ctx):
    assert math.isinf(sv.d_at_b_plus(haar_ctx))
    ctx = sv.TransformContext(sv.point_mass(2.0), 1.0)
    assert math.isinf(sv.d_at_b_plus(ctx))


def test_threshold_large():
    for c in (0.25, 1.0):
        ctx = sv.TransformContext(sv.marchenko_pastur(c), c)
        thr = sv.threshold_large(ctx)
        assert thr > 0
        assert abs(thr - c**0.25) < 1e-6
    assert sv.threshold_large(sv.TransformContext(sv.point_mass(1.0), 1.0)) == 0.0


def test_phi_at_a_minus_abs_divergent_cases(haar_ctx):
    assert math.isinf(sv.phi_at_a_minus_abs(haar_ctx))
    assert sv.threshold_small(haar_ctx) == 0.0
    ctx = sv.TransformContext(sv.point_mass(2.0), 1.0)
    assert math.isinf(sv.phi_at_a_minus_abs(ctx))
    assert sv.threshold_small(ctx) == 0.0
    # alpha = 0 edge: phi(z) = (1/2) ln[(1-z)(2+z) / ((1+z)(2-z))] -> -inf,
    # a log divergence, so the small-spike threshold is 0.
    ctx = sv.TransformContext(sv.uniform(1.0, 2.0), 1.0)
    assert math.isinf(sv.phi_at_a_minus_abs(ctx))
    assert sv.threshold_small(ctx) == 0.0


def test_uniform_phi_log_closed_form():
    mu = sv.uniform(1.0, 2.0)
    for z in (0.5, 0.9, 0.999):
        closed = 0.5 * math.log((1.0 - z) * (2.0 + z) / ((1.0 + z) * (2.0 - z)))
        assert abs(sv.phi(mu, z) - closed) < 1e-9


def test_phi_at_a_minus_abs_finite_semicircle(semicircle_ctx):
    val = sv.phi_at_a_minus_abs(semicircle_ctx)
    assert abs(val - abs(semicircle_phi_at_a())) < 1e-6
    thr = sv.threshold_small(semicircle_ctx)
    assert abs(thr - 1.0 / abs(semicircle_phi_at_a())) < 1e-6


def test_phi_semicircle_against_quadpack(semicircle_ctx):
    mu = semicircle_ctx.mu
    pdf = mu.density.pdf
    for z in (0.5, 0.9):
        oracle, err = quad(
            lambda t: z / (z * z - t * t) * float(pdf(t)), 1.0, 2.0, limit=200
        )
        assert err < 1e-7
        assert abs(sv.phi(mu, z) - oracle) < 1e-7


def test_phi_at_a_minus_domain_errors(mp025_ctx, mp1_ctx):
    with pytest.raises(DomainError):
        sv.phi_at_a_minus_abs(mp025_ctx)  # c != 1
    with pytest.raises(DomainError):
        sv.phi_at_a_minus_abs(mp1_ctx)  # a = 0


# ---------------------------------------------------------------------------
# inverses
# ---------------------------------------------------------------------------


def test_d_inverse_haar_golden(haar_ctx):
    golden = 0.5 * (1.0 + math.sqrt(5.0))
    assert abs(sv.d_inverse(haar_ctx, 1.0) - golden) < 1e-10
    for theta in (0.5, 1.0, 2.0, 3.0):
        closed = 0.5 * (theta + math.sqrt(theta * theta + 4.0))
        assert abs(sv.d_inverse(haar_ctx, 1.0 / theta**2) - closed) < 1e-10


def test_d_inverse_mp_closed_form():
    for c in (0.25, 0.5, 1.0):
        ctx = sv.TransformContext(sv.marchenko_pastur(c), c)
        for w in np.linspace(0.05, 0.95, 10) / math.sqrt(c):
            assert abs(sv.d_inverse(ctx, float(w)) - mp_dinv_closed(c, float(w))) < 1e-8


def test_d_inverse_round_trip(mp1_ctx, haar_ctx):
    for ctx, ws in ((mp1_ctx, (0.1, 0.5, 0.9)), (haar_ctx, (0.2, 1.0, 5.0))):
        for w in ws:
            z = sv.d_inverse(ctx, w)
            assert abs(sv.d_transform(ctx, z) - w) < 1e-9


def test_d_inverse_out_of_range(mp1_ctx):
    with pytest.raises(OutOfRange):
        sv.d_inverse(mp1_ctx, 1.5)  # above D(b+) = 1
    with pytest.raises(DomainError):
        sv.d_inverse(mp1_ctx, -0.1)


def test_phi_inverse_small_haar_golden(haar_ctx):
    assert abs(sv.phi_inverse_small(haar_ctx, 1.0) - 0.5 * (math.sqrt(5.0) - 1.0)) < 1e-10
    assert abs(sv.phi_inverse_small(haar_ctx, 3.0) - 0.5 * (math.sqrt(13.0) - 3.0)) < 1e-10


def test_phi_inverse_small_round_trip(semicircle_ctx):
    thr = sv.threshold_small(semicircle_ctx)
    for theta in (1.2 * thr, 1.0, 5.0):
        rho = sv.phi_inverse_small(semicircle_ctx, theta)
        assert 0.0 < rho < semicircle_ctx.bounds.a
        assert abs(abs(sv.phi(semicircle_ctx.mu, rho)) - 1.0 / theta) < 1e-9


def test_phi_inverse_small_subcritical_raises(semicircle_ctx):
    thr = sv.threshold_small(semicircle_ctx)
    with pytest.raises(OutOfRange):
        sv.phi_inverse_small(semicircle_ctx, 0.5 * thr)


# ---------------------------------------------------------------------------
# U and C transforms
# ---------------------------------------------------------------------------


def test_u_identity_grid():
    worst = 0.0
    for c in (0.0, 0.25, 0.5, 1.0):
        for z in np.linspace(-0.2, 10.0, 103):
            u = sv.u_function(c, float(z))
            worst = max(worst, abs(c * u * u + (c + 1.0) * u - z))
    assert worst < 1e-12


def test_u_function_values():
    assert sv.u_function(0.0, 0.7) == 0.7
    assert abs(sv.u_function(1.0, 0.0)) < 1e-15
    assert abs(sv.u_function(1.0, 3.0) - 1.0) < 1e-14
    with pytest.raises(DomainError):
        sv.u_function(1.0, -2.0)


def test_c_transform_haar_golden(haar_ctx):
    # D^{-1}(1) is the golden ratio g; the argument is g and
    # U(1, g) = -1 + sqrt(1 + g) = g - 1.
    golden = 0.5 * (1.0 + math.sqrt(5.0))
    assert abs(sv.c_transform(haar_ctx, 1.0) - (golden - 1.0)) < 1e-9


def test_c_transform_vanishes_at_zero(mp1_ctx):
    # z Dinv(z)^2 - 1 -> 0 like (1 + m2~) z, so C(z) -> 0 from above.
    vals = [sv.c_transform(mp1_ctx, z) for z in (1e-1, 1e-2, 1e-3)]
    assert all(x > y > 0 for x, y in zip(vals, vals[1:]))
    assert vals[-1] < 0.01


def test_c_transform_c_zero_path():
    # For delta_1 with c = 0: D(z) = 1/(z^2 - 1), so z * Dinv(z)^2 - 1 = z
    # and C(z) = U(z) = z.
    ctx = sv.TransformContext(sv.point_mass(1.0), 0.0)
    for z in (0.3, 1.0, 4.0):
        assert abs(sv.c_transform(ctx, z) - z) < 1e-9
    with pytest.raises(DomainError):
        sv.c_transform(ctx, -1.0)


# ---------------------------------------------------------------------------
# phi' edge divergence (delocalization hypothesis detector)
# ---------------------------------------------------------------------------


def test_phi_prime_at_b_plus_mp_diverges(mp1_ctx, mp025_ctx):
    assert sv.phi_prime_at_b_plus(mp1_ctx) == -math.inf
    assert sv.phi_prime_at_b_plus(mp025_ctx) == -math.inf


def test_phi_prime_at_b_plus_finite_for_steep_edge():
    # Density 3(1-t)^2 on [0, 1]: alpha = 2 > 1, so phi'(b+) is finite and
    # equals -3 * int_0^1 (1+t^2)/(1+t)^2 dt = -3 (2 - 2 ln 2).
    mu = sv.density(
        0.0,
        1.0,
        lambda t: 3.0 * (1.0 - np.asarray(t, float)) ** 2,
        edge_alpha=(None, 2.0),
    )
    ctx = sv.TransformContext(mu, 1.0)
    val = sv.phi_prime_at_b_plus(ctx)
    assert math.isfinite(val)
    assert abs(val - (-3.0 * (2.0 - 2.0 * math.log(2.0)))) < 1e-6

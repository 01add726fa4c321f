import math

import numpy as np
import pytest

import spikedsv as sv


def semicircle_measure() -> sv.SpectralMeasure:
    """Semicircle density on [1, 2]: alpha = 1/2 at both edges, phi(a-) finite.

    Closed Stieltjes form (center 1.5, radius 0.5) gives
    phi(1-) = (G(1) - G(-1))/2 = (-4 - 8*(sqrt(6) - 2.5))/2, so the
    small-spike threshold is positive -- the test bed for the subcritical
    smallest-singular-value branch.
    """
    coef = 8.0 / math.pi

    def pdf(t):
        t = np.asarray(t, dtype=float)
        rad = np.clip((t - 1.0) * (2.0 - t), 0.0, None)
        return coef * np.sqrt(rad)

    def edge(d):
        d = np.asarray(d, dtype=float)
        rad = np.clip(d * (1.0 - d), 0.0, None)
        return coef * np.sqrt(rad)

    return sv.density(1.0, 2.0, pdf, edge_alpha=(0.5, 0.5), pdf_lower=edge, pdf_upper=edge)


def semicircle_phi_at_a() -> float:
    """Analytic phi(1-) for the semicircle on [1, 2] (independent oracle)."""
    g_at_1 = -4.0
    g_at_minus_1 = 8.0 * (math.sqrt(6.0) - 2.5)
    return 0.5 * (g_at_1 - g_at_minus_1)


@pytest.fixture(scope="session")
def mp1_ctx():
    return sv.TransformContext(sv.marchenko_pastur(1.0), 1.0)


@pytest.fixture(scope="session")
def mp025_ctx():
    return sv.TransformContext(sv.marchenko_pastur(0.25), 0.25)


@pytest.fixture(scope="session")
def haar_ctx():
    return sv.TransformContext(sv.point_mass(1.0), 1.0)


@pytest.fixture(scope="session")
def semicircle_ctx():
    return sv.TransformContext(semicircle_measure(), 1.0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

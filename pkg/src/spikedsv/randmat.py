"""Matrix sampling, SVD measurement, and master-matrix diagnostics.

The noise models are rectangular Gaussian matrices with entry variance 1/m
(real or complex) and Haar-distributed square orthogonal/unitary matrices;
arbitrary matrices can be injected through a factory carrying their declared
limiting singular-value law.  Perturbations are rank-r outer-product sums
theta_i u_i v_i* built from i.i.d. blocks, either column-normalized ("iid"
model) or orthonormalized ("orthonormalized" model).

The diagnostics operate on the 2r x 2r master matrix M(z): its singularity
at z characterizes the new singular values of the perturbed matrix, and at
an SVD triplet of the perturbed matrix a specific vector built from the
planted directions lies in its kernel while four resolvent quadratic forms
sum to one.  Everything is evaluated through shifted linear solves against
(z^2 I - X X*); no explicit inverse is ever formed.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from . import measures, transforms
from .errors import (
    ConvergenceFailure,
    DimensionError,
    DomainError,
    NearSingularShift,
    RankDeficient,
    UnknownTheta,
)
from .measures import SpectralMeasure
from .prediction import SpikeSpec
from .transforms import TransformContext

ENTRY_LAWS = ("gaussian", "rademacher")


@dataclass(frozen=True)
class GaussianRect:
    """i.i.d. N(0, 1/m) entries (beta = 1) or complex analogue (beta = 2)."""

    beta: int = 1


@dataclass(frozen=True)
class HaarSquare:
    """Haar orthogonal (beta = 1) or unitary (beta = 2) square matrix."""

    beta: int = 1


@dataclass(frozen=True)
class MatrixFactory:
    """Caller-supplied sampler with a declared limiting singular-value law."""

    sample: Callable[[int, int, np.random.Generator], np.ndarray]
    limit: SpectralMeasure
    beta: int = 1


NoiseModel = Union[GaussianRect, HaarSquare, MatrixFactory]


def sample_noise(model: NoiseModel, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    if n > m or n < 1:
        raise DimensionError(f"need 1 <= n <= m, got n = {n}, m = {m}")
    if isinstance(model, GaussianRect):
        if model.beta == 1:
            return rng.standard_normal((n, m)) / math.sqrt(m)
        return (
            rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        ) / math.sqrt(2.0 * m)
    if isinstance(model, HaarSquare):
        if n != m:
            raise DimensionError("Haar model requires a square matrix")
        if model.beta == 1:
            z = rng.standard_normal((n, n))
        else:
            z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        q, r = np.linalg.qr(z)
        d = np.diagonal(r).copy()
        d[d == 0] = 1.0
        # Fixing the triangular factor's diagonal phases is what makes the
        # orthonormal factor exactly Haar distributed.
        return q * (d / np.abs(d))
    if isinstance(model, MatrixFactory):
        x = np.asarray(model.sample(n, m, rng))
        if x.shape != (n, m):
            raise DimensionError(f"factory returned shape {x.shape}, wanted {(n, m)}")
        return x
    raise DimensionError(f"unknown noise model {model!r}")


def _draw_block(rows: int, cols: int, entry_law: str, field: str, rng) -> np.ndarray:
    if entry_law not in ENTRY_LAWS:
        raise DomainError(f"entry law must be one of {ENTRY_LAWS}, got {entry_law!r}")
    if field == "complex":
        if entry_law == "rademacher":
            re = rng.integers(0, 2, (rows, cols)) * 2.0 - 1.0
            im = rng.integers(0, 2, (rows, cols)) * 2.0 - 1.0
        else:
            re = rng.standard_normal((rows, cols))
            im = rng.standard_normal((rows, cols))
        return (re + 1j * im) / math.sqrt(2.0)
    if entry_law == "rademacher":
        return rng.integers(0, 2, (rows, cols)) * 2.0 - 1.0
    return rng.standard_normal((rows, cols))


def _orthonormalize(g: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    if np.any(np.abs(d) < 1e-12 * math.sqrt(g.shape[0])):
        raise RankDeficient("random block is numerically rank deficient")
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class Perturbation:
    """Rank-r perturbation sum of theta_i u_i v_i* with its building blocks."""

    left: np.ndarray  # n x r columns u_i
    right: np.ndarray  # m x r columns v_i
    thetas: np.ndarray  # descending, positive
    model: str

    def __post_init__(self):
        n, r = self.left.shape
        if self.right.shape[1] != r or self.thetas.shape != (r,):
            raise DimensionError("inconsistent perturbation block shapes")
        if self.model == "orthonormalized":
            for block in (self.left, self.right):
                gram = block.conj().T @ block
                if np.max(np.abs(gram - np.eye(r))) > 1e-10:
                    raise RankDeficient("orthonormalized block fails U*U = I by > 1e-10")
        else:
            for block in (self.left, self.right):
                norms = np.linalg.norm(block, axis=0)
                if np.max(np.abs(norms - 1.0)) > 5.0 / math.sqrt(block.shape[0]):
                    raise RankDeficient("iid column norms stray beyond 5/sqrt(n)")

    @property
    def rank(self) -> int:
        return self.thetas.size

    def matrix(self) -> np.ndarray:
        return (self.left * self.thetas) @ self.right.conj().T

    def apply_left(self, v: np.ndarray) -> np.ndarray:
        """P v for an m-vector v."""
        return self.left @ (self.thetas * (self.right.conj().T @ v))

    def apply_right(self, u: np.ndarray) -> np.ndarray:
        """P* u for an n-vector u."""
        return self.right @ (self.thetas * (self.left.conj().T @ u))


def sample_perturbation(
    spec: SpikeSpec,
    n: int,
    m: int,
    rng: np.random.Generator,
    entry_law: str = "gaussian",
) -> Perturbation:
    """Draw the planted directions and assemble the perturbation.

    The raw n x r and m x r blocks have i.i.d. entries from the chosen law
    (standard Gaussian by default).  The iid model rescales columns by
    1/sqrt(n) and 1/sqrt(m); the orthonormalized model replaces each block
    by the orthonormal factor of its QR decomposition (diagonal phases
    normalized, so it matches the Gram-Schmidt construction).
    """
    r = spec.r
    if r > min(n, m):
        raise DimensionError(f"rank {r} exceeds min(n, m) = {min(n, m)}")
    for attempt in (0, 1):
        gu = _draw_block(n, r, entry_law, spec.field, rng)
        gv = _draw_block(m, r, entry_law, spec.field, rng)
        try:
            if spec.model == "iid":
                left = gu / math.sqrt(n)
                right = gv / math.sqrt(m)
            else:
                left = _orthonormalize(gu)
                right = _orthonormalize(gv)
            return Perturbation(left, right, np.asarray(spec.thetas, float), spec.model)
        except RankDeficient:
            if attempt == 1:
                raise
    raise RankDeficient("unreachable")


def svd_dense(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD with singular values descending.

    Returns (values, left, right) with columns paired so that
    a = left @ diag(values) @ right.conj().T.
    """
    n, m = a.shape
    if n > m:
        raise DimensionError(f"svd_dense expects n <= m, got {a.shape}")
    try:
        w, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD failed: {exc}") from exc
    return s, w, vh.conj().T


def projection_norms(
    left_vec: np.ndarray,
    right_vec: np.ndarray,
    pert: Perturbation,
    theta: float,
) -> Tuple[float, float]:
    """Squared projections of a unit singular pair onto the theta-span.

    The span groups planted columns whose configured theta matches exactly
    (ties are configured, never computed).
    """
    idx = np.flatnonzero(pert.thetas == theta)
    if idx.size == 0:
        raise UnknownTheta(f"theta = {theta!r} not present in the perturbation")
    qu = np.linalg.qr(pert.left[:, idx])[0]
    qv = np.linalg.qr(pert.right[:, idx])[0]
    left_sq = float(np.linalg.norm(qu.conj().T @ left_vec) ** 2)
    right_sq = float(np.linalg.norm(qv.conj().T @ right_vec) ** 2)
    return left_sq, right_sq


@dataclass(frozen=True)
class MasterMatrix:
    """The 2r x 2r matrix whose singularity marks perturbed singular values."""

    entries: np.ndarray
    z: float

    def min_singular_relative(self) -> float:
        s = np.linalg.svd(self.entries, compute_uv=False)
        return float(s[-1] / s[0])

    def det(self) -> complex:
        return complex(np.linalg.det(self.entries))


def _shift_guard(x: np.ndarray, z: float, sigma_x: Optional[np.ndarray]) -> np.ndarray:
    if sigma_x is None:
        sigma_x = np.linalg.svd(x, compute_uv=False)
    if np.min(np.abs(sigma_x - z)) < 1e-8:
        raise NearSingularShift(f"z = {z!r} within 1e-8 of a noise singular value")
    return sigma_x


def master_matrix(
    x: np.ndarray,
    pert: Perturbation,
    z: float,
    sigma_x: Optional[np.ndarray] = None,
) -> MasterMatrix:
    """Assemble M(z) from shifted solves against (z^2 I - X X*).

    Blocks (before subtracting the Theta^{-1} antidiagonal):

        [ z U*(z^2 - XX*)^{-1} U        U*(z^2 - XX*)^{-1} X V      ]
        [ V*X*(z^2 - XX*)^{-1} U        z V*(z^2 - X*X)^{-1} V      ]

    The z weight on the diagonal blocks is what makes the kernel vector
    [Theta V* v; Theta U* u] of an SVD triplet lie in ker M(z) and the
    entrywise limit equal diag(phi, phi_tilde) minus the antidiagonal.
    The lower-right block uses the identity
    (z^2 I_m - X*X)^{-1} = z^{-2} (I_m + X* (z^2 I_n - X X*)^{-1} X)
    so only the n x n shifted matrix is ever factorized.  ``sigma_x`` (the
    singular values of x) may be passed to avoid recomputing them for the
    near-singular-shift guard.
    """
    _shift_guard(x, z, sigma_x)
    n = x.shape[0]
    r = pert.rank
    u, v = pert.left, pert.right
    xv = x @ v
    shifted = z * z * np.eye(n) - x @ x.conj().T
    sol = np.linalg.solve(shifted, np.hstack([u, xv]))
    su, sxv = sol[:, :r], sol[:, r:]
    top_left = z * (u.conj().T @ su)
    top_right = u.conj().T @ sxv
    bot_left = xv.conj().T @ su
    bot_right = (v.conj().T @ v + xv.conj().T @ sxv) / z
    theta_inv = np.diag(1.0 / pert.thetas)
    mat = np.block([[top_left, top_right], [bot_left, bot_right]])
    mat[:r, r:] -= theta_inv
    mat[r:, :r] -= theta_inv
    return MasterMatrix(mat, z)


def master_matrix_limit(ctx: TransformContext, thetas: np.ndarray, z: float) -> np.ndarray:
    """Deterministic limit: diag(phi, phi_tilde) blocks minus the theta antidiagonal."""
    thetas = np.asarray(thetas, dtype=float)
    r = thetas.size
    p = measures.phi(ctx.mu, z)
    pt = transforms.phi_tilde(ctx, z)
    mat = np.zeros((2 * r, 2 * r))
    mat[:r, :r] = p * np.eye(r)
    mat[r:, r:] = pt * np.eye(r)
    theta_inv = np.diag(1.0 / thetas)
    mat[:r, r:] -= theta_inv
    mat[r:, :r] -= theta_inv
    return mat


def kernel_identity_residual(
    x: np.ndarray,
    pert: Perturbation,
    z: float,
    left_vec: np.ndarray,
    right_vec: np.ndarray,
    sigma_x: Optional[np.ndarray] = None,
) -> Tuple[float, float]:
    """Residuals of the two exact identities at an SVD triplet of X + P.

    Returns (|a + b + c + d - 1|, ||M(z) w||) where the four terms are the
    resolvent quadratic forms that sum to one at a genuine triplet and
    w = [Theta V* v; Theta U* u] is the kernel vector of M(z).  At a random
    non-triplet the first residual is O(1).
    """
    sigma_x = _shift_guard(x, z, sigma_x)
    n = x.shape[0]
    pv = pert.apply_left(right_vec)
    xpu = x @ pert.apply_right(left_vec)
    shifted = z * z * np.eye(n) - x @ x.conj().T
    sol = np.linalg.solve(shifted, np.column_stack([pv, xpu]))
    y1, y2 = sol[:, 0], sol[:, 1]
    term_a = z * z * float(np.real(np.vdot(y1, y1)))
    term_b = float(np.real(np.vdot(y2, y2)))
    cross = 2.0 * z * float(np.real(np.vdot(y1, y2)))
    identity_residual = abs(term_a + term_b + cross - 1.0)

    w = np.concatenate(
        [
            pert.thetas * (pert.right.conj().T @ right_vec),
            pert.thetas * (pert.left.conj().T @ left_vec),
        ]
    )
    mw = master_matrix(x, pert, z, sigma_x).entries @ w
    return identity_residual, float(np.linalg.norm(mw))


def empirical_concentration_check(
    n: int,
    r: int,
    a: np.ndarray,
    trials: int,
    rng: np.random.Generator,
    model: str = "orthonormalized",
    entry_law: str = "gaussian",
    field: str = "real",
    m: Optional[int] = None,
    b: Optional[np.ndarray] = None,
) -> Tuple[float, float, float]:
    """Empirical maxima of the three direction-concentration statistics.

    Over the requested number of independent draws of the planted blocks,
    returns the largest observed values of
      |<u_i, A u_i> - tr(A)/n|,   |<u_i, A u_j>| (i != j),   |<u_i, B v_k>|.
    ``a`` must have operator norm bounded independently of n (caller's
    contract).  ``b`` defaults to ``a`` (requires m = n).
    """
    if m is None:
        m = n
    if b is None:
        if m != n:
            raise DimensionError("default B = A requires m = n")
        b = a
    spec = SpikeSpec(thetas=tuple([1.0] * r), model=model, field=field)
    trace_term = np.trace(a) / n
    diag_max = offdiag_max = cross_max = 0.0
    for _ in range(trials):
        pert = sample_perturbation(spec, n, m, rng, entry_law=entry_law)
        u, v = pert.left, pert.right
        au = a @ u
        gram = u.conj().T @ au
        diag_max = max(diag_max, float(np.max(np.abs(np.diagonal(gram) - trace_term))))
        if r > 1:
            off = gram - np.diag(np.diagonal(gram))
            offdiag_max = max(offdiag_max, float(np.max(np.abs(off))))
        cross = u.conj().T @ (b @ v)
        cross_max = max(cross_max, float(np.max(np.abs(cross))))
    return diag_max, offdiag_max, cross_max


# ---------------------------------------------------------------------------
# Matrix dump format for factory replay
# ---------------------------------------------------------------------------

_MAGIC = b"RMSV"
_TYPE_TAGS = {np.dtype(np.float64): 0, np.dtype(np.complex128): 1}
_TAG_TYPES = {0: np.float64, 1: np.complex128}


def save_matrix(path, a: np.ndarray) -> None:
    """Write a matrix as a 16-byte header plus column-major raw data.

    Header: magic "RMSV", u32 n, u32 m, u32 scalar-type tag (0 = float64,
    1 = complex128), all little-endian.
    """
    a = np.asarray(a)
    if a.dtype not in _TYPE_TAGS:
        a = a.astype(np.complex128 if np.iscomplexobj(a) else np.float64)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", a.shape[0], a.shape[1], _TYPE_TAGS[a.dtype]))
        fh.write(np.asfortranarray(a).tobytes(order="F"))


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != _MAGIC:
            raise DomainError(f"{path}: not a matrix dump (bad magic)")
        n, m, tag = struct.unpack("<III", header[4:])
        if tag not in _TAG_TYPES:
            raise DomainError(f"{path}: unknown scalar type tag {tag}")
        data = np.frombuffer(fh.read(), dtype=_TAG_TYPES[tag])
    if data.size != n * m:
        raise DomainError(f"{path}: payload size mismatch")
    return data.reshape((n, m), order="F").copy()


def factory_from_file(path, limit: SpectralMeasure, beta: int = 1) -> MatrixFactory:
    """Replay a dumped matrix as a (deterministic) noise factory."""
    stored = load_matrix(path)

    def sample(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
        if stored.shape != (n, m):
            raise DimensionError(
                f"dump has shape {stored.shape}, experiment wants {(n, m)}"
            )
        return stored

    return MatrixFactory(sample=sample, limit=limit, beta=beta)

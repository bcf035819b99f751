"""Fourier-slice machinery and the injectivity / kernel structure of moments.

Three groups of checks live here:

* :func:`slice_check` compares the (n-1)-dimensional Fourier transform of
  moment data over xi-perp against the derivative identity
  F[I^q f](y, xi) = (2 pi)^{1/2} i^q <xi, d/dy>^q <fhat(y), xi^(x)m>.
* :func:`assemble_slice_system` builds, at a frequency point y, the linear
  conditions on the packed coefficients of fhat(y) that moment data plus the
  (k+1)-fold divergence constraint impose; :func:`rank_probe` measures their
  rank, which is the computational content of the injectivity statement.
* :func:`kernel_check` verifies that (k+1)-potential fields are annihilated
  by the moments I^0..I^k, with I^{k+1} as the generically nonzero control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import GaussPolyField, poly_add, poly_diff, poly_scale, poly_shift_axis
from .ray import householder_frame, moment_oracle
from .symtensor import (
    SymTensor,
    multi_indices,
    mult_weights,
    sym_dim,
    sym_mult,
)

__all__ = [
    "SliceSystem",
    "RankResult",
    "slice_check",
    "assemble_slice_system",
    "rank_probe",
    "kernel_check",
    "slice_row_count",
]

_RANK_THRESHOLD = 1e-10


def _directional_derivative(comp: dict, xi: np.ndarray, b: float) -> dict:
    """<xi, d/dy> acting on p(y) e^{-b|y|^2}, returned as the new polynomial."""
    out: dict = {}
    for ax, c in enumerate(xi):
        if c:
            term = poly_add(poly_diff(comp, ax), poly_shift_axis(comp, ax), -2.0 * b)
            out = poly_add(out, poly_scale(term, c))
    return out


def slice_check(f: GaussPolyField, xi: np.ndarray, y: np.ndarray, q: int,
                noffsets: int = 256, extent: float | None = None,
                scale_floor: float = 1e-300) -> float:
    """Relative deviation between the two sides of the slice identity at y.

    The left side is a direct numeric Fourier sum over an offset grid in
    xi-perp of the transform values I^q f(x, xi); the right side evaluates
    (2 pi)^{1/2} i^q <xi, d/dy>^q <fhat(y), xi^(x)m> on the closed-form
    transform.  Requires y in xi-perp and |xi| = 1.  ``scale_floor`` guards
    the relative-deviation denominator for cases where both sides vanish.
    """
    xi = np.asarray(xi, dtype=float)
    y = np.asarray(y, dtype=float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    if abs(y @ xi) > 1e-12:
        raise ValueError("frequency point must lie in the direction's orthocomplement")
    if extent is None:
        extent = f.effective_radius()
    n = f.n
    frame = householder_frame(xi)                      # (n, n-1)
    ax = np.linspace(-extent, extent, noffsets, endpoint=False)
    ds = ax[1] - ax[0]
    grids = np.meshgrid(*([ax] * (n - 1)), indexing="ij")
    s = np.stack([g.ravel() for g in grids], axis=-1)  # (P, n-1)
    vals = np.array([moment_oracle(f, frame @ sj, xi, q) for sj in s])
    yp = frame.T @ y                                   # y in frame coordinates
    phase = np.exp(-1j * (s @ yp))
    left = (2.0 * np.pi) ** (-(n - 1) / 2.0) * (phase * vals).sum() * ds ** (n - 1)

    fhat = f.fourier_analytic()
    w = mult_weights(n, f.m)
    pw = np.array([math.prod(xi[list(al)]) if al else 1.0
                   for al in multi_indices(n, f.m)])
    scalar: dict = {}
    for p, comp in enumerate(fhat.comps):
        if w[p] * pw[p]:
            scalar = poly_add(scalar, poly_scale(comp, w[p] * pw[p]))
    for _ in range(q):
        scalar = _directional_derivative(scalar, xi, fhat.a)
    probe = GaussPolyField(n, 0, fhat.a, (scalar,))
    right = math.sqrt(2.0 * np.pi) * (1j ** q) * probe.eval_packed(y)[0]

    scale = max(abs(left), abs(right), scale_floor)
    return float(abs(left - right) / scale)


# ---------------------------------------------------------------------------
# slice systems


def slice_row_count(n: int, m: int, k: int) -> int:
    """Closed-form row count of the slice system; equals sym_dim(n, m)."""
    moment = sum(math.comb(n + m - ell - 2, m - ell) for ell in range(k + 1))
    diverg = sum(math.comb(n + r - 2, r) for r in range(m - k))
    return moment + diverg


@dataclass(frozen=True)
class SliceSystem:
    """Linear conditions on the packed coefficients of fhat at one frequency.

    One row per pairing t -> <t, sigma(y^(x)l (x) zeta-monomial)>_sym; moment
    rows run over l = 0..k with tangential monomials of degree m-l, the
    divergence rows over y-powers k+1..m.  ``tags`` records the provenance of
    each row as ("moment", l, monomial) or ("divergence", p, monomial) with
    the monomial written as a non-decreasing tuple of zeta-basis labels.
    """

    y: np.ndarray
    zeta: np.ndarray
    m: int
    k: int
    rows: np.ndarray = field(repr=False)
    tags: tuple = field(repr=False)


def _polarization_row(y: np.ndarray, zeta: np.ndarray, ypow: int,
                      mono: tuple[int, ...], n: int, m: int) -> np.ndarray:
    t = SymTensor(n, 0, np.ones(1))
    for j in mono:
        t = sym_mult(t, zeta[:, j], 1)
    t = sym_mult(t, y, ypow)
    return mult_weights(n, m) * t.coeffs


def assemble_slice_system(n: int, m: int, k: int, y: np.ndarray) -> SliceSystem:
    """All moment and divergence conditions at the frequency point y.

    Moment rows: for l = 0..k and every tangential monomial of degree m - l,
    the pairing with sigma(y^(x)l (x) zeta-monomial).  Divergence rows: the
    pairings with sigma(y^(x)(k+p) (x) zeta-monomial of degree m - k - p)
    for p = 1..m-k.  Row order is deterministic: blocks in the order above,
    monomials colexicographic within a block.
    """
    y = np.asarray(y, dtype=float)
    if np.linalg.norm(y) == 0.0:
        raise ValueError("slice system undefined at y = 0")
    if not 0 <= k < m:
        raise ValueError(f"need 0 <= k < m, got k={k}, m={m}")
    zeta = householder_frame(y)
    rows, tags = [], []
    for ell in range(k + 1):
        for mono in multi_indices(n - 1, m - ell):
            rows.append(_polarization_row(y, zeta, ell, mono, n, m))
            tags.append(("moment", ell, mono))
    for p in range(1, m - k + 1):
        for mono in multi_indices(n - 1, m - k - p):
            rows.append(_polarization_row(y, zeta, k + p, mono, n, m))
            tags.append(("divergence", p, mono))
    return SliceSystem(y, zeta, m, k, np.array(rows), tuple(tags))


@dataclass(frozen=True)
class RankResult:
    rank: int
    sigma_min: float
    sigma_max: float


def rank_probe(system: SliceSystem) -> RankResult:
    """Numerical rank of the assembled rows at relative threshold 1e-10."""
    sig = np.linalg.svd(system.rows, compute_uv=False)
    smax = float(sig[0])
    rank = int((sig > _RANK_THRESHOLD * smax).sum())
    return RankResult(rank, float(sig[-1]), smax)


# ---------------------------------------------------------------------------
# kernel structure


def kernel_check(v: GaussPolyField, k: int, lines, orders=None) -> float:
    """Max moment residual of the (k+1)-potential field built from v.

    Constructs f = d^(k+1) v analytically and returns the largest |I^l f|
    over the sampled lines and l in ``orders`` (default 0..k), relative to
    the field scale max |I^0 v| over the same lines.  Passing
    ``orders=[k+1]`` turns the same machinery into the negative control,
    since I^{k+1}(d^(k+1) v) = (-1)^{k+1} (k+1)! I^0 v is generically
    nonzero.
    """
    if k + 1 + v.m < k + 1:
        raise ValueError("rank arithmetic violation")
    if orders is None:
        orders = range(k + 1)
    f = v.inner_derivative(k + 1)
    scale = max((abs(moment_oracle(v, ln.x, ln.xi, 0)) for ln in lines),
                default=0.0)
    scale = max(scale, 1e-300)
    worst = 0.0
    for ln in lines:
        for ell in orders:
            worst = max(worst, abs(moment_oracle(f, ln.x, ln.xi, ell)))
    return worst / scale

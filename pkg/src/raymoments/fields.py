"""Tensor-field representations and the differential operators on them.

Two realizations of a symmetric-tensor field:

* :class:`GaussPolyField` -- components are (multivariate polynomial) x
  exp(-a|x|^2); closed under symmetrized differentiation, divergence and
  the Fourier transform, which is what makes it usable as an exact oracle.
* :class:`GridField` -- uniform-grid samples with spectral (FFT) derivative
  operators under periodic extension.

Fourier convention throughout: F u(y) = (2 pi)^{-n/2} int e^{-i<x,y>} u(x) dx.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .symtensor import (
    SymTensor,
    multi_indices,
    mult_weights,
    sym_dim,
)

__all__ = [
    "GaussPolyField",
    "GridField",
    "GridSpec",
    "random_field",
]

# ---------------------------------------------------------------------------
# polynomial helpers: a polynomial is a dict {exponent tuple: coefficient}

Poly = dict


def poly_add(p: Poly, q: Poly, scale=1.0) -> Poly:
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0.0) + scale * c
        if out[e] == 0:
            del out[e]
    return out


def poly_scale(p: Poly, s) -> Poly:
    return {e: c * s for e, c in p.items()} if s != 0 else {}

def poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
    return {e: c for e, c in out.items() if c != 0}


def poly_diff(p: Poly, axis: int) -> Poly:
    out: Poly = {}
    for e, c in p.items():
        if e[axis] > 0:
            e2 = e[:axis] + (e[axis] - 1,) + e[axis + 1:]
            out[e2] = out.get(e2, 0.0) + c * e[axis]
    return out


def poly_shift_axis(p: Poly, axis: int) -> Poly:
    """Multiply by the coordinate x_axis."""
    out: Poly = {}
    for e, c in p.items():
        e2 = e[:axis] + (e[axis] + 1,) + e[axis + 1:]
        out[e2] = out.get(e2, 0.0) + c
    return out


def poly_eval(p: Poly, pts: np.ndarray):
    """Evaluate at points of shape (..., n); broadcasts over leading axes."""
    pts = np.asarray(pts)
    dtype = complex if any(isinstance(c, complex) for c in p.values()) else float
    out = np.zeros(pts.shape[:-1], dtype=dtype)
    for e, c in p.items():
        term = np.ones(pts.shape[:-1])
        for ax, k in enumerate(e):
            if k:
                term = term * pts[..., ax] ** k
        out = out + c * term
    return out


def poly_degree(p: Poly) -> int:
    return max((sum(e) for e in p), default=0)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussPolyField:
    """Symmetric m-tensor field with components p_alpha(x) exp(-a |x|^2).

    ``comps`` holds one polynomial per packed multi-index (see
    :mod:`raymoments.symtensor` for the ordering).
    """

    n: int
    m: int
    a: float
    comps: tuple = field(repr=False)

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("Gaussian width parameter a must be positive")
        if len(self.comps) != sym_dim(self.n, self.m):
            raise ValueError("component count does not match rank/dimension")

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, n: int, m: int, a: float = 1.0) -> "GaussPolyField":
        return cls(n, m, a, tuple({} for _ in range(sym_dim(n, m))))

    @classmethod
    def from_components(cls, n, m, a, comp_map) -> "GaussPolyField":
        """comp_map: {multi-index tuple: Poly}; missing components are zero."""
        idx = {al: p for p, al in enumerate(multi_indices(n, m))}
        comps = [dict() for _ in range(sym_dim(n, m))]
        for alpha, poly in comp_map.items():
            comps[idx[tuple(sorted(alpha))]] = dict(poly)
        return cls(n, m, a, tuple(comps))

    @classmethod
    def scalar(cls, n: int, a: float = 1.0, poly: Poly | None = None) -> "GaussPolyField":
        return cls(n, 0, a, (dict(poly) if poly else {(0,) * n: 1.0},))

    def is_complex(self) -> bool:
        return any(isinstance(c, complex) for p in self.comps for c in p.values())

    # -- evaluation ---------------------------------------------------------

    def envelope(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.exp(-self.a * (pts ** 2).sum(axis=-1))

    def eval_packed(self, pts: np.ndarray) -> np.ndarray:
        """Packed coefficients at points (..., n) -> (..., sym_dim)."""
        env = self.envelope(pts)
        cols = [poly_eval(p, pts) * env for p in self.comps]
        return np.stack(cols, axis=-1)

    def eval(self, x) -> SymTensor:
        return SymTensor(self.n, self.m, self.eval_packed(np.asarray(x, dtype=float)))

    def line_values(self, x, xi, ts: np.ndarray) -> np.ndarray:
        """<f(x + t xi), xi^(x)m> for an array of line parameters t."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        pts = x[None, :] + np.asarray(ts)[:, None] * xi[None, :]
        packed = self.eval_packed(pts)
        w = mult_weights(self.n, self.m)
        pw = np.array([math.prod(xi[list(al)]) if al else 1.0
                       for al in multi_indices(self.n, self.m)])
        return packed @ (w * pw)

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "GaussPolyField") -> "GaussPolyField":
        if (self.n, self.m, self.a) != (other.n, other.m, other.a):
            raise ValueError("fields not compatible (n, m, a must match)")
        return replace(self, comps=tuple(
            poly_add(p, q) for p, q in zip(self.comps, other.comps)))

    def __mul__(self, s) -> "GaussPolyField":
        return replace(self, comps=tuple(poly_scale(p, s) for p in self.comps))

    __rmul__ = __mul__

    # -- differential operators ---------------------------------------------

    def _component_partial(self, p: Poly, axis: int) -> Poly:
        # d/dx_j (p e^{-a|x|^2}) = (dp/dx_j - 2 a x_j p) e^{-a|x|^2}
        return poly_add(poly_diff(p, axis), poly_shift_axis(p, axis), -2.0 * self.a)

    def inner_derivative(self, order: int = 1) -> "GaussPolyField":
        """Symmetrized derivative, applied ``order`` times (rank goes up)."""
        if order < 0:
            raise ValueError("order must be non-negative")
        out = self
        for _ in range(order):
            out = out._inner_derivative_once()
        return out

    def _inner_derivative_once(self) -> "GaussPolyField":
        n, m = self.n, self.m
        idx = {al: p for p, al in enumerate(multi_indices(n, m))}
        comps = []
        for gamma in multi_indices(n, m + 1):
            acc: Poly = {}
            for slot in range(m + 1):
                rest = gamma[:slot] + gamma[slot + 1:]
                dpoly = self._component_partial(self.comps[idx[rest]], gamma[slot])
                acc = poly_add(acc, dpoly)
            comps.append(poly_scale(acc, 1.0 / (m + 1)))
        return GaussPolyField(n, m + 1, self.a, tuple(comps))

    def divergence(self, order: int = 1) -> "GaussPolyField":
        """Contracted derivative, applied ``order`` times (rank goes down)."""
        if order > self.m:
            raise ValueError(f"divergence order {order} exceeds rank {self.m}")
        out = self
        for _ in range(order):
            out = out._divergence_once()
        return out

    def _divergence_once(self) -> "GaussPolyField":
        n, m = self.n, self.m
        idx = {al: p for p, al in enumerate(multi_indices(n, m))}
        comps = []
        for alpha in multi_indices(n, m - 1):
            acc: Poly = {}
            for j in range(n):
                acc = poly_add(
                    acc, self._component_partial(self.comps[idx[tuple(sorted(alpha + (j,)))]], j))
            comps.append(acc)
        return GaussPolyField(n, m - 1, self.a, tuple(comps))

    # -- Fourier transform ---------------------------------------------------

    def fourier_analytic(self) -> "GaussPolyField":
        """Closed-form Fourier transform; a Gaussian-polynomial field in y.

        F[p(x) e^{-a|x|^2}] = p(i d/dy) [(2a)^{-n/2} e^{-|y|^2 / 4a}], applied
        monomial factor by monomial factor; the width parameter maps to 1/(4a).
        """
        b = 1.0 / (4.0 * self.a)
        base_amp = (2.0 * self.a) ** (-self.n / 2.0)
        comps = []
        for p in self.comps:
            acc: Poly = {}
            for e, c in p.items():
                q: Poly = {(0,) * self.n: base_amp * c}
                for ax, k in enumerate(e):
                    for _ in range(k):
                        # i d/dy_ax acting on q(y) e^{-b|y|^2}
                        q = poly_add(poly_diff(q, ax), poly_shift_axis(q, ax), -2.0 * b)
                        q = poly_scale(q, 1j)
                acc = poly_add(acc, q)
            comps.append(acc)
        return GaussPolyField(self.n, self.m, b, tuple(comps))

    # -- support and sampling -------------------------------------------------

    def effective_radius(self, cutoff: float = 1e-12) -> float:
        """Radius R with e^{-a R^2} * (coefficient-sum bound on |p|) < cutoff."""
        bound = max(sum(abs(c) for c in p.values()) for p in self.comps) or 1.0
        deg = max(poly_degree(p) for p in self.comps)
        r = 1.0
        while bound * max(r, 1.0) ** deg * math.exp(-self.a * r * r) >= cutoff:
            r *= 1.25
            if r > 1e4:
                raise RuntimeError("effective support radius did not converge")
        return r

    def sample(self, spec: "GridSpec") -> "GridField":
        """Nodewise evaluation onto a uniform grid."""
        axes = spec.axes()
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        packed = self.eval_packed(mesh)  # (N,)*n + (sym_dim,)
        data = np.moveaxis(packed, -1, 0)
        if np.isnan(data).any():
            raise FloatingPointError("NaN encountered while sampling field")
        gf = GridField(self.n, self.m, spec, np.ascontiguousarray(data))
        gf_max = np.abs(data).max() if data.size else 0.0
        warn = bool(gf.boundary_max() > 1e-9 * max(gf_max, 1e-300))
        return replace(gf, truncation_warning=warn)

    # -- restriction ----------------------------------------------------------

    def component_field(self, fixed: tuple[int, ...]) -> "GaussPolyField":
        """Rank m-l field obtained by fixing the first l indices to ``fixed``."""
        ell = len(fixed)
        if ell > self.m:
            raise ValueError("cannot fix more indices than the rank")
        n = self.n
        idx = {al: p for p, al in enumerate(multi_indices(n, self.m))}
        comps = []
        for beta in multi_indices(n, self.m - ell):
            comps.append(dict(self.comps[idx[tuple(sorted(fixed + beta))]]))
        return GaussPolyField(n, self.m - ell, self.a, tuple(comps))

    # -- JSON form -------------------------------------------------------------

    def to_json(self) -> str:
        comp = {}
        for p, alpha in enumerate(multi_indices(self.n, self.m)):
            key = "".join(str(i + 1) for i in alpha)
            comp[key] = [{"c": float(np.real(c)), "pow": list(e)}
                         for e, c in sorted(self.comps[p].items())]
        return json.dumps({"n": self.n, "m": self.m, "a": self.a, "components": comp})

    @classmethod
    def from_json(cls, text: str) -> "GaussPolyField":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed field JSON: {exc}") from exc
        for key in ("n", "m", "a", "components"):
            if key not in d:
                raise ValueError(f"malformed field JSON: missing key '{key}'")
        n, m, a = int(d["n"]), int(d["m"]), float(d["a"])
        comp_map = {}
        for key, terms in d["components"].items():
            alpha = tuple(int(c) - 1 for c in key)
            if len(alpha) != m or any(not 0 <= i < n for i in alpha):
                raise ValueError(f"malformed field JSON: bad component key '{key}'")
            poly: Poly = {}
            for t in terms:
                if "c" not in t or "pow" not in t or len(t["pow"]) != n:
                    raise ValueError(f"malformed field JSON: bad term in component '{key}'")
                e = tuple(int(v) for v in t["pow"])
                poly[e] = poly.get(e, 0.0) + float(t["c"])
            comp_map[alpha] = poly
        return cls.from_components(n, m, a, comp_map)


def random_field(n: int, m: int, rng: np.random.Generator,
                 a: float = 1.0, degree: int = 2) -> GaussPolyField:
    """Random Gaussian-polynomial field with O(1) coefficients."""
    comps = []
    exps = [e for e in itertools.product(range(degree + 1), repeat=n) if sum(e) <= degree]
    for _ in range(sym_dim(n, m)):
        poly = {e: float(c) for e, c in zip(exps, rng.uniform(-1, 1, len(exps)))}
        comps.append(poly)
    return GaussPolyField(n, m, a, tuple(comps))


# ---------------------------------------------------------------------------
# grid fields


@dataclass(frozen=True)
class GridSpec:
    """Uniform symmetric grid on [-extent, extent)^n with ``count`` nodes per axis."""

    n: int
    count: int
    extent: float

    def __post_init__(self):
        if self.count < 4:
            raise ValueError("need at least 4 nodes per axis")
        if self.extent <= 0:
            raise ValueError("extent must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.count

    def axes(self) -> list[np.ndarray]:
        ax = -self.extent + self.spacing * np.arange(self.count)
        return [ax] * self.n

    def wavenumbers(self) -> list[np.ndarray]:
        k = 2.0 * np.pi * np.fft.fftfreq(self.count, d=self.spacing)
        return [k] * self.n


@dataclass(frozen=True)
class GridField:
    """Per-node packed symmetric tensor samples on a uniform grid.

    ``data`` has shape (sym_dim(n, m),) + (count,)*n.  Periodic extension is
    assumed by the spectral operators; fields are expected to decay below the
    boundary cutoff of their generating :class:`GaussPolyField`.
    """

    n: int
    m: int
    spec: GridSpec
    data: np.ndarray = field(repr=False)
    truncation_warning: bool = False

    def __post_init__(self):
        want = (sym_dim(self.n, self.m),) + (self.spec.count,) * self.n
        if self.data.shape != want:
            raise ValueError(f"data shape {self.data.shape} != {want}")

    def norm(self) -> float:
        """Discrete L2 norm with multiplicity weights (cell volume included)."""
        w = mult_weights(self.n, self.m).reshape((-1,) + (1,) * self.n)
        vol = self.spec.spacing ** self.n
        return float(np.sqrt((w * np.abs(self.data) ** 2).sum() * vol))

    def boundary_max(self) -> float:
        out = 0.0
        for ax in range(self.n):
            sl = [slice(None)] * (self.n + 1)
            sl[ax + 1] = 0
            out = max(out, float(np.abs(self.data[tuple(sl)]).max()))
        return out

    def __add__(self, other: "GridField") -> "GridField":
        self._check_like(other)
        return replace(self, data=self.data + other.data)

    def __sub__(self, other: "GridField") -> "GridField":
        self._check_like(other)
        return replace(self, data=self.data - other.data)

    def __mul__(self, s) -> "GridField":
        return replace(self, data=self.data * s)

    __rmul__ = __mul__

    def _check_like(self, other: "GridField") -> None:
        if (self.n, self.m, self.spec) != (other.n, other.m, other.spec):
            raise ValueError("grid fields not congruent")

    # -- spectral derivatives -------------------------------------------------

    def _partial_hat(self, comp_hat: np.ndarray, axis: int) -> np.ndarray:
        k = self.spec.wavenumbers()[axis]
        shape = [1] * self.n
        shape[axis] = self.spec.count
        return 1j * k.reshape(shape) * comp_hat

    def inner_derivative(self, order: int = 1) -> "GridField":
        out = self
        for _ in range(order):
            out = out._inner_derivative_once()
        return out

    def _inner_derivative_once(self) -> "GridField":
        n, m = self.n, self.m
        idx = {al: p for p, al in enumerate(multi_indices(n, m))}
        hats = np.fft.fftn(self.data, axes=tuple(range(1, n + 1)))
        comps = []
        for gamma in multi_indices(n, m + 1):
            acc = 0.0
            for slot in range(m + 1):
                rest = gamma[:slot] + gamma[slot + 1:]
                acc = acc + self._partial_hat(hats[idx[rest]], gamma[slot])
            comps.append(acc / (m + 1))
        out = np.fft.ifftn(np.stack(comps), axes=tuple(range(1, n + 1)))
        if not np.iscomplexobj(self.data):
            out = out.real
        return GridField(n, m + 1, self.spec, out)

    def divergence(self, order: int = 1) -> "GridField":
        if order > self.m:
            raise ValueError(f"divergence order {order} exceeds rank {self.m}")
        out = self
        for _ in range(order):
            out = out._divergence_once()
        return out

    def _divergence_once(self) -> "GridField":
        n, m = self.n, self.m
        idx = {al: p for p, al in enumerate(multi_indices(n, m))}
        hats = np.fft.fftn(self.data, axes=tuple(range(1, n + 1)))
        comps = []
        for alpha in multi_indices(n, m - 1):
            acc = 0.0
            for j in range(n):
                acc = acc + self._partial_hat(hats[idx[tuple(sorted(alpha + (j,)))]], j)
            comps.append(acc)
        out = np.fft.ifftn(np.stack(comps), axes=tuple(range(1, n + 1)))
        if not np.iscomplexobj(self.data):
            out = out.real
        return GridField(n, m - 1, self.spec, out)

    # -- I/O: flat binary of doubles + JSON sidecar ---------------------------

    def dump(self, path_prefix: str) -> None:
        np.ascontiguousarray(self.data, dtype=float).tofile(path_prefix + ".bin")
        sidecar = {
            "n": self.n, "m": self.m, "count": self.spec.count,
            "extent": self.spec.extent, "spacing": self.spec.spacing,
            "origin": -self.spec.extent, "shape": list(self.data.shape),
        }
        with open(path_prefix + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path_prefix: str) -> "GridField":
        with open(path_prefix + ".json") as fh:
            sc = json.load(fh)
        data = np.fromfile(path_prefix + ".bin").reshape(sc["shape"])
        return cls(sc["n"], sc["m"], GridSpec(sc["n"], sc["count"], sc["extent"]), data)

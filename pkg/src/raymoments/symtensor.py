"""Packed symmetric tensor algebra.

A rank-m symmetric tensor over R^n is stored as one coefficient per
non-decreasing multi-index, ordered colexicographically.  All operations
are pure functions; tensors are immutable after construction.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "SymTensor",
    "sym_dim",
    "multi_indices",
    "multiplicity",
    "mult_weights",
    "symmetrize",
    "sym_mult",
    "contract",
    "eval_power",
    "sym_inner",
    "sym_mult_matrix",
    "sym_mult_monomials",
]


def sym_dim(n: int, m: int) -> int:
    """Number of independent components of a symmetric m-tensor on R^n."""
    if n < 1 or m < 0:
        raise ValueError(f"need n >= 1 and m >= 0, got n={n}, m={m}")
    return math.comb(n + m - 1, m)


@lru_cache(maxsize=None)
def multi_indices(n: int, m: int) -> tuple[tuple[int, ...], ...]:
    """All non-decreasing multi-indices of length m over axes 0..n-1.

    Ordered colexicographically (last entry varies slowest); this fixes the
    canonical packed coefficient layout.
    """
    combos = itertools.combinations_with_replacement(range(n), m)
    return tuple(sorted(combos, key=lambda t: t[::-1]))


@lru_cache(maxsize=None)
def _index_map(n: int, m: int) -> dict[tuple[int, ...], int]:
    return {alpha: p for p, alpha in enumerate(multi_indices(n, m))}


def multiplicity(alpha: tuple[int, ...]) -> int:
    """Number of distinct orderings of the multi-index alpha."""
    counts: dict[int, int] = {}
    for i in alpha:
        counts[i] = counts.get(i, 0) + 1
    out = math.factorial(len(alpha))
    for c in counts.values():
        out //= math.factorial(c)
    return out


@lru_cache(maxsize=None)
def mult_weights(n: int, m: int) -> np.ndarray:
    """Multiplicity of each packed multi-index, as a vector."""
    w = np.array([multiplicity(a) for a in multi_indices(n, m)], dtype=float)
    w.flags.writeable = False
    return w


@dataclass(frozen=True)
class SymTensor:
    """Symmetric m-tensor over R^n in packed form.

    ``coeffs[p]`` is the component at the p-th non-decreasing multi-index
    (see :func:`multi_indices`); lookup through ``__getitem__`` accepts any
    ordering of an index tuple.
    """

    n: int
    m: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != (sym_dim(self.n, self.m),):
            raise ValueError(
                f"coeffs length {c.shape} does not match sym_dim({self.n},{self.m})"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, n: int, m: int, dtype=float) -> "SymTensor":
        return cls(n, m, np.zeros(sym_dim(n, m), dtype=dtype))

    @classmethod
    def from_components(cls, n: int, m: int, comp: dict[tuple[int, ...], complex]) -> "SymTensor":
        t = np.zeros(sym_dim(n, m), dtype=complex if any(
            isinstance(v, complex) for v in comp.values()) else float)
        idx = _index_map(n, m)
        for alpha, v in comp.items():
            t[idx[tuple(sorted(alpha))]] = v
        return cls(n, m, t)

    def __getitem__(self, alpha) -> complex:
        if isinstance(alpha, int):
            alpha = (alpha,)
        return self.coeffs[_index_map(self.n, self.m)[tuple(sorted(alpha))]]

    def to_full(self) -> np.ndarray:
        """Unpack to the full n^m component table."""
        full = np.zeros((self.n,) * self.m, dtype=self.coeffs.dtype)
        for p, alpha in enumerate(multi_indices(self.n, self.m)):
            for perm in set(itertools.permutations(alpha)):
                full[perm] = self.coeffs[p]
        return full

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._check_like(other)
        return SymTensor(self.n, self.m, self.coeffs + other.coeffs)

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        self._check_like(other)
        return SymTensor(self.n, self.m, self.coeffs - other.coeffs)

    def __mul__(self, s: complex) -> "SymTensor":
        return SymTensor(self.n, self.m, self.coeffs * s)

    __rmul__ = __mul__

    def _check_like(self, other: "SymTensor") -> None:
        if (self.n, self.m) != (other.n, other.m):
            raise ValueError("rank/dimension mismatch")

    # -- JSON form: {"n":2,"m":2,"coeffs":{"11":1.0,"12":0.5}}; axis labels 1-based.

    def to_json(self) -> str:
        comp = {}
        for p, alpha in enumerate(multi_indices(self.n, self.m)):
            if self.coeffs[p] != 0:
                comp["".join(str(i + 1) for i in alpha)] = float(np.real(self.coeffs[p]))
        return json.dumps({"n": self.n, "m": self.m, "coeffs": comp})

    @classmethod
    def from_json(cls, text: str) -> "SymTensor":
        d = json.loads(text)
        comp = {tuple(int(c) - 1 for c in key): v for key, v in d["coeffs"].items()}
        return cls.from_components(d["n"], d["m"], comp)


def symmetrize(raw: np.ndarray) -> SymTensor:
    """Project a full rank-m component table onto its symmetric part.

    Groups the m! permutations by the sorted index they produce, so the cost
    is one pass over the distinct orderings of each multi-index rather than
    an m!-fold sum.
    """
    raw = np.asarray(raw)
    m = raw.ndim
    n = raw.shape[0] if m > 0 else 1
    if m > 0 and raw.shape != (n,) * m:
        raise ValueError(f"expected cubic table, got shape {raw.shape}")
    out = np.zeros(sym_dim(n, m), dtype=raw.dtype)
    for p, alpha in enumerate(multi_indices(n, m)):
        perms = set(itertools.permutations(alpha))
        out[p] = sum(raw[q] for q in perms) / len(perms)
    return SymTensor(n, m, out)


def sym_mult(u: SymTensor, x: np.ndarray, k: int) -> SymTensor:
    """Symmetric multiplication i_{x^(k)} u = sigma(x^{(x)k} (x) u), rank m+k.

    Since u and x^{(x)k} are each symmetric, the full symmetrization reduces
    to an average over the binom(m+k, k) choices of slots carrying x factors.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (u.n,):
        raise ValueError("dimension mismatch")
    if k == 0:
        return u
    n, m = u.n, u.m
    idx_u = _index_map(n, m)
    out = np.zeros(sym_dim(n, m + k), dtype=np.result_type(u.coeffs, x))
    nslots = math.comb(m + k, k)
    for p, gamma in enumerate(multi_indices(n, m + k)):
        acc = 0.0
        for S in itertools.combinations(range(m + k), k):
            rest = tuple(gamma[i] for i in range(m + k) if i not in S)
            w = 1.0
            for i in S:
                w *= x[gamma[i]]
            acc = acc + w * u.coeffs[idx_u[rest]]
        out[p] = acc / nslots
    return SymTensor(n, m + k, out)


def contract(w: SymTensor, x: np.ndarray, k: int) -> SymTensor:
    """Contraction j_{x^(k)} w: sum the last k slots of w against x, rank m-k."""
    x = np.asarray(x, dtype=float)
    if x.shape != (w.n,):
        raise ValueError("dimension mismatch")
    if k > w.m:
        raise ValueError(f"contraction order {k} exceeds rank {w.m}")
    if k == 0:
        return w
    n, m = w.n, w.m - k
    idx_w = _index_map(n, w.m)
    out = np.zeros(sym_dim(n, m), dtype=np.result_type(w.coeffs, x))
    for p, alpha in enumerate(multi_indices(n, m)):
        acc = 0.0
        for js in itertools.product(range(n), repeat=k):
            wgt = 1.0
            for j in js:
                wgt *= x[j]
            acc = acc + wgt * w.coeffs[idx_w[tuple(sorted(alpha + js))]]
        out[p] = acc
    return SymTensor(n, m, out)


def eval_power(f: SymTensor, xi: np.ndarray) -> complex:
    """Full contraction <f, xi^(x)m> = sum_alpha mult(alpha) f_alpha xi^alpha."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (f.n,):
        raise ValueError("dimension mismatch")
    w = mult_weights(f.n, f.m)
    pw = np.array([np.prod(xi[list(a)]) if a else 1.0 for a in multi_indices(f.n, f.m)])
    return (w * pw * f.coeffs).sum()


def sym_inner(a: SymTensor, b: SymTensor) -> complex:
    """Multiplicity-weighted inner product; equals the full-tensor Euclidean one."""
    a._check_like(b)
    return (mult_weights(a.n, a.m) * a.coeffs * b.coeffs).sum()


@lru_cache(maxsize=None)
def sym_mult_monomials(n: int, m: int, k: int):
    """Monomial table of the packed matrix of i_{x^(k)}: S^m -> S^{m+k}.

    Returns tuples (row, col, coeff, exponents) with
    A(x)[row, col] = sum coeff * prod_j x_j^exponents[j].  Used to assemble
    the operator for many x values at once.
    """
    idx_lo = _index_map(n, m)
    table: dict[tuple[int, int, tuple[int, ...]], float] = {}
    nslots = math.comb(m + k, k)
    for row, gamma in enumerate(multi_indices(n, m + k)):
        for S in itertools.combinations(range(m + k), k):
            exps = [0] * n
            for i in S:
                exps[gamma[i]] += 1
            rest = tuple(gamma[i] for i in range(m + k) if i not in S)
            key = (row, idx_lo[rest], tuple(exps))
            table[key] = table.get(key, 0.0) + 1.0 / nslots
    return tuple((r, c, v, e) for (r, c, e), v in sorted(table.items()))


def sym_mult_matrix(n: int, m: int, k: int, x: np.ndarray) -> np.ndarray:
    """Packed matrix of i_{x^(k)}: shape (sym_dim(n, m+k), sym_dim(n, m))."""
    x = np.asarray(x, dtype=float)
    A = np.zeros((sym_dim(n, m + k), sym_dim(n, m)))
    for r, c, v, e in sym_mult_monomials(n, m, k):
        A[r, c] += v * np.prod(x ** np.asarray(e))
    return A

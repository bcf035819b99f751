"""John-operator machinery and the range characterization of moment data.

A family (phi^0, ..., phi^k) on the line space is in the range of the
stacked moment transform of a rank-m field exactly when (1) each phi^l has
parity (-1)^{m-l} under xi -> -xi and (2) the extension psi^k solves the
iterated John equations J_{i_1 j_1} ... J_{i_{m+1} j_{m+1}} psi^k = 0.  This
module provides the psi^l / chi^l / Psi constructions, finite-difference
realizations of the John and transport operators, and :func:`range_test`,
which packages the residuals and convergence verdicts into a
:class:`RangeReport`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import GaussPolyField
from .ray import (
    MomentData,
    interpolating_moment_callables,
    make_extend_J,
    mixed_central,
    moment_oracle,
    symmetrized_mixed_sum,
)

__all__ = [
    "PhaseFunction",
    "RangeReport",
    "john_apply",
    "psi_from_phi",
    "transport_identity_residual",
    "chi_build",
    "build_capital_psi",
    "range_test",
]

# Step window bounded on both sides: iterated mixed stencils amplify
# evaluator noise like eps / h^{2(m+1)} below ~5e-3, while steps above ~5e-2
# sit in the preasymptotic regime of the sixth-order truncation terms.  The
# pass criterion is the convergence order between steps, not an absolute
# threshold.
_DEFAULT_STEPS = (0.025, 0.0125)

_ACCURACY = {"oracle-exact": 1.0, "interpolated": 1e4}


@dataclass(frozen=True)
class PhaseFunction:
    """Scalar callable on R^n x (R^n \\ {0}) with homogeneity bookkeeping.

    ``degree`` is the positive-dilation homogeneity exponent when known
    (eval(x, c xi) = c^degree eval(x, xi) for c > 0), None otherwise.
    ``provenance`` scales downstream tolerances: oracle-exact evaluators are
    noise-free, interpolated ones are not.
    """

    evaluator: object
    degree: float | None = None
    provenance: str = "oracle-exact"

    def __call__(self, x, xi) -> float:
        return float(self.evaluator(x, xi))

    def homogeneity_residual(self, x, xi, c: float = 2.0) -> float:
        if self.degree is None:
            raise ValueError("phase function carries no homogeneity tag")
        a = self(x, np.asarray(xi, dtype=float) * c)
        b = c ** self.degree * self(x, xi)
        return abs(a - b) / max(abs(a), abs(b), 1e-300)


def john_apply(psi, i: int, j: int, h: float) -> PhaseFunction:
    """J_ij psi = d^2 psi / dx^i dxi^j - d^2 psi / dx^j dxi^i, central stencil.

    Returns a composable PhaseFunction; J_ii is the exact zero function and
    J_ji = -J_ij holds exactly at the stencil level because the two mixed
    stencils swap roles.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    if i == j:
        return PhaseFunction(lambda x, xi: 0.0, None,
                             getattr(psi, "provenance", "oracle-exact"))

    def ev(x, xi, fun=psi, i=i, j=j, h=h):
        return (mixed_central(fun, x, xi, (i,), (j,), h)
                - mixed_central(fun, x, xi, (j,), (i,), h))

    deg = getattr(psi, "degree", None)
    return PhaseFunction(ev, None if deg is None else deg - 1,
                         getattr(psi, "provenance", "oracle-exact"))


def psi_from_phi(moments, m: int, ell: int,
                 provenance: str = "oracle-exact") -> PhaseFunction:
    """The extension psi^l of moment data, as a PhaseFunction.

        psi^l(x, xi) = |xi|^{m-2l-1} sum_{r<=l} (-1)^{l-r} C(l, r) |xi|^r
                       <xi, x>^{l-r} phi^r(projected line)

    The sum is the same conversion that turns I-data into J^l values, so for
    data generated by a rank-m field, psi^l equals J^l f; the code path is
    shared with :func:`raymoments.ray.make_extend_J` by construction.
    """
    J = make_extend_J(moments, m)
    return PhaseFunction(lambda x, xi: J(x, xi, ell), m - ell - 1, provenance)


def transport_identity_residual(psi_k: PhaseFunction, psi_lower, k: int,
                                ell: int, x, xi, h: float) -> float:
    """|<xi, d_x>^l psi^k - (-1)^l C(k,l) l! psi^{k-l}| at one phase point.

    ``psi_lower`` is psi^{k-l} (ignored when l > k, where the identity
    asserts plain annihilation).  The directional derivative is realized by
    iterated central differences of step h along xi.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    lhs = _directional_stack(psi_k, x, xi, ell, h)
    if ell > k:
        rhs = 0.0
    else:
        rhs = (-1.0) ** ell * math.comb(k, ell) * math.factorial(ell) * psi_lower(x, xi)
    return abs(lhs - rhs)


def _directional_stack(fun, x, xi, depth: int, h: float) -> float:
    if depth == 0:
        return float(fun(x, xi))
    step = h * xi
    return (_directional_stack(fun, x + step, xi, depth - 1, h)
            - _directional_stack(fun, x - step, xi, depth - 1, h)) / (2.0 * h)


def chi_build(psi_ell: PhaseFunction, gs, ell: int, m: int) -> PhaseFunction:
    """chi^l = ((-1)^l / l!) (psi^l - sum_{s<l} (-1)^s C(l,s) s! J^{l-s} g_s).

    ``gs`` holds the analytic correction fields g_0..g_{l-1} of ranks
    m, m-1, ..., m-l+1; their J^{l-s} values come from the closed-form
    oracle.  For data generated by f = sum_s d^s g_s the result equals
    J^0 g_l, is invariant under x -> x + t xi, and is homogeneous of degree
    m - l - 1 in xi > 0 with the parity factor t^{m-l}/|t| for t < 0.
    """
    if len(gs) != ell:
        raise ValueError(f"need exactly {ell} correction fields, got {len(gs)}")
    for s, g in enumerate(gs):
        if g.m != m - s:
            raise ValueError(f"correction field g_{s} has rank {g.m}, want {m - s}")

    def ev(x, xi):
        acc = psi_ell(x, xi)
        for s, g in enumerate(gs):
            acc -= ((-1.0) ** s * math.comb(ell, s) * math.factorial(s)
                    * moment_oracle(g, x, xi, ell - s))
        return (-1.0) ** ell / math.factorial(ell) * acc

    return PhaseFunction(ev, m - ell - 1, psi_ell.provenance)


def build_capital_psi(psi_callables, indices: tuple[int, ...], x, xi,
                      h: float, m: int) -> float:
    """Psi_{i_1..i_l} from psi^0..psi^l data at one phase point.

        Psi_{i_1..i_l} = ((m-l)!/m!) sigma(i_1..i_l)
                         sum_p (-1)^p C(l, p) d^l psi^p / dx... dxi...

    This is the restricted-transform stencil applied to psi-data; on data
    generated by a rank-m field it evaluates J^0 of the component field with
    the first l indices fixed to ``indices``.
    """
    if not indices:
        return float(psi_callables[0](x, xi))
    return float(symmetrized_mixed_sum(psi_callables, indices, x, xi, h, m))


# ---------------------------------------------------------------------------
# range testing


@dataclass(frozen=True)
class RangeReport:
    """Residuals and verdicts for the range conditions on moment data.

    ``john`` rows: {"tuple": ((i,j), ...), "point": p, "residuals": [per
    step], "order": log2 ratio}.  Convergence orders are the pass criterion
    for the finite-difference tests; parity is an exact grid symmetry and
    gets an absolute tolerance.
    """

    m: int
    k: int
    steps: tuple
    parity: dict = field(repr=False)
    john: list = field(repr=False)
    transport: list = field(repr=False)
    parity_tol: float
    order_window: tuple = (1.5, 2.5)
    parity_available: bool = True

    @property
    def parity_pass(self) -> bool:
        if not self.parity_available:
            return True
        return all(r < self.parity_tol for r in self.parity.values())

    @staticmethod
    def _order_pass(rows, lo, hi, floor) -> bool:
        for row in rows:
            fine = row["residuals"][-1]
            if fine < floor:
                continue                  # converged into the noise floor
            if not lo <= row["order"] <= hi:
                return False
        return True

    @property
    def john_pass(self) -> bool:
        return self._order_pass(self.john, *self.order_window, 1e-10)

    @property
    def transport_pass(self) -> bool:
        return self._order_pass(self.transport, *self.order_window, 1e-10)

    @property
    def passed(self) -> bool:
        return self.parity_pass and self.john_pass and self.transport_pass

    def max_john_residual(self) -> float:
        return max((row["residuals"][-1] for row in self.john), default=0.0)


def _parity_residuals(data: MomentData) -> dict:
    half = data.ndirs // 2
    out = {}
    for ell in range(data.k + 1):
        sign = (-1.0) ** (data.m - ell)
        diff = data.values[ell, half:] - sign * data.values[ell, :half]
        scale = max(float(np.abs(data.values[ell]).max()), 1e-300)
        out[ell] = float(np.abs(diff).max()) / scale
    return out


def _john_tuples(n: int, m: int, rng: np.random.Generator, count: int = 64):
    if n == 2:
        return [(((0, 1),) * (m + 1))]
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    out = []
    for _ in range(count):
        out.append(tuple(pairs[rng.integers(len(pairs))] for _ in range(m + 1)))
    return out


def _phase_points(n: int, rng: np.random.Generator, count: int):
    pts = []
    for _ in range(count):
        x = rng.uniform(-1.0, 1.0, size=n)
        xi = rng.normal(size=n)
        xi /= np.linalg.norm(xi)
        xi *= rng.uniform(0.8, 1.2)
        pts.append((x, xi))
    return pts


def range_test(data: MomentData | None, m: int, k: int,
               steps: tuple = _DEFAULT_STEPS,
               moment_callables=None,
               provenance: str = "oracle-exact",
               npoints: int = 2, ntuples: int = 64,
               seed: int = 0, n: int | None = None) -> RangeReport:
    """Evaluate the range conditions on moment data.

    Parity residuals come from the sampled values of ``data`` over its
    antipodal direction pairs (marked unavailable when no data is given).
    The iterated John equations and the transport identities are tested on
    psi^l built from ``moment_callables`` (falling back to interpolating the
    data when omitted), at every step in ``steps``, and judged by the
    measured convergence order between consecutive steps.
    """
    if moment_callables is None:
        if data is None:
            raise ValueError("need moment data or moment callables")
        moment_callables = interpolating_moment_callables(data)
        provenance = "interpolated"
    if len(steps) < 2:
        raise ValueError("need at least two step sizes for order estimates")
    if k > m:
        raise ValueError("moment order exceeds rank")
    if data is not None:
        n = data.n
    elif n is None:
        raise ValueError("spatial dimension cannot be inferred; pass n")
    rng = np.random.default_rng(seed)
    scale_tol = _ACCURACY.get(provenance, 1.0)

    parity = _parity_residuals(data) if data is not None else {}

    psis = [psi_from_phi(moment_callables, m, ell, provenance)
            for ell in range(k + 1)]
    points = _phase_points(n, rng, npoints)

    # residuals aggregated over the phase points per tuple: a single point can
    # sit at an accidental zero of the leading truncation term, which would
    # make its individual order estimate meaningless
    john_rows = []
    for tup in _john_tuples(n, m, rng, ntuples):
        residuals = []
        for h in steps:
            acc = 0.0
            for x, xi in points:
                fun = psis[k]
                for (i, j) in tup:
                    fun = john_apply(fun, i, j, h)
                acc += abs(fun(x, xi))
            residuals.append(acc)
        john_rows.append({"tuple": tup, "residuals": residuals,
                          "order": _order(residuals, steps)})

    transport_rows = []
    for ell in range(1, k + 2):
        lower = psis[k - ell] if ell <= k else None
        for x, xi in points:
            residuals = [transport_identity_residual(psis[k], lower, k, ell,
                                                     x, xi, h)
                         for h in steps]
            transport_rows.append({"ell": ell, "point": (tuple(x), tuple(xi)),
                                   "residuals": residuals,
                                   "order": _order(residuals, steps)})

    return RangeReport(m, k, tuple(steps), parity, john_rows, transport_rows,
                       parity_tol=1e-12 * scale_tol,
                       parity_available=data is not None)


def _order(residuals, steps) -> float:
    r0, r1 = residuals[0], residuals[-1]
    if r1 <= 0:
        return float("inf")
    ratio = steps[0] / steps[-1]
    return math.log(max(r0, 1e-300) / r1) / math.log(ratio)

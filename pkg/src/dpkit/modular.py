"""Modulars, Luxemburg norms and related inequalities on discrete functions.

The integrand is H(x, t) = t^p(x) + mu(x) t^q(x).  For a P1 function u every
modular evaluated by quadrature is a finite sum

    rho(t u) = sum_k c_k t^{e_k},   c_k >= 0,  e_k > 1,

with one term per quadrature sample and part (plain p-part, weighted q-part;
gradient samples are constant per element).  This representation makes the
Luxemburg norm a one-dimensional root-find in t = 1/lambda for the strictly
increasing convex map t -> rho(t u), which is solved by bracketed bisection
with Newton acceleration: the bracket comes from the norm-modular sandwich,
bisection guarantees convergence, Newton steps inside the bracket give the
usual quadratic tail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad as _scipy_quad
from scipy.optimize import brentq as _brentq

from .errors import NumericError
from .fem import DEFAULT_QUAD_ORDER, DiscreteFunction, Mesh
from .fields import DoublePhase

__all__ = [
    "ModularReport",
    "NormModularReport",
    "ConvexityProbe",
    "ReverseHolderResult",
    "LuxemburgResult",
    "modular",
    "modular_sobolev",
    "luxemburg_norm",
    "luxemburg_report",
    "weighted_seminorm",
    "check_norm_modular",
    "sobolev_conjugate_inverse",
    "reverse_holder_check",
    "truncate",
    "uniform_convexity_probe",
    "poincare_ratio",
    "DEFAULT_NORM_TOL",
]

DEFAULT_NORM_TOL = 1e-12

# --------------------------------------------------------------------------
# power-sum representation of quadrature modulars


@dataclass(frozen=True)
class _PowerSum:
    """rho(t u) = coefs . t**expos with nonnegative coefs and expos > 1."""

    coefs: np.ndarray
    expos: np.ndarray

    @property
    def empty(self) -> bool:
        return self.coefs.size == 0

    def value(self, t: float = 1.0) -> float:
        if self.empty:
            return 0.0
        if t == 1.0:
            return float(self.coefs.sum())
        return float(self.coefs @ np.power(t, self.expos))


def _phase_at_quadrature(phase: DoublePhase, mesh: Mesh, order: int):
    pts, w, _ = mesh.quadrature_points(order)
    p, q, mu = phase.at(pts)
    return p, q, mu, w


def _part_terms(samples: np.ndarray, expo: np.ndarray, weight: np.ndarray) -> _PowerSum:
    """Terms weight * samples**expo with zero-coefficient entries dropped."""
    s = np.broadcast_to(samples, expo.shape).reshape(-1)
    e = expo.reshape(-1)
    w = np.broadcast_to(weight, expo.shape).reshape(-1)
    keep = (w != 0.0) & (s != 0.0)
    c = w[keep] * np.power(s[keep], e[keep])
    return _PowerSum(c, e[keep])


def _concat(parts) -> _PowerSum:
    return _PowerSum(
        np.concatenate([p.coefs for p in parts]),
        np.concatenate([p.expos for p in parts]),
    )


def _collect_terms(
    u: DiscreteFunction, phase: DoublePhase, order: int, which: str
) -> _PowerSum:
    mesh = u.mesh
    p, q, mu, w = _phase_at_quadrature(phase, mesh, order)
    parts = []
    if which in ("value", "sobolev"):
        vals = np.abs(u.values_at(order))
        parts += [_part_terms(vals, p, w), _part_terms(vals, q, w * mu)]
    if which in ("gradient", "sobolev"):
        grads = u.gradient_norms()[:, None]
        parts += [_part_terms(grads, p, w), _part_terms(grads, q, w * mu)]
    if which == "seminorm":
        vals = np.abs(u.values_at(order))
        parts = [_part_terms(vals, q, w * mu)]
    if not parts:
        raise ValueError(f"unknown modular variant {which!r}")
    return _concat(parts)


def _luxemburg_root(terms: _PowerSum, tol: float) -> tuple[float, int]:
    """Solve rho(t u) = 1 for t and return (lambda, iterations) with lambda = 1/t.

    Stops when |rho(u/lambda) - 1| <= tol * e_max * min(1/lambda, 1): for
    norms above one this makes lambda accurate to about tol absolutely, and
    for norms below one it caps the admissible modular residual at
    tol * e_max.  Also stops when the bracket collapses to adjacent floats
    (lambda then carries no representable error).  Raises NumericError if the
    iteration budget runs out with a live bracket.
    """
    if terms.empty:
        return 0.0, 0
    m1 = terms.value(1.0)
    if m1 == 0.0:
        return 0.0, 0
    if not np.isfinite(m1):
        raise NumericError("modular overflow while bracketing the Luxemburg norm")
    e_lo = float(terms.expos.min())
    e_hi = float(terms.expos.max())
    lam_bounds = sorted((m1 ** (1.0 / e_lo), m1 ** (1.0 / e_hi)))
    t_lo, t_hi = 1.0 / lam_bounds[1], 1.0 / lam_bounds[0]
    # floating-point slack, then geometric expansion if rounding flipped a sign
    t_lo *= 1.0 - 1e-12
    t_hi *= 1.0 + 1e-12
    for _ in range(64):
        if terms.value(t_lo) - 1.0 <= 0.0:
            break
        t_lo *= 0.5
    for _ in range(64):
        if terms.value(t_hi) - 1.0 >= 0.0:
            break
        t_hi *= 2.0
    t = t_hi
    for it in range(1, 301):
        powv = np.power(t, terms.expos)
        h = float(terms.coefs @ powv) - 1.0
        if abs(h) <= tol * e_hi * min(t, 1.0):
            return 1.0 / t, it
        if h > 0.0:
            t_hi = t
        else:
            t_lo = t
        slope = float((terms.coefs * terms.expos) @ powv) / t
        t_new = t - h / slope if slope > 0.0 else 0.5 * (t_lo + t_hi)
        if not t_lo < t_new < t_hi:
            t_new = 0.5 * (t_lo + t_hi)
        if t_new == t:  # bracket exhausted: t is exact to machine precision
            return 1.0 / t, it
        t = t_new
    raise NumericError(
        "Luxemburg norm did not reach the modular tolerance "
        f"(bracket [{1.0 / t_hi}, {1.0 / t_lo}], "
        f"residual target {tol * e_hi * min(t, 1.0)})"
    )


# --------------------------------------------------------------------------
# public modular / norm API


@dataclass(frozen=True)
class ModularReport:
    """A modular split into its plain p-part and weighted q-part."""

    p_part: float
    q_part: float

    @property
    def total(self) -> float:
        return self.p_part + self.q_part


def modular(
    u: DiscreteFunction,
    phase: DoublePhase,
    on: str = "value",
    order: int = DEFAULT_QUAD_ORDER,
) -> ModularReport:
    """rho_H of u (``on="value"``) or of |grad u| (``on="gradient"``)."""
    if on not in ("value", "gradient"):
        raise ValueError(f"'on' must be 'value' or 'gradient', got {on!r}")
    p, q, mu, w = _phase_at_quadrature(phase, u.mesh, order)
    if on == "value":
        s = np.abs(u.values_at(order))
    else:
        s = u.gradient_norms()[:, None]
    p_part = _part_terms(s, p, w).value()
    q_part = _part_terms(s, q, w * mu).value()
    return ModularReport(p_part, q_part)


def modular_sobolev(
    u: DiscreteFunction, phase: DoublePhase, order: int = DEFAULT_QUAD_ORDER
) -> ModularReport:
    """The full Sobolev modular: gradient modular plus value modular."""
    mv = modular(u, phase, "value", order)
    mg = modular(u, phase, "gradient", order)
    return ModularReport(mv.p_part + mg.p_part, mv.q_part + mg.q_part)


def luxemburg_norm(
    u: DiscreteFunction,
    phase: DoublePhase,
    which: str = "value",
    tol: float = DEFAULT_NORM_TOL,
    order: int = DEFAULT_QUAD_ORDER,
) -> float:
    """Luxemburg norm inf{lambda > 0 : rho(u / lambda) <= 1}.

    ``which`` selects the modular: ``"value"`` for the Lebesgue-space norm,
    ``"gradient"`` for the zero-trace Sobolev norm, ``"sobolev"`` for the
    full Sobolev modular.  Returns 0 for functions vanishing at every
    quadrature sample.
    """
    return luxemburg_report(u, phase, which, tol, order).norm


@dataclass(frozen=True)
class LuxemburgResult:
    """Luxemburg norm together with its root-finder iteration count."""

    norm: float
    iterations: int
    which: str
    tol: float


def luxemburg_report(
    u: DiscreteFunction,
    phase: DoublePhase,
    which: str = "value",
    tol: float = DEFAULT_NORM_TOL,
    order: int = DEFAULT_QUAD_ORDER,
) -> LuxemburgResult:
    """Like :func:`luxemburg_norm` but reporting the iteration count too."""
    if which not in ("value", "gradient", "sobolev"):
        raise ValueError(f"unknown norm variant {which!r}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    lam, its = _luxemburg_root(_collect_terms(u, phase, order, which), tol)
    return LuxemburgResult(lam, its, which, tol)


def weighted_seminorm(
    u: DiscreteFunction,
    phase: DoublePhase,
    tol: float = DEFAULT_NORM_TOL,
    order: int = DEFAULT_QUAD_ORDER,
) -> float:
    """The mu-weighted q(.)-seminorm inf{tau : int mu (|u|/tau)^q dx <= 1}.

    Vanishes whenever mu |u| vanishes at all quadrature samples, which is
    what makes it a seminorm rather than a norm.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    return _luxemburg_root(_collect_terms(u, phase, order, "seminorm"), tol)[0]


@dataclass
class NormModularReport:
    """Norm, modular, and the slack of every applicable norm–modular relation.

    Each entry of ``slacks`` is (name, value); nonnegative values mean the
    relation holds.  Slacks are normalized by the magnitude of the larger
    side of each inequality, so the pass tolerance is scale-free: in the
    single-exponent case the sandwich degenerates to an equality between
    quantities that grow like norm^p, and a raw difference would drown in
    rounding noise long before the relation itself failed.  ``passed``
    applies a caller-supplied tolerance.
    """

    norm: float
    modular: float
    regime: str
    slacks: list
    tol: float

    @property
    def passed(self) -> bool:
        return all(v >= -self.tol for _, v in self.slacks)


def check_norm_modular(
    u: DiscreteFunction,
    phase: DoublePhase,
    which: str = "value",
    order: int = DEFAULT_QUAD_ORDER,
    tol: float = 1e-12,
    norm_tol: float = 1e-14,
) -> NormModularReport:
    """Verify the norm–modular sandwich and sign equivalences for one function.

    For ||u|| > 1:  ||u||^{p-} <= rho(u) <= ||u||^{q+};
    for ||u|| < 1 the exponents swap; at ||u|| = 1 the modular equals one.
    The exponent bounds are taken over the active quadrature samples, where
    the discrete modular lives.
    """
    terms = _collect_terms(u, phase, order, which)
    lam, _ = _luxemburg_root(terms, norm_tol)
    rho = terms.value(1.0)
    if lam == 0.0:
        return NormModularReport(0.0, rho, "zero", [("modular zero", -abs(rho))], tol)
    e_lo = float(terms.expos.min())
    e_hi = float(terms.expos.max())
    band = 10.0 * max(norm_tol, 1e-13)

    def rel(hi_side: float, lo_side: float) -> float:
        return (hi_side - lo_side) / max(1.0, abs(hi_side), abs(lo_side))

    slacks = []
    if abs(lam - 1.0) <= band:
        regime = "unit"
        slacks.append(("modular equals one at unit norm", band * e_hi - abs(rho - 1.0)))
    elif lam > 1.0:
        regime = "above-one"
        slacks.append(("rho >= norm^p-", rel(rho, lam**e_lo)))
        slacks.append(("rho <= norm^q+", rel(lam**e_hi, rho)))
        slacks.append(("sign: rho > 1 when norm > 1", rel(rho, 1.0)))
    else:
        regime = "below-one"
        slacks.append(("rho >= norm^q+", rel(rho, lam**e_hi)))
        slacks.append(("rho <= norm^p-", rel(lam**e_lo, rho)))
        slacks.append(("sign: rho < 1 when norm < 1", rel(1.0, rho)))
    return NormModularReport(lam, rho, regime, slacks, tol)


# --------------------------------------------------------------------------
# Sobolev conjugate


def sobolev_conjugate_inverse(
    phase: DoublePhase, x, s: float, tol: float = 1e-10
) -> float:
    """Inverse of the Sobolev conjugate of H at a point x, evaluated at s.

    Computes  int_0^s  H1^{-1}(x, tau) / tau^{(N+1)/N}  d tau  where H1
    agrees with H above t = 1 and is linear below.  On the linear branch the
    integrand is tau^{-1/N} / H(x, 1), integrated in closed form; the rest is
    adaptive quadrature with the scalar inverse of H obtained by bracketed
    root-finding on [1, tau^{1/p(x)}].
    """
    N = phase.dim
    if N < 2:
        raise ValueError("the Sobolev conjugate requires ambient dimension N >= 2")
    s = float(s)
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 0.0
    xp = np.atleast_1d(np.asarray(x, dtype=float))
    pv, qv, muv = (float(np.atleast_1d(v)[0]) for v in phase.at(xp[None, :]))
    h1 = 1.0 + muv  # H(x, 1)
    s_lin = min(s, h1)
    result = (N / (N - 1.0)) * s_lin ** ((N - 1.0) / N) / h1
    if s > h1:

        def h_inverse(tau):
            hi = tau ** (1.0 / pv)
            if muv == 0.0:
                return hi
            return _brentq(
                lambda t: t**pv + muv * t**qv - tau, 1.0, max(hi, 1.0 + 1e-15),
                xtol=1e-14, rtol=8.9e-16,
            )

        val, abserr = _scipy_quad(
            lambda tau: h_inverse(tau) / tau ** ((N + 1.0) / N),
            h1,
            s,
            epsabs=tol,
            epsrel=tol,
            limit=200,
        )
        if abserr > 10.0 * tol * max(1.0, abs(val)):
            raise NumericError(
                f"Sobolev-conjugate quadrature error {abserr} exceeds tolerance {tol}"
            )
        result += val
    return float(result)


# --------------------------------------------------------------------------
# inequalities and probes


@dataclass(frozen=True)
class ReverseHolderResult:
    lhs: float
    rhs: float
    tol: float

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tol


def reverse_holder_check(
    f: DiscreteFunction,
    g: DiscreteFunction,
    r,
    order: int = DEFAULT_QUAD_ORDER,
    tol: float = 1e-12,
) -> ReverseHolderResult:
    """Reverse Hölder inequality for a variable exponent r with r- > 1.

    Checks  max{||fg||_1^{1/r-}, ||fg||_1^{1/r+}}
            >= 1/2 || |f|^{1/r(.)} ||_1 * min{ || |g|^{-1/(r-1)} ||_1^{(1-r+)/r-},
                                               || |g|^{-1/(r-1)} ||_1^{(1-r-)/r+} }

    with exponent bounds and integrals taken over the quadrature samples.
    """
    if g.mesh is not f.mesh:
        raise ValueError("f and g must live on the same mesh")
    _, w, _ = f.mesh.quadrature_points(order)
    fv = np.abs(f.values_at(order))
    gv = np.abs(g.values_at(order))
    if np.any(gv == 0.0):
        raise ValueError("g must be nonzero at every quadrature sample")
    rv = r(f.mesh.quadrature_points(order)[0].reshape(-1, f.mesh.dim)).reshape(w.shape)
    r_lo, r_hi = float(rv.min()), float(rv.max())
    if r_lo <= 1.0:
        raise ValueError(f"reverse Hölder requires r > 1, got minimum {r_lo}")
    norm_fg = float(np.sum(w * fv * gv))
    int_f = float(np.sum(w * fv ** (1.0 / rv)))
    int_g = float(np.sum(w * gv ** (-1.0 / (rv - 1.0))))
    lhs = max(norm_fg ** (1.0 / r_lo), norm_fg ** (1.0 / r_hi))
    rhs = 0.5 * int_f * min(
        int_g ** ((1.0 - r_hi) / r_lo), int_g ** ((1.0 - r_lo) / r_hi)
    )
    return ReverseHolderResult(lhs, rhs, tol)


def truncate(u: DiscreteFunction, sign: int = 1) -> DiscreteFunction:
    """Nodal positive part max(u, 0) (sign=+1) or negative part max(-u, 0).

    For P1 functions the nodal truncation satisfies u = u+ - u- and
    |u| = u+ + u- exactly at the nodes, hence as discrete functions.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return DiscreteFunction(
        u.mesh, np.maximum(sign * u.values, 0.0), zero_boundary=u.zero_boundary
    )


@dataclass(frozen=True)
class ConvexityProbe:
    branch: str  # "within-eps" or "separated"
    delta: float


def uniform_convexity_probe(
    phase: DoublePhase, x, t: float, s: float, eps: float
) -> ConvexityProbe:
    """Dichotomy underlying uniform convexity of the modular.

    Either |t - s| <= eps * max(t, s) (branch "within-eps"), or the midpoint
    value improves on the average:  H(x, (t+s)/2) <= (1 - delta)/2 * (H(x,t)
    + H(x,s)) with the observed delta > 0 returned.
    """
    if not (t >= 0.0 and s >= 0.0):
        raise ValueError("t and s must be nonnegative")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if abs(t - s) <= eps * max(t, s):
        return ConvexityProbe("within-eps", 0.0)
    xp = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    ht = float(phase.h_at(xp, t)[0])
    hs = float(phase.h_at(xp, s)[0])
    hm = float(phase.h_at(xp, 0.5 * (t + s))[0])
    delta = 1.0 - 2.0 * hm / (ht + hs)
    if delta <= 0.0:
        raise NumericError(
            f"convexity defect non-positive (delta={delta}) for t={t}, s={s}"
        )
    return ConvexityProbe("separated", delta)


def poincare_ratio(
    u: DiscreteFunction,
    phase: DoublePhase,
    tol: float = DEFAULT_NORM_TOL,
    order: int = DEFAULT_QUAD_ORDER,
) -> float:
    """||u||_H / || |grad u| ||_H for a nonzero zero-trace function."""
    if not u.zero_boundary:
        raise ValueError("the Poincaré ratio applies to zero-trace functions")
    grad_norm = luxemburg_norm(u, phase, "gradient", tol, order)
    if grad_norm == 0.0:
        raise ValueError("u vanishes identically; the ratio is undefined")
    return luxemburg_norm(u, phase, "value", tol, order) / grad_norm

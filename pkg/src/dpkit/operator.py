"""Energy, weak form, residual and Jacobian of the double-phase operator.

The operator is  A(u): v -> int ( |grad u|^{p(x)-2} + mu(x) |grad u|^{q(x)-2} )
grad u . grad v dx.  On P1 elements the gradient is constant per element while
the exponents vary across quadrature points, so every element contributes

    c_e = sum_g w_g ( s^{p(x_g)-2} + mu(x_g) s^{q(x_g)-2} ),   s = |grad u|_e,

times grad u . grad phi_i.  The convention |0|^{p-2} 0 = 0 is used throughout,
so degenerate elements contribute nothing even for p < 2.

Jacobians regularize only the power weights, replacing s by
sqrt(s^2 + eps_reg^2); the residual itself is never regularized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fem import DEFAULT_QUAD_ORDER, DiscreteFunction, Mesh
from .fields import DoublePhase, field_bounds
from .modular import luxemburg_norm

__all__ = [
    "OperatorAssembly",
    "SimonResult",
    "DualBoundResult",
    "energy",
    "energy_with_mass",
    "apply_operator",
    "apply_operator_with_mass",
    "assemble_load",
    "assemble_residual",
    "assemble_jacobian",
    "gradient_check",
    "monotonicity_probe",
    "simon_inequality",
    "boundedness_estimate",
    "DEFAULT_EPS_REG",
]

DEFAULT_EPS_REG = 1e-8


def _power0(s: np.ndarray, expo: np.ndarray) -> np.ndarray:
    """s**expo with the convention 0**e = 0 (any e), elementwise."""
    s, expo = np.broadcast_arrays(s, expo)
    out = np.zeros(s.shape)
    nz = s > 0.0
    out[nz] = s[nz] ** expo[nz]
    return out


def _flux_coefficients(
    u: DiscreteFunction, phase: DoublePhase, order: int, eps_reg: float | None = None
) -> np.ndarray:
    """Per-element quadrature sum of the power weight, shape (nelems,)."""
    pts, w, _ = u.mesh.quadrature_points(order)
    p, q, mu = phase.at(pts)
    s = u.gradient_norms()[:, None]
    if eps_reg is not None:
        s = np.hypot(s, eps_reg)
        weight = s ** (p - 2.0) + mu * s ** (q - 2.0)
    else:
        weight = _power0(s, p - 2.0) + mu * _power0(s, q - 2.0)
    return np.sum(w * weight, axis=1)


def energy(u: DiscreteFunction, phase: DoublePhase, order: int = DEFAULT_QUAD_ORDER) -> float:
    """The double-phase energy int( |grad u|^p / p + mu |grad u|^q / q ) dx."""
    pts, w, _ = u.mesh.quadrature_points(order)
    p, q, mu = phase.at(pts)
    s = u.gradient_norms()[:, None]
    return float(np.sum(w * (_power0(s, p) / p + mu * _power0(s, q) / q)))


def energy_with_mass(
    u: DiscreteFunction, phase: DoublePhase, order: int = DEFAULT_QUAD_ORDER
) -> float:
    """Energy including the lower-order terms int( |u|^p / p + mu |u|^q / q )."""
    pts, w, _ = u.mesh.quadrature_points(order)
    p, q, mu = phase.at(pts)
    v = np.abs(u.values_at(order))
    lower = float(np.sum(w * (_power0(v, p) / p + mu * _power0(v, q) / q)))
    return energy(u, phase, order) + lower


def apply_operator(
    u: DiscreteFunction,
    v: DiscreteFunction,
    phase: DoublePhase,
    order: int = DEFAULT_QUAD_ORDER,
) -> float:
    """The duality pairing <A(u), v>."""
    if v.mesh is not u.mesh:
        raise ValueError("u and v must live on the same mesh")
    c = _flux_coefficients(u, phase, order)
    return float(np.sum(c * np.sum(u.gradients * v.gradients, axis=1)))


def apply_operator_with_mass(
    u: DiscreteFunction,
    v: DiscreteFunction,
    phase: DoublePhase,
    order: int = DEFAULT_QUAD_ORDER,
) -> float:
    """Pairing of the operator extended by the lower-order terms.

    Adds int ( |u|^{p-2} u + mu |u|^{q-2} u ) v dx to <A(u), v>.
    """
    if v.mesh is not u.mesh:
        raise ValueError("u and v must live on the same mesh")
    pts, w, _ = u.mesh.quadrature_points(order)
    p, q, mu = phase.at(pts)
    uv = u.values_at(order)
    au = np.abs(uv)
    lower = (_power0(au, p - 2.0) + mu * _power0(au, q - 2.0)) * uv
    return apply_operator(u, v, phase, order) + float(np.sum(w * lower * v.values_at(order)))


def assemble_load(mesh: Mesh, f, order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """Load vector l_i = int f phi_i dx over all nodes.

    ``f`` is a callable over points or an array of quadrature samples with
    shape (nelems, nq).
    """
    pts, w, _ = mesh.quadrature_points(order)
    if callable(f):
        fv = np.asarray(f(pts.reshape(-1, mesh.dim)), dtype=float).reshape(w.shape)
    else:
        fv = np.asarray(f, dtype=float)
        if fv.shape != w.shape:
            raise ValueError(f"expected samples of shape {w.shape}, got {fv.shape}")
    basis = mesh.basis_at(order)  # (nq, nverts)
    contrib = np.einsum("eq,qv->ev", w * fv, basis)
    load = np.zeros(mesh.num_nodes)
    np.add.at(load, mesh.elements, contrib)
    return load


@dataclass
class OperatorAssembly:
    """Residual (and optionally Jacobian) of the weak form over free nodes."""

    residual: np.ndarray
    jacobian: sp.csr_matrix | None
    free_nodes: np.ndarray
    eps_reg: float

    @property
    def residual_norm(self) -> float:
        return float(np.max(np.abs(self.residual), initial=0.0))


def _operator_residual_full(u: DiscreteFunction, phase: DoublePhase, order: int) -> np.ndarray:
    """<A(u), phi_i> for every nodal hat, as a full-length vector."""
    mesh = u.mesh
    c = _flux_coefficients(u, phase, order)
    edot = np.einsum("ed,evd->ev", u.gradients, mesh.basis_gradients)
    out = np.zeros(mesh.num_nodes)
    np.add.at(out, mesh.elements, c[:, None] * edot)
    return out


def assemble_residual(
    u: DiscreteFunction,
    phase: DoublePhase,
    rhs: np.ndarray | None = None,
    order: int = DEFAULT_QUAD_ORDER,
    with_jacobian: bool = False,
    eps_reg: float = DEFAULT_EPS_REG,
) -> OperatorAssembly:
    """Residual r_i = <A(u), phi_i> - rhs_i over the free nodes.

    ``rhs`` is a full-node load vector (see :func:`assemble_load`) or None
    for a zero right-hand side.
    """
    mesh = u.mesh
    res = _operator_residual_full(u, phase, order)
    if rhs is not None:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (mesh.num_nodes,):
            raise ValueError("rhs must be a full-node load vector")
        res = res - rhs
    jac = None
    if with_jacobian:
        jac = assemble_jacobian(u, phase, order=order, eps_reg=eps_reg)
    return OperatorAssembly(res[mesh.free_nodes], jac, mesh.free_nodes, eps_reg)


def assemble_jacobian(
    u: DiscreteFunction,
    phase: DoublePhase,
    order: int = DEFAULT_QUAD_ORDER,
    eps_reg: float = DEFAULT_EPS_REG,
) -> sp.csr_matrix:
    """Regularized Jacobian of the residual, restricted to free nodes.

    Linearizing the flux g(s) grad u with s = sqrt(|grad u|^2 + eps_reg^2)
    gives the per-element matrix  a_e I + b_e grad u (grad u)^T  with
    a_e = sum_g w_g g(s) and b_e = sum_g w_g g'(s)/s; the result is symmetric
    and positive semi-definite for p, q >= 2 (and positive definite along
    the gradient direction for all p > 1).
    """
    if eps_reg <= 0.0:
        raise ValueError("eps_reg must be positive")
    mesh = u.mesh
    pts, w, _ = mesh.quadrature_points(order)
    p, q, mu = phase.at(pts)
    s = np.hypot(u.gradient_norms()[:, None], eps_reg)
    a = np.sum(w * (s ** (p - 2.0) + mu * s ** (q - 2.0)), axis=1)
    b = np.sum(w * ((p - 2.0) * s ** (p - 4.0) + mu * (q - 2.0) * s ** (q - 4.0)), axis=1)
    G = mesh.basis_gradients  # (nelems, nv, dim)
    gram = np.einsum("eid,ejd->eij", G, G)
    gdot = np.einsum("ed,evd->ev", u.gradients, G)
    local = a[:, None, None] * gram + b[:, None, None] * np.einsum(
        "ei,ej->eij", gdot, gdot
    )
    nv = mesh.elements.shape[1]
    rows = np.repeat(mesh.elements, nv, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, nv)).ravel()
    K = sp.coo_matrix(
        (local.ravel(), (rows, cols)), shape=(mesh.num_nodes, mesh.num_nodes)
    ).tocsr()
    free = mesh.free_nodes
    return K[free][:, free].tocsr()


def gradient_check(
    u: DiscreteFunction,
    h: DiscreteFunction,
    phase: DoublePhase,
    eps: float = 1e-4,
    order: int = DEFAULT_QUAD_ORDER,
) -> float:
    """Relative error between <A(u), h> and a central difference of the energy.

    Returns |(E(u + eps h) - E(u - eps h)) / (2 eps) - <A(u), h>| divided by
    1 + |<A(u), h>|; the energy is the potential of the operator, so the
    error decays like eps^2.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    e_plus = energy(u + eps * h, phase, order)
    e_minus = energy(u + (-eps) * h, phase, order)
    pairing = apply_operator(u, h, phase, order)
    return abs((e_plus - e_minus) / (2.0 * eps) - pairing) / (1.0 + abs(pairing))


def monotonicity_probe(
    u: DiscreteFunction,
    v: DiscreteFunction,
    phase: DoublePhase,
    order: int = DEFAULT_QUAD_ORDER,
) -> float:
    """<A(u) - A(v), u - v>; strictly positive for distinct arguments."""
    if v.mesh is not u.mesh:
        raise ValueError("u and v must live on the same mesh")
    cu = _flux_coefficients(u, phase, order)
    cv = _flux_coefficients(v, phase, order)
    d = u.gradients - v.gradients
    return float(
        np.sum(cu * np.sum(u.gradients * d, axis=1) - cv * np.sum(v.gradients * d, axis=1))
    )


@dataclass(frozen=True)
class SimonResult:
    lhs: np.ndarray
    rhs: np.ndarray
    passed: np.ndarray

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))


def simon_inequality(xi, eta, p: float, tol: float = 1e-12) -> SimonResult:
    """Vector inequalities bounding the monotonicity pairing from below.

    For p >= 2:     5^{(2-p)/2} |xi-eta|^p  <=  (F(xi)-F(eta)).(xi-eta)
    for 1 <= p <= 2: (p-1) 2^{(p-1)(p-2)/p} |xi-eta|^2
                     <=  (F(xi)-F(eta)).(xi-eta) * (|xi|^p+|eta|^p)^{(2-p)/p}

    where F(z) = |z|^{p-2} z with F(0) = 0.  ``xi`` and ``eta`` may be single
    vectors or batches with the vector axis last; at p = 2 both forms
    coincide and the first is used.
    """
    p = float(p)
    if p < 1.0:
        raise ValueError(f"the inequalities require p >= 1, got {p}")
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    single = xi.ndim == 1
    if single:
        xi, eta = xi[None, :], eta[None, :]
    nxi = np.sqrt(np.sum(xi**2, axis=-1))
    neta = np.sqrt(np.sum(eta**2, axis=-1))
    fxi = _power0(nxi, p - 2.0)[..., None] * xi
    feta = _power0(neta, p - 2.0)[..., None] * eta
    diff = xi - eta
    pairing = np.sum((fxi - feta) * diff, axis=-1)
    ndiff = np.sqrt(np.sum(diff**2, axis=-1))
    if p >= 2.0:
        lhs = 5.0 ** ((2.0 - p) / 2.0) * ndiff**p
        rhs = pairing
    else:
        lhs = (p - 1.0) * 2.0 ** ((p - 1.0) * (p - 2.0) / p) * ndiff**2
        rhs = pairing * _power0(nxi**p + neta**p, (2.0 - p) / p)
    passed = lhs <= rhs + tol
    if single:
        return SimonResult(float(lhs[0]), float(rhs[0]), bool(passed[0]))
    return SimonResult(lhs, rhs, passed)


@dataclass(frozen=True)
class DualBoundResult:
    """Dual-norm bound for A(u) against an empirical supremum over directions."""

    bound: float
    empirical: float
    norm_u: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + self.tol


def boundedness_estimate(
    u: DiscreteFunction,
    phase: DoublePhase,
    order: int = DEFAULT_QUAD_ORDER,
    n_random: int = 100,
    seed: int = 0,
    tol: float = 1e-9,
) -> DualBoundResult:
    """Check ||A(u)||_* <= (q+/p-) max{||u||^{q+-1}, ||u||^{p--1}}.

    The dual norm is estimated from below by maximizing <A(u), v>/||v|| over
    all free nodal hats plus ``n_random`` random zero-trace directions, with
    ||.|| the gradient Luxemburg norm.
    """
    mesh = u.mesh
    p_minus, _ = field_bounds(phase.p, mesh, order)
    _, q_plus = field_bounds(phase.q, mesh, order)
    norm_u = luxemburg_norm(u, phase, "gradient", order=order)
    bound = (q_plus / p_minus) * max(norm_u ** (q_plus - 1.0), norm_u ** (p_minus - 1.0))

    pairings = _operator_residual_full(u, phase, order)
    empirical = 0.0
    for i in mesh.free_nodes:
        hat = np.zeros(mesh.num_nodes)
        hat[i] = 1.0
        v = DiscreteFunction(mesh, hat, zero_boundary=True)
        nv = luxemburg_norm(v, phase, "gradient", order=order)
        if nv > 0.0:
            empirical = max(empirical, abs(pairings[i]) / nv)
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        vals = np.zeros(mesh.num_nodes)
        vals[mesh.free_nodes] = rng.standard_normal(mesh.free_nodes.size)
        v = DiscreteFunction(mesh, vals, zero_boundary=True)
        nv = luxemburg_norm(v, phase, "gradient", order=order)
        if nv > 0.0:
            empirical = max(empirical, abs(apply_operator(u, v, phase, order)) / nv)
    return DualBoundResult(bound, empirical, norm_u, tol)

"""P1 finite-element meshes, quadrature and nodal functions.

Supports interval meshes and structured triangulations of axis-aligned
rectangles.  Everything downstream (modulars, operator assembly, solvers)
works through the small surface defined here: physical quadrature points
with weights, per-element basis gradients, and piecewise-linear nodal
functions with cached element gradients.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError

MIN_QUAD_ORDER = 1
MAX_QUAD_ORDER = 8
DEFAULT_QUAD_ORDER = 4


class Quadrature:
    """A quadrature rule on the reference element (unit interval or triangle).

    ``points`` has shape (nq, dim) in reference coordinates and ``weights``
    sums to the reference measure (1 for the interval, 1/2 for the triangle).
    """

    def __init__(self, points: np.ndarray, weights: np.ndarray, order: int):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.weights = np.asarray(weights, dtype=float)
        self.order = int(order)

    def __len__(self) -> int:
        return self.weights.size


def _check_order(order: int) -> int:
    order = int(order)
    if not MIN_QUAD_ORDER <= order <= MAX_QUAD_ORDER:
        raise ValueError(
            f"quadrature order must lie in [{MIN_QUAD_ORDER}, {MAX_QUAD_ORDER}], got {order}"
        )
    return order


def gauss_interval(order: int) -> Quadrature:
    """Gauss-Legendre rule on [0, 1], exact for polynomials of degree <= order."""
    order = _check_order(order)
    n = (order + 2) // 2  # n-point Gauss is exact to degree 2n - 1
    x, w = np.polynomial.legendre.leggauss(n)
    return Quadrature((x[:, None] + 1.0) / 2.0, w / 2.0, order)


def gauss_triangle(order: int) -> Quadrature:
    """Tensor Gauss rule mapped to the reference triangle.

    Uses the Duffy substitution x = u, y = v (1 - u), which sends the unit
    square to the triangle {x >= 0, y >= 0, x + y <= 1} with Jacobian 1 - u.
    A monomial of total degree d pulls back to degree at most d + 1 per
    direction, so an n-point rule per direction with 2n - 1 >= order + 1 is
    exact for polynomials of total degree <= order.
    """
    order = _check_order(order)
    n = (order + 3) // 2
    x, w = np.polynomial.legendre.leggauss(n)
    u = (x + 1.0) / 2.0
    wu = w / 2.0
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ww = np.outer(wu, wu) * (1.0 - uu)
    pts = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
    return Quadrature(pts, ww.ravel(), order)


def reference_basis(dim: int, points: np.ndarray) -> np.ndarray:
    """Values of the P1 basis at reference points, shape (npts, dim + 1)."""
    points = np.atleast_2d(points)
    if dim == 1:
        t = points[:, 0]
        return np.column_stack([1.0 - t, t])
    if dim == 2:
        x, y = points[:, 0], points[:, 1]
        return np.column_stack([1.0 - x - y, x, y])
    raise ValueError(f"unsupported dimension {dim}")


class Mesh:
    """Conforming simplicial mesh with precomputed P1 geometry.

    Attributes
    ----------
    nodes : (nnodes, dim) float array of vertex coordinates.
    elements : (nelems, dim + 1) int array of vertex indices.
    boundary_nodes : sorted int array of indices on the domain boundary.
    free_nodes : complement of ``boundary_nodes``.
    measures : (nelems,) element lengths/areas.
    basis_gradients : (nelems, dim + 1, dim) physical gradients of the
        local P1 basis, constant per element.
    """

    def __init__(self, nodes, elements, boundary_nodes):
        self.nodes = np.asarray(nodes, dtype=float)
        if self.nodes.ndim != 2 or self.nodes.shape[1] not in (1, 2):
            raise ValueError("nodes must have shape (nnodes, 1) or (nnodes, 2)")
        self.elements = np.asarray(elements, dtype=np.intp)
        self.dim = self.nodes.shape[1]
        if self.elements.ndim != 2 or self.elements.shape[1] != self.dim + 1:
            raise ValueError(f"elements must have {self.dim + 1} vertices each")
        self.boundary_nodes = np.unique(np.asarray(boundary_nodes, dtype=np.intp))
        mask = np.ones(self.num_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        self.free_nodes = np.flatnonzero(mask)
        self._init_geometry()
        self._quad_cache: dict[int, tuple] = {}

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    def _init_geometry(self) -> None:
        verts = self.nodes[self.elements]  # (nelems, dim + 1, dim)
        if self.dim == 1:
            h = verts[:, 1, 0] - verts[:, 0, 0]
            if np.any(h <= 0):
                raise ValueError("interval elements must be positively oriented")
            self.measures = h
            grads = np.empty((self.num_elements, 2, 1))
            grads[:, 0, 0] = -1.0 / h
            grads[:, 1, 0] = 1.0 / h
            self.basis_gradients = grads
        else:
            e1 = verts[:, 1, :] - verts[:, 0, :]
            e2 = verts[:, 2, :] - verts[:, 0, :]
            det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            if np.any(det <= 0):
                raise ValueError("triangles must be positively oriented")
            self.measures = 0.5 * det
            # gradients of (x, y) barycentric functions via the inverse Jacobian
            inv = np.empty((self.num_elements, 2, 2))
            inv[:, 0, 0] = e2[:, 1] / det
            inv[:, 0, 1] = -e2[:, 0] / det
            inv[:, 1, 0] = -e1[:, 1] / det
            inv[:, 1, 1] = e1[:, 0] / det
            ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
            self.basis_gradients = np.einsum("vr,erd->evd", ref, inv)

    def reference_rule(self, order: int = DEFAULT_QUAD_ORDER) -> Quadrature:
        return gauss_interval(order) if self.dim == 1 else gauss_triangle(order)

    def quadrature_points(self, order: int = DEFAULT_QUAD_ORDER):
        """Physical quadrature data for every element.

        Returns ``(points, weights, rule)`` where ``points`` has shape
        (nelems, nq, dim) and ``weights`` (nelems, nq) already include the
        element measure, so plain sums integrate over the whole mesh.
        """
        order = _check_order(order)
        if order not in self._quad_cache:
            rule = self.reference_rule(order)
            basis = reference_basis(self.dim, rule.points)  # (nq, dim + 1)
            verts = self.nodes[self.elements]
            pts = np.einsum("qv,evd->eqd", basis, verts)
            scale = self.measures / rule.weights.sum()
            w = scale[:, None] * rule.weights[None, :]
            self._quad_cache[order] = (pts, w, rule)
        return self._quad_cache[order]

    def basis_at(self, order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
        """P1 basis values at the reference quadrature points, (nq, dim + 1)."""
        rule = self.reference_rule(order)
        return reference_basis(self.dim, rule.points)

    def edges(self) -> np.ndarray:
        """Unique vertex pairs connected by an element edge, shape (nedges, 2)."""
        elems = self.elements
        if self.dim == 1:
            pairs = elems
        else:
            pairs = np.vstack([elems[:, [0, 1]], elems[:, [1, 2]], elems[:, [0, 2]]])
        pairs = np.sort(pairs, axis=1)
        return np.unique(pairs, axis=0)


def build_interval_mesh(a: float, b: float, n: int) -> Mesh:
    """Uniform mesh of (a, b) with ``n`` elements; endpoints are boundary nodes."""
    if not b > a:
        raise ValueError(f"interval requires b > a, got ({a}, {b})")
    if n < 1:
        raise ValueError("need at least one element")
    nodes = np.linspace(a, b, n + 1)[:, None]
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(nodes, elements, [0, n])


def build_rect_mesh(xspan, yspan, nx: int, ny: int) -> Mesh:
    """Structured triangulation of a rectangle, two triangles per grid cell."""
    x0, x1 = map(float, xspan)
    y0, y1 = map(float, yspan)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("rectangle spans must be increasing")
    if nx < 1 or ny < 1:
        raise ValueError("need at least one cell per direction")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = nid(i, j), nid(i + 1, j)
            v01, v11 = nid(i, j + 1), nid(i + 1, j + 1)
            tris.append([v00, v10, v11])
            tris.append([v00, v11, v01])
    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="ij")
    on_edge = (ii == 0) | (ii == nx) | (jj == 0) | (jj == ny)
    boundary = np.flatnonzero(on_edge.ravel())
    return Mesh(nodes, np.asarray(tris), boundary)


class DiscreteFunction:
    """A P1 function given by nodal values on a mesh.

    Element gradients (constant per element) are computed eagerly and cached.
    ``zero_boundary`` marks membership in the zero-trace subspace; the flag
    requires the boundary values to vanish exactly.
    """

    def __init__(self, mesh: Mesh, values, zero_boundary: bool = False):
        self.mesh = mesh
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (mesh.num_nodes,):
            raise ValueError(
                f"expected {mesh.num_nodes} nodal values, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("nodal values must be finite")
        if zero_boundary and np.any(self.values[mesh.boundary_nodes] != 0.0):
            raise ValueError("zero_boundary requires vanishing boundary values")
        self.zero_boundary = bool(zero_boundary)
        self.gradients = np.einsum(
            "ev,evd->ed", self.values[mesh.elements], mesh.basis_gradients
        )
        self._qvals: dict[int, np.ndarray] = {}

    def values_at(self, order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
        """Function values at the quadrature points, shape (nelems, nq)."""
        if order not in self._qvals:
            basis = self.mesh.basis_at(order)
            self._qvals[order] = self.values[self.mesh.elements] @ basis.T
        return self._qvals[order]

    def gradient_norms(self) -> np.ndarray:
        """Euclidean norm of the element gradients, shape (nelems,)."""
        return np.sqrt(np.sum(self.gradients**2, axis=1))

    def zero_on_boundary(self) -> "DiscreteFunction":
        """Copy with boundary values set to zero (projection onto zero trace)."""
        vals = self.values.copy()
        vals[self.mesh.boundary_nodes] = 0.0
        return DiscreteFunction(self.mesh, vals, zero_boundary=True)

    def _binary(self, other, sign):
        if not isinstance(other, DiscreteFunction) or other.mesh is not self.mesh:
            raise ValueError("operands must live on the same mesh")
        return DiscreteFunction(
            self.mesh,
            self.values + sign * other.values,
            zero_boundary=self.zero_boundary and other.zero_boundary,
        )

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __mul__(self, scalar):
        return DiscreteFunction(self.mesh, float(scalar) * self.values, self.zero_boundary)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def interpolate(mesh: Mesh, fn, zero_boundary: bool = False) -> DiscreteFunction:
    """Nodal interpolant of a callable ``fn(points) -> values``.

    With ``zero_boundary`` the boundary entries are forced to zero, i.e. the
    interpolant is taken in the zero-trace subspace (useful for functions
    that vanish on the boundary only up to roundoff).
    """
    vals = np.asarray(fn(mesh.nodes), dtype=float)
    if vals.shape != (mesh.num_nodes,):
        raise ValueError("interpolation callback must return one value per node")
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise ValueError(f"interpolation callback returned non-finite value at node {bad}")
    if zero_boundary:
        vals = vals.copy()
        vals[mesh.boundary_nodes] = 0.0
    return DiscreteFunction(mesh, vals, zero_boundary=zero_boundary)


def integrate(mesh: Mesh, fn, order: int = DEFAULT_QUAD_ORDER) -> float:
    """Integrate ``fn(points) -> values`` over the mesh by Gauss quadrature."""
    pts, w, _ = mesh.quadrature_points(order)
    vals = np.asarray(fn(pts.reshape(-1, mesh.dim)), dtype=float).reshape(w.shape)
    return integrate_samples(mesh, vals, order)


def integrate_samples(mesh: Mesh, values: np.ndarray, order: int = DEFAULT_QUAD_ORDER) -> float:
    """Integrate values already sampled at the quadrature points of ``order``."""
    _, w, _ = mesh.quadrature_points(order)
    values = np.asarray(values, dtype=float)
    if values.shape != w.shape:
        raise ValueError(f"expected samples of shape {w.shape}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        bad = int(np.argwhere(~np.isfinite(values))[0][0])
        raise NumericError(f"non-finite integrand on element {bad}")
    return float(np.sum(w * values))

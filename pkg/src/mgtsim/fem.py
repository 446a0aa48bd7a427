"""P1 finite-element operators: mass, stiffness, loads, quadratic nonlinearities.

Assembly is fully vectorized (COO triplets -> CSR).  Matrices come in two
flavors: ``*_full`` acts on all nodes, the unsuffixed versions are restricted
to interior nodes (homogeneous Dirichlet).  Nonlinear terms are evaluated by
nodal interpolation of the products pushed through the consistent full mass
matrix; the Kuznetsov gradient term uses the element-constant P1 gradients and
is integrated exactly.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .medium import NonlinearityParams
from .mesh import Mesh


class FemOperators:
    """Assembled P1 operators for one mesh.

    Attributes
    ----------
    mesh : Mesh
    mass_full, stiffness_full : csr_matrix
        Operators on all nodes, shape (n_nodes, n_nodes).
    mass, stiffness : csr_matrix
        Interior-node blocks, shape (n_interior, n_interior).
    elem_measures : ndarray
        Element lengths/areas, shape (n_elements,).
    elem_grads : ndarray
        Constant shape-function gradients per element,
        shape (n_elements, dim + 1, dim).
    """

    def __init__(self, mesh: Mesh, mass_full, stiffness_full, elem_measures, elem_grads):
        self.mesh = mesh
        self.mass_full = mass_full
        self.stiffness_full = stiffness_full
        self.elem_measures = elem_measures
        self.elem_grads = elem_grads
        self.mass = self.reduce(mass_full)
        self.stiffness = self.reduce(stiffness_full)

    def reduce(self, matrix) -> sp.csr_matrix:
        """Interior-node block of a full-node matrix."""
        idx = self.mesh.interior_nodes
        return matrix[idx, :][:, idx].tocsr()


def _triplets_to_csr(rows, cols, vals, n) -> sp.csr_matrix:
    m = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n))
    return m.tocsr()


def _geometry(mesh: Mesh):
    """Element measures and constant P1 gradients."""
    if mesh.dim == 1:
        coords = mesh.nodes[mesh.elements]  # (ne, 2)
        lengths = coords[:, 1] - coords[:, 0]
        grads = np.stack([-1.0 / lengths, 1.0 / lengths], axis=1)[:, :, None]
        return lengths, grads
    coords = mesh.nodes[mesh.elements]  # (ne, 3, 2)
    d1 = coords[:, 1] - coords[:, 0]
    d2 = coords[:, 2] - coords[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]  # twice the signed area
    areas = 0.5 * det
    # grad(phi_i) = rot(edge opposite node i) / (2*area), rot(x, y) = (-y, x)
    e0 = coords[:, 2] - coords[:, 1]
    e1 = coords[:, 0] - coords[:, 2]
    e2 = coords[:, 1] - coords[:, 0]
    grads = np.stack(
        [
            np.stack([-e0[:, 1], e0[:, 0]], axis=1),
            np.stack([-e1[:, 1], e1[:, 0]], axis=1),
            np.stack([-e2[:, 1], e2[:, 0]], axis=1),
        ],
        axis=1,
    ) / det[:, None, None]
    return areas, grads


_MASS_1D = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
_MASS_2D = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble(mesh: Mesh) -> FemOperators:
    """Assemble mass and stiffness matrices for P1 elements on the mesh."""
    measures, grads = _geometry(mesh)
    if np.any(measures <= 0.0):
        raise ValueError("mesh has degenerate or inverted elements")
    nv = mesh.dim + 1
    local_mass = _MASS_1D if mesh.dim == 1 else _MASS_2D
    mass_e = measures[:, None, None] * local_mass[None, :, :]
    stiff_e = measures[:, None, None] * np.einsum("eid,ejd->eij", grads, grads)

    rows = np.repeat(mesh.elements, nv, axis=1).reshape(-1, nv, nv)
    cols = np.tile(mesh.elements, (1, nv)).reshape(-1, nv, nv)
    n = mesh.n_nodes
    mass = _triplets_to_csr(rows, cols, mass_e, n)
    stiffness = _triplets_to_csr(rows, cols, stiff_e, n)
    return FemOperators(mesh, mass, stiffness, measures, grads)


def weighted_mass(ops: FemOperators, weight: np.ndarray) -> sp.csr_matrix:
    """Full-node mass matrix weighted by a P1 nodal field.

    Entries are int(w * phi_i * phi_j) with w the P1 interpolant of ``weight``;
    the per-element integrals are exact.
    """
    mesh = ops.mesh
    w = np.asarray(weight, dtype=float)
    if w.shape != (mesh.n_nodes,):
        raise ValueError(f"weight must have shape ({mesh.n_nodes},), got {w.shape}")
    we = w[mesh.elements]
    if mesh.dim == 1:
        w0, w1 = we[:, 0], we[:, 1]
        scale = ops.elem_measures / 12.0
        local = np.empty((mesh.n_elements, 2, 2))
        local[:, 0, 0] = 3.0 * w0 + w1
        local[:, 0, 1] = local[:, 1, 0] = w0 + w1
        local[:, 1, 1] = w0 + 3.0 * w1
        local *= scale[:, None, None]
    else:
        # int(phi_i^2 phi_j) = |T|/30, int(phi_i^3) = |T|/10, int(phi_i phi_j phi_k) = |T|/60
        wsum = we.sum(axis=1)
        local = np.empty((mesh.n_elements, 3, 3))
        for i in range(3):
            for j in range(3):
                if i == j:
                    local[:, i, j] = (2.0 * we[:, i] + wsum) / 30.0
                else:
                    k = 3 - i - j
                    local[:, i, j] = (we[:, i] + we[:, j]) / 30.0 + we[:, k] / 60.0
        local *= ops.elem_measures[:, None, None]
    nv = mesh.dim + 1
    rows = np.repeat(mesh.elements, nv, axis=1).reshape(-1, nv, nv)
    cols = np.tile(mesh.elements, (1, nv)).reshape(-1, nv, nv)
    return _triplets_to_csr(rows, cols, local, mesh.n_nodes)


def load_vector(ops: FemOperators, values: np.ndarray) -> np.ndarray:
    """Interior load vector of a nodal field: (M_full @ values) on interior nodes."""
    v = np.asarray(values, dtype=float)
    if v.shape != (ops.mesh.n_nodes,):
        raise ValueError(f"values must have shape ({ops.mesh.n_nodes},), got {v.shape}")
    return (ops.mass_full @ v)[ops.mesh.interior_nodes]


def westervelt_rhs(ops: FemOperators, nl: NonlinearityParams, u, u_t, u_tt) -> np.ndarray:
    """Interior load of the pressure-form nonlinearity (1/2)*(k u^2)_tt.

    Expanded: k*(u*u_tt + u_t^2), evaluated nodally on full-node fields.
    """
    g = nl.k * (u * u_tt + u_t * u_t)
    return load_vector(ops, g)


def kuznetsov_rhs(ops: FemOperators, nl: NonlinearityParams, u, u_t, u_tt) -> np.ndarray:
    """Interior load of the potential-form nonlinearity.

    (1/2)*(kappa*u_t^2 + sigma*|grad u|^2)_t = kappa*u_t*u_tt + sigma*grad(u).grad(u_t),
    with the local term nodal through the mass matrix and the gradient term
    integrated exactly per element (P1 gradients are element constants).
    """
    mesh = ops.mesh
    out = load_vector(ops, nl.kappa * (u_t * u_tt)) if nl.kappa != 0.0 else None
    if nl.sigma != 0.0:
        conn = mesh.elements
        gu = np.einsum("eid,ei->ed", ops.elem_grads, u[conn])
        gut = np.einsum("eid,ei->ed", ops.elem_grads, u_t[conn])
        dots = (gu * gut).sum(axis=1)
        w = nl.sigma * dots * ops.elem_measures / (mesh.dim + 1)
        full = np.zeros(mesh.n_nodes)
        np.add.at(full, conn, w[:, None])
        grad_part = full[mesh.interior_nodes]
        out = grad_part if out is None else out + grad_part
    if out is None:
        out = np.zeros(mesh.n_interior)
    return out

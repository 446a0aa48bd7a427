"""Uniform interval and structured triangular meshes with Dirichlet bookkeeping.

Nodes are numbered deterministically: on the interval left to right, on the
square row-major (node (i, j) -> j*(n+1) + i with coordinates (i*h, j*h)).
Each grid cell of the square splits into two triangles along the diagonal from
the lower-left to the upper-right corner; both triangles are counterclockwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mesh:
    """Simplicial mesh with homogeneous-Dirichlet boundary bookkeeping.

    Attributes
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    nodes : ndarray
        Node coordinates, shape (n_nodes,) in 1D and (n_nodes, 2) in 2D.
    elements : ndarray
        Node indices per element, shape (n_elements, dim + 1).
    h : float
        Mesh spacing (element length in 1D, grid spacing in 2D).
    boundary_nodes : ndarray
        Sorted indices of boundary nodes.
    interior_nodes : ndarray
        Sorted indices of interior nodes.
    interior_index : ndarray
        Full-to-interior index map (-1 on boundary nodes).
    """

    dim: int
    nodes: np.ndarray
    elements: np.ndarray
    h: float
    boundary_nodes: np.ndarray
    interior_nodes: np.ndarray
    interior_index: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_interior(self) -> int:
        return self.interior_nodes.shape[0]

    def element_measures(self) -> np.ndarray:
        """Element lengths (1D) or areas (2D), all positive."""
        if self.dim == 1:
            return np.diff(self.nodes[self.elements], axis=1)[:, 0]
        coords = self.nodes[self.elements]
        d1 = coords[:, 1] - coords[:, 0]
        d2 = coords[:, 2] - coords[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def scatter(self, interior_values: np.ndarray) -> np.ndarray:
        """Embed an interior-node vector into a full-node vector (0 on the boundary)."""
        full = np.zeros(self.n_nodes)
        full[self.interior_nodes] = interior_values
        return full

    def restrict(self, full_values: np.ndarray) -> np.ndarray:
        """Extract the interior entries of a full-node vector."""
        return full_values[self.interior_nodes]


def _make_mesh(dim, nodes, elements, h, boundary_mask) -> Mesh:
    n = nodes.shape[0]
    boundary = np.flatnonzero(boundary_mask)
    interior = np.flatnonzero(~boundary_mask)
    index = np.full(n, -1, dtype=np.int64)
    index[interior] = np.arange(interior.size)
    return Mesh(
        dim=dim,
        nodes=nodes,
        elements=elements,
        h=h,
        boundary_nodes=boundary,
        interior_nodes=interior,
        interior_index=index,
    )


def interval_mesh(length: float, n_elements: int) -> Mesh:
    """Uniform mesh of (0, length) with n_elements >= 2 elements."""
    if not length > 0.0:
        raise ValueError(f"length must be positive, got {length!r}")
    if n_elements < 2:
        raise ValueError(f"need at least 2 elements, got {n_elements!r}")
    nodes = np.linspace(0.0, length, n_elements + 1)
    idx = np.arange(n_elements)
    elements = np.column_stack([idx, idx + 1]).astype(np.int64)
    mask = np.zeros(n_elements + 1, dtype=bool)
    mask[0] = mask[-1] = True
    return _make_mesh(1, nodes, elements, length / n_elements, mask)


def square_triangle_mesh(side: float, h: float) -> Mesh:
    """Structured triangulation of (0, side)^2 with grid spacing h.

    h must divide side (relative tolerance 1e-9); each grid cell is split
    along its lower-left to upper-right diagonal.
    """
    if not side > 0.0:
        raise ValueError(f"side must be positive, got {side!r}")
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h!r}")
    n = int(round(side / h))
    if n < 1 or abs(n * h - side) > 1e-9 * side:
        raise ValueError(f"h={h!r} does not divide side={side!r}")
    ticks = np.linspace(0.0, side, n + 1)
    xx, yy = np.meshgrid(ticks, ticks)  # row-major: node j*(n+1)+i at (x_i, y_j)
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    ii, jj = np.meshgrid(np.arange(n), np.arange(n))
    i = ii.ravel()
    j = jj.ravel()
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    mask = np.zeros((n + 1) * (n + 1), dtype=bool)
    gi, gj = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    on_edge = (gi == 0) | (gi == n) | (gj == 0) | (gj == n)
    mask[on_edge.ravel()] = True
    return _make_mesh(2, nodes, elements, side / n, mask)

"""Simplicial meshes (intervals and triangles) and Lagrange DOF numbering.

Meshes are immutable after construction: the coordinate and connectivity
arrays are flagged read-only so a mesh can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgumentError, MeshValidationError

COINCIDENCE_TOL = 1e-12


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Interval or triangle mesh.

    ``nodes`` has shape (n_nodes, dim); ``elements`` has shape
    (n_elements, dim + 1). ``boundary_edges`` is empty in 1D.
    """

    dim: int
    nodes: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    boundary_edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        object.__setattr__(self, "nodes", _frozen(nodes, float))
        object.__setattr__(self, "elements", _frozen(np.asarray(self.elements).reshape(-1, self.dim + 1), np.int64))
        object.__setattr__(self, "boundary_nodes", _frozen(np.unique(np.asarray(self.boundary_nodes, dtype=np.int64)), np.int64))
        object.__setattr__(self, "boundary_edges", _frozen(np.asarray(self.boundary_edges).reshape(-1, 2), np.int64))

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    def signed_measures(self):
        """Signed length (1D) or signed area (2D) of every element."""
        p = self.nodes[self.elements]
        if self.dim == 1:
            return p[:, 1, 0] - p[:, 0, 0]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def diameter(self):
        return float(np.max(np.ptp(self.nodes, axis=0)))

    def h(self):
        """Longest element edge."""
        p = self.nodes[self.elements]
        if self.dim == 1:
            return float(np.max(np.abs(p[:, 1, 0] - p[:, 0, 0])))
        lengths = [np.linalg.norm(p[:, i] - p[:, (i + 1) % 3], axis=1) for i in range(3)]
        return float(np.max(lengths))

    def edges(self):
        """Unique undirected edges as sorted vertex pairs, in first-seen order."""
        if self.dim == 1:
            return np.sort(self.elements, axis=1)
        local = self.elements[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        pairs = np.sort(local, axis=1)
        _, first = np.unique(pairs, axis=0, return_index=True)
        return pairs[np.sort(first)]

    def validate(self):
        if self.dim not in (1, 2):
            raise MeshValidationError(f"unsupported dimension {self.dim}")
        if self.nodes.shape[1] != self.dim:
            raise MeshValidationError("node coordinates do not match mesh dimension")
        n = self.n_nodes
        for name, arr in (("element", self.elements), ("boundary node", self.boundary_nodes),
                          ("boundary edge", self.boundary_edges)):
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise MeshValidationError(f"{name} index out of range [0, {n})")
        meas = self.signed_measures()
        if np.any(meas <= 0):
            bad = int(np.flatnonzero(meas <= 0)[0])
            raise MeshValidationError(f"element {bad} has non-positive measure {meas[bad]:.3e}")
        tol = COINCIDENCE_TOL * max(self.diameter(), 1e-300)
        pairs = cKDTree(self.nodes).query_pairs(tol)
        if pairs:
            i, j = sorted(pairs)[0]
            raise MeshValidationError(f"nodes {i} and {j} coincide")
        if self.dim == 2:
            on_edges = set(np.unique(self.boundary_edges).tolist())
            missing = set(self.boundary_nodes.tolist()) - on_edges
            if missing:
                raise MeshValidationError(f"boundary node {min(missing)} is on no boundary edge")
        return self


def generate_interval_mesh(a, b, K):
    """Uniform partition of [a, b] into K elements."""
    if K < 1 or not a < b:
        raise InvalidArgumentError(f"need a < b and K >= 1, got a={a}, b={b}, K={K}")
    x = np.linspace(a, b, K + 1)
    elements = np.column_stack([np.arange(K), np.arange(1, K + 1)])
    return Mesh(1, x, elements, [0, K]).validate()


def interval_mesh_from_nodes(x):
    """Interval mesh on arbitrary increasing breakpoints (graded meshes)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
        raise InvalidArgumentError("breakpoints must be strictly increasing, at least two")
    K = x.size - 1
    elements = np.column_stack([np.arange(K), np.arange(1, K + 1)])
    return Mesh(1, x, elements, [0, K]).validate()


def _boundary_edges_from_elements(elements):
    local = elements[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    keys = np.sort(local, axis=1)
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    once = counts[inverse.ravel()] == 1
    # keep the element's own orientation so the domain lies to the left
    return local[once]


def generate_square_mesh(n):
    """[-1, 1]^2 split into n x n cells, two triangles each."""
    if n < 1:
        raise InvalidArgumentError(f"need n >= 1, got {n}")
    t = np.linspace(-1.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    n00 = idx[:-1, :-1].ravel()
    n10 = idx[:-1, 1:].ravel()
    n01 = idx[1:, :-1].ravel()
    n11 = idx[1:, 1:].ravel()
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = np.column_stack([n00, n10, n11])
    elements[1::2] = np.column_stack([n00, n11, n01])
    bedges = _boundary_edges_from_elements(elements)
    return Mesh(2, nodes, elements, np.unique(bedges), bedges).validate()


def generate_disk_mesh(radius, rings):
    """Polar-structured triangulation of the disk; ring k carries 6k nodes."""
    if rings < 1 or not radius > 0:
        raise InvalidArgumentError(f"need radius > 0 and rings >= 1, got {radius}, {rings}")
    coords = [(0.0, 0.0)]
    ring_ids = [np.array([0])]
    for k in range(1, rings + 1):
        m = 6 * k
        theta = 2.0 * np.pi * np.arange(m) / m
        r = radius * k / rings
        start = len(coords)
        coords.extend(zip(r * np.cos(theta), r * np.sin(theta)))
        ring_ids.append(np.arange(start, start + m))
    # snap outer ring onto the circle
    nodes = np.array(coords)
    outer = ring_ids[-1]
    nodes[outer] *= radius / np.hypot(nodes[outer, 0], nodes[outer, 1])[:, None]

    tris = []
    for k in range(1, rings + 1):
        inner, ring = ring_ids[k - 1], ring_ids[k]
        if k == 1:
            for j in range(6):
                tris.append((0, ring[j], ring[(j + 1) % 6]))
            continue
        ni, no = len(inner), len(ring)
        i = j = 0
        while i < ni or j < no:
            # advance whichever ring has the smaller next angle
            if j < no and (i >= ni or (j + 1) / no <= (i + 1) / ni):
                tris.append((inner[i % ni], ring[j], ring[(j + 1) % no]))
                j += 1
            else:
                tris.append((inner[i % ni], ring[j % no], inner[(i + 1) % ni]))
                i += 1
    elements = np.array(tris, dtype=np.int64)
    mesh = Mesh(2, nodes, elements, [], [])
    neg = mesh.signed_measures() < 0
    elements[neg] = elements[neg][:, [0, 2, 1]]
    bedges = np.column_stack([outer, np.roll(outer, -1)])
    return Mesh(2, nodes, elements, outer, bedges).validate()


def refine_uniform(mesh):
    """Split every element into 2 (1D) or 4 (2D) children.

    Returns ``(fine_mesh, parent)`` where ``parent[e]`` is the coarse element
    containing fine element ``e``. Children keep the parent's orientation.
    """
    if mesh.dim == 1:
        x = mesh.nodes[:, 0]
        n = mesh.n_nodes
        ne = mesh.n_elements
        mids = 0.5 * (x[mesh.elements[:, 0]] + x[mesh.elements[:, 1]])
        nodes = np.concatenate([x, mids])
        m = n + np.arange(ne)
        elements = np.empty((2 * ne, 2), dtype=np.int64)
        elements[0::2] = np.column_stack([mesh.elements[:, 0], m])
        elements[1::2] = np.column_stack([m, mesh.elements[:, 1]])
        parent = np.repeat(np.arange(ne), 2)
        return Mesh(1, nodes, elements, mesh.boundary_nodes).validate(), parent

    edges = mesh.edges()
    n = mesh.n_nodes
    edge_id = {(int(a), int(b)): n + k for k, (a, b) in enumerate(edges)}
    mids = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
    nodes = np.vstack([mesh.nodes, mids])

    def mid(a, b):
        return edge_id[(a, b) if a < b else (b, a)]

    children = []
    for a, b, c in mesh.elements.tolist():
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        children += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    bedges = []
    for a, b in mesh.boundary_edges.tolist():
        m = mid(a, b)
        bedges += [(a, m), (m, b)]
    bnodes = np.unique(np.array(bedges)) if bedges else np.array([], dtype=np.int64)
    parent = np.repeat(np.arange(mesh.n_elements), 4)
    return Mesh(2, nodes, np.array(children), bnodes, bedges).validate(), parent


# -- text format -----------------------------------------------------------

def save_mesh(mesh, path):
    """Write ``mesh`` in the line-oriented text format.

    Coordinates are written with 17 significant digits so loading gives
    back the same doubles.
    """
    nb = len(mesh.boundary_edges) if mesh.dim == 2 else len(mesh.boundary_nodes)
    lines = [f"# feonet mesh, dim={mesh.dim}",
             f"{mesh.dim} {mesh.n_nodes} {mesh.n_elements} {nb}"]
    lines += [" ".join(format(v, ".17g") for v in row) for row in mesh.nodes.tolist()]
    lines += [" ".join(str(v) for v in row) for row in mesh.elements.tolist()]
    if mesh.dim == 2:
        lines += [f"{a} {b}" for a, b in mesh.boundary_edges.tolist()]
    else:
        lines += [str(v) for v in mesh.boundary_nodes.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path):
    """Parse a mesh file; errors carry the 1-based line number."""
    records = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            records.append((lineno, text.split()))
    if not records:
        raise MeshValidationError("empty mesh file")

    lineno, head = records[0]
    try:
        dim, n_nodes, n_elems, n_bnd = (int(v) for v in head)
    except ValueError:
        raise MeshValidationError("header must be 'dim N_nodes N_elems N_boundary'", lineno) from None
    if dim not in (1, 2) or min(n_nodes, n_elems, n_bnd) < 0:
        raise MeshValidationError(f"bad header values {head}", lineno)
    expected = 1 + n_nodes + n_elems + n_bnd
    if len(records) != expected:
        last = records[-1][0]
        raise MeshValidationError(f"expected {expected} data lines, found {len(records)}", last)

    def parse(rows, width, kind, conv):
        out = []
        for ln, toks in rows:
            if len(toks) != width:
                raise MeshValidationError(f"{kind} line needs {width} values, got {len(toks)}", ln)
            try:
                out.append([conv(t) for t in toks])
            except ValueError:
                raise MeshValidationError(f"malformed {kind} line", ln) from None
        return out

    node_rows = records[1:1 + n_nodes]
    elem_rows = records[1 + n_nodes:1 + n_nodes + n_elems]
    bnd_rows = records[1 + n_nodes + n_elems:]
    nodes = np.array(parse(node_rows, dim, "coordinate", float), dtype=float).reshape(n_nodes, dim)
    elems = parse(elem_rows, dim + 1, "element", int)
    bnd = parse(bnd_rows, 2 if dim == 2 else 1, "boundary", int)

    for rows, vals, kind in ((elem_rows, elems, "element"), (bnd_rows, bnd, "boundary")):
        for (ln, _), v in zip(rows, vals):
            if min(v) < 0 or max(v) >= n_nodes:
                raise MeshValidationError(f"{kind} index out of range [0, {n_nodes})", ln)
    elements = np.array(elems, dtype=np.int64).reshape(n_elems, dim + 1)
    tmp = Mesh(dim, nodes, elements, [], [])
    meas = tmp.signed_measures()
    if np.any(meas <= 0):
        bad = int(np.flatnonzero(meas <= 0)[0])
        raise MeshValidationError(f"element {bad} has non-positive measure", elem_rows[bad][0])

    if dim == 2:
        bedges = np.array(bnd, dtype=np.int64).reshape(-1, 2)
        return Mesh(2, nodes, elements, np.unique(bedges), bedges).validate()
    return Mesh(1, nodes, elements, np.array(bnd, dtype=np.int64).ravel()).validate()


# -- degrees of freedom ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class DofMap:
    """Lagrange DOF numbering on a mesh.

    Vertex DOFs come first and keep node numbering. P2 appends one DOF per
    unique edge (1D: per element) in first-seen order. Local ordering per
    element is vertices followed by midpoints of (v0,v1), (v1,v2), (v2,v0).
    """

    mesh: Mesh
    order: int
    dof_coords: np.ndarray
    element_dofs: np.ndarray
    boundary_dofs: np.ndarray
    interior_dofs: np.ndarray

    @property
    def n_dofs(self):
        return self.dof_coords.shape[0]

    def free_dofs(self, bc="dirichlet0"):
        return self.interior_dofs if bc == "dirichlet0" else np.arange(self.n_dofs)


def build_dofmap(mesh, order):
    if order not in (1, 2):
        raise InvalidArgumentError(f"order must be 1 or 2, got {order}")
    n = mesh.n_nodes
    bnodes = set(mesh.boundary_nodes.tolist())
    if order == 1:
        coords = mesh.nodes
        element_dofs = mesh.elements
        boundary = sorted(bnodes)
    elif mesh.dim == 1:
        ne = mesh.n_elements
        mids = 0.5 * (mesh.nodes[mesh.elements[:, 0]] + mesh.nodes[mesh.elements[:, 1]])
        coords = np.vstack([mesh.nodes, mids])
        element_dofs = np.column_stack([mesh.elements, n + np.arange(ne)])
        boundary = sorted(bnodes)
    else:
        edges = mesh.edges()
        edge_id = {(int(a), int(b)): n + k for k, (a, b) in enumerate(edges)}
        mids = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
        coords = np.vstack([mesh.nodes, mids])
        el = mesh.elements
        extra = np.empty((mesh.n_elements, 3), dtype=np.int64)
        for col, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
            a = np.minimum(el[:, i], el[:, j])
            b = np.maximum(el[:, i], el[:, j])
            extra[:, col] = [edge_id[(p, q)] for p, q in zip(a.tolist(), b.tolist())]
        element_dofs = np.column_stack([el, extra])
        bmid = [edge_id[(min(a, b), max(a, b))] for a, b in mesh.boundary_edges.tolist()]
        boundary = sorted(bnodes | set(bmid))
    boundary = np.array(boundary, dtype=np.int64)
    mask = np.ones(len(coords), dtype=bool)
    mask[boundary] = False
    return DofMap(
        mesh=mesh,
        order=order,
        dof_coords=_frozen(coords, float),
        element_dofs=_frozen(element_dofs, np.int64),
        boundary_dofs=_frozen(boundary, np.int64),
        interior_dofs=_frozen(np.flatnonzero(mask), np.int64),
    )


def polygon_area(vertices):
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def disk_area_error_bound(radius, rings):
    """Area deficit of the inscribed 6*rings-gon, which the disk mesh fills."""
    m = 6 * rings
    return math.pi * radius**2 - 0.5 * m * radius**2 * math.sin(2 * math.pi / m)

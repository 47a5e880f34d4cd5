"""Write the square-with-hole and polygon mesh files shipped in feonet/data.

Both are simple structured meshes, not quality-optimized ones:

* square_hole.mesh: [-1,1]^2 minus the disk of radius 0.5, built from
  rays between the circle and the square.
* polygon.mesh: the eight-vertex polygon, ear-clipped and then refined
  uniformly three times.

Usage: python3 scripts/make_domain_meshes.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from feonet.mesh import Mesh, refine_uniform, save_mesh

POLYGON = [(-1.0, -1.0), (1.0, -1.0), (1.0, 0.0), (0.6, 0.0),
           (0.5, -0.5), (0.0, -0.5), (-0.6, 1.0), (-1.0, 1.0)]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def ear_clip(vertices):
    """Triangulate a simple counter-clockwise polygon."""
    idx = list(range(len(vertices)))
    tris = []
    while len(idx) > 3:
        for k in range(len(idx)):
            i, j, l = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, c = vertices[i], vertices[j], vertices[l]
            if _cross(a, b, c) <= 0:
                continue
            inside = any(
                _cross(a, b, vertices[m]) >= 0 and _cross(b, c, vertices[m]) >= 0 and _cross(c, a, vertices[m]) >= 0
                for m in idx if m not in (i, j, l))
            if not inside:
                tris.append((i, j, l))
                idx.pop(k)
                break
        else:
            raise ValueError("polygon is not simple or not counter-clockwise")
    tris.append(tuple(idx))
    return tris


def polygon_mesh(levels=3):
    nodes = np.array(POLYGON)
    tris = np.array(ear_clip(POLYGON))
    n = len(POLYGON)
    edges = np.array([(i, (i + 1) % n) for i in range(n)])
    mesh = Mesh(2, nodes, tris, np.arange(n), edges).validate()
    for _ in range(levels):
        mesh, _ = refine_uniform(mesh)
    return mesh


def square_hole_mesh(n_angles=32, layers=8, r=0.5):
    if n_angles % 8:
        raise ValueError("n_angles must be a multiple of 8")
    # n_angles divisible by 8 puts rays through the square's corners
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    inner = r * np.column_stack([np.cos(theta), np.sin(theta)])
    d = np.column_stack([np.cos(theta), np.sin(theta)])
    outer = d / np.max(np.abs(d), axis=1, keepdims=True)
    t = np.linspace(0.0, 1.0, layers + 1)[:, None, None]
    pts = (1 - t) * inner[None] + t * outer[None]          # (layers+1, n_angles, 2)
    nodes = pts.reshape(-1, 2)
    tris = []
    for k in range(layers):
        for i in range(n_angles):
            j = (i + 1) % n_angles
            a, b = k * n_angles + i, k * n_angles + j
            c, d_ = a + n_angles, b + n_angles
            tris += [(a, d_, b), (a, c, d_)]
    inner_edges = [(j, i) for i, j in ((i, (i + 1) % n_angles) for i in range(n_angles))]
    off = layers * n_angles
    outer_edges = [(off + i, off + (i + 1) % n_angles) for i in range(n_angles)]
    edges = np.array(inner_edges + outer_edges)
    return Mesh(2, nodes, np.array(tris), np.unique(edges), edges).validate()


def main(out=None):
    out = Path(out or Path(__file__).resolve().parents[1] / "src" / "feonet" / "data")
    out.mkdir(parents=True, exist_ok=True)
    save_mesh(square_hole_mesh(), out / "square_hole.mesh")
    save_mesh(polygon_mesh(), out / "polygon.mesh")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)

"""Random trigonometric input families and seeded datasets.

1D:  f(x)    = m0 sin(n0 x) + m1 cos(n1 x),             omega = (m0, n0, m1, n1)
2D:  f(x, y) = m0 sin(n0 x + n1 y) + m1 cos(n2 x + n3 y), omega = (m0, m1, n0, n1, n2, n3)

Sampling uses SplitMix64 (Steele, Lea & Flood 2014) so a dataset is fully
determined by (family, seed, M) on any platform and in any language: the
k-th draw (k = 1, 2, ...) is mix(seed + k * 0x9E3779B97F4A7C15 mod 2^64)
and maps to [0, 1) as (draw >> 11) * 2^-53.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1

KINDS = ("forcing", "reaction_coefficient")


class SplitMix64:
    """Counter-based 64-bit generator; state is the last counter value."""

    def __init__(self, seed):
        self.state = int(seed) & MASK

    def next_uint64(self, n):
        k = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + k * np.uint64(GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GAMMA) & MASK
        return z

    def uniform(self, n):
        return (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class ForcingFamily:
    dim: int = 1
    m_range: tuple = (3.0, 5.0)
    n_range: tuple = (0.0, 2 * np.pi)
    kind: str = "forcing"

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidArgumentError(f"dim must be 1 or 2, got {self.dim}")
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown family kind {self.kind!r}")
        for name, (lo, hi) in (("m_range", self.m_range), ("n_range", self.n_range)):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise InvalidArgumentError(f"{name} must be a finite interval, got {(lo, hi)}")
        object.__setattr__(self, "m_range", tuple(float(v) for v in self.m_range))
        object.__setattr__(self, "n_range", tuple(float(v) for v in self.n_range))

    @property
    def n_params(self):
        return 4 if self.dim == 1 else 6

    def bounds(self):
        """(lo, hi) arrays in omega order."""
        m, n = self.m_range, self.n_range
        layout = [m, n, m, n] if self.dim == 1 else [m, m, n, n, n, n]
        lo, hi = np.array(layout).T
        return lo, hi

    def draw(self, rng, M):
        lo, hi = self.bounds()
        u = rng.uniform(M * self.n_params).reshape(M, self.n_params)
        return lo + (hi - lo) * u

    def evaluate(self, omegas, points):
        """Values (M, n_points) for omegas (M, n_params); points (n_points, dim)."""
        w = np.atleast_2d(np.asarray(omegas, dtype=float))
        p = np.asarray(points, dtype=float).reshape(-1, self.dim)
        if self.dim == 1:
            x = p[:, 0]
            m0, n0, m1, n1 = (w[:, i:i + 1] for i in range(4))
            return m0 * np.sin(n0 * x) + m1 * np.cos(n1 * x)
        x, y = p[:, 0], p[:, 1]
        m0, m1, n0, n1, n2, n3 = (w[:, i:i + 1] for i in range(6))
        return m0 * np.sin(n0 * x + n1 * y) + m1 * np.cos(n2 * x + n3 * y)


@dataclass(frozen=True)
class ForcingSample:
    omega: np.ndarray
    family: ForcingFamily

    def __call__(self, *coords):
        pts = np.column_stack([np.asarray(c, dtype=float).ravel() for c in coords])
        vals = self.family.evaluate(self.omega, pts)[0]
        return vals.reshape(np.shape(coords[0]))


def sample(family, rng):
    return ForcingSample(family.draw(rng, 1)[0], family)


def evaluate(forcing_sample, points):
    return forcing_sample.family.evaluate(forcing_sample.omega, points)[0]


@dataclass(eq=False)
class Dataset:
    """Sampled parameters with their precomputed load vectors.

    In ``reaction_coefficient`` mode each sample carries its own assembled
    system, since the matrix depends on the sampled coefficient.
    """

    family: ForcingFamily
    omegas: np.ndarray
    loads: np.ndarray
    seed: int
    split: str = "train"
    systems: Optional[list] = None
    inputs: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.omegas)

    @property
    def samples(self):
        return [ForcingSample(w, self.family) for w in self.omegas]

    def encode(self, encoding, system):
        """Network inputs (M, d): raw omega or input values at the free nodal DOFs."""
        if encoding not in self.inputs:
            if encoding == "omega_vector":
                self.inputs[encoding] = np.array(self.omegas, dtype=float)
            elif encoding == "f_at_dofs":
                pts = system.dofmap.dof_coords[system.free_dofs]
                self.inputs[encoding] = self.family.evaluate(self.omegas, pts)
            else:
                raise InvalidArgumentError(f"unknown input encoding {encoding!r}")
        return self.inputs[encoding]


def build_dataset(family, M, seed, system, split="train", forcing=1.0):
    """Draw M parameter vectors and their load vectors.

    ``forcing`` is only used in ``reaction_coefficient`` mode, where the
    sampled function replaces the reaction coefficient c(x) and the
    right-hand side stays fixed.
    """
    rng = SplitMix64(seed)
    omegas = family.draw(rng, M)
    if family.kind == "forcing":
        fvals = family.evaluate(omegas, system.load_points)
        loads = system.loads(fvals) if M else np.zeros((0, system.n))
        return Dataset(family, omegas, loads, seed, split)

    from .fem.assembly import assemble_bilinear
    systems, loads = [], []
    base = system.problem
    for w in omegas:
        s = assemble_bilinear(base.with_(reaction=ForcingSample(w, family)), system.mesh, system.dofmap)
        systems.append(s)
        loads.append(s.load(forcing))
    loads = np.array(loads) if M else np.zeros((0, system.n))
    return Dataset(family, omegas, loads, seed, split, systems=systems)


def save_dataset(dataset, path):
    fam = dataset.family
    head = (f"{fam.kind} {fam.dim} {fam.m_range[0]!r} {fam.m_range[1]!r} "
            f"{fam.n_range[0]!r} {fam.n_range[1]!r} {dataset.seed} {len(dataset)}")
    rows = [" ".join(format(v, ".17g") for v in w) for w in dataset.omegas.tolist()]
    Path(path).write_text("\n".join([head] + rows) + "\n")


def load_dataset(path, system, split="train", forcing=1.0):
    """Read a dataset file; loads are recomputed from the stored omegas."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise InvalidArgumentError("empty dataset file")
    parts = lines[0].split()
    if len(parts) != 8:
        raise InvalidArgumentError("line 1: header must be 'family dim m_lo m_hi n_lo n_hi seed M'")
    kind, dim = parts[0], int(parts[1])
    m_lo, m_hi, n_lo, n_hi = (float(v) for v in parts[2:6])
    seed, M = int(parts[6]), int(parts[7])
    family = ForcingFamily(dim, (m_lo, m_hi), (n_lo, n_hi), kind)
    if len(lines) - 1 != M:
        raise InvalidArgumentError(f"header announces {M} samples, file has {len(lines) - 1}")
    omegas = np.array([[float(v) for v in ln.split()] for ln in lines[1:]]).reshape(M, family.n_params)
    ds = build_dataset(family, 0, seed, system, split, forcing)
    ds.omegas = omegas
    if kind == "forcing":
        ds.loads = system.loads(family.evaluate(omegas, system.load_points)) if M else ds.loads
    else:
        rebuilt = build_dataset(family, M, seed, system, split, forcing)
        if not np.array_equal(rebuilt.omegas, omegas):
            raise InvalidArgumentError("stored omegas do not match the announced seed")
        ds = rebuilt
    return ds

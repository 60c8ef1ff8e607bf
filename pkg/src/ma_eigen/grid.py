"""Structured lattice discretization of a convex domain with cut-cell arms.

Every lattice node of the bounding box is classified as exterior,
interior (full stencil inside the domain) or boundary-adjacent (at least
one stencil arm shortened to the boundary crossing, where u = 0).  The
unknowns are the non-exterior nodes, stored in lexicographic index order.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .geometry import Domain, boundary_crossing, distance_to_boundary

__all__ = [
    "EXTERIOR",
    "INTERIOR",
    "BOUNDARY_ADJACENT",
    "Grid",
    "GridError",
    "ScalarField",
    "build_grid",
    "dump_field_csv",
    "integrate_power",
    "read_field_csv",
    "stencil_pairs",
]

EXTERIOR, INTERIOR, BOUNDARY_ADJACENT = 0, 1, 2
CLASS_NAMES = {EXTERIOR: "exterior", INTERIOR: "interior", BOUNDARY_ADJACENT: "boundary"}

# nodes closer than this fraction of h to the boundary are treated as boundary points
_SNAP = 1e-8
_SUBSAMPLES = 4


class GridError(ValueError):
    pass


def stencil_pairs(dim: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Lattice direction vectors and the orthogonal pairs built from them.

    In 2D the pairs are ``(v, rot90(v))`` for every primitive lattice vector
    ``v = (p, q)`` with ``p > 0, q >= 0`` and ``max(p, q) <= width``.  For
    width 2 this gives pairs at 0, 26.6, 45 and 63.4 degrees.
    """
    if dim == 1:
        return np.array([[1]]), np.array([[0]])
    base = [
        (p, q)
        for p in range(1, width + 1)
        for q in range(0, width + 1)
        if math.gcd(p, q) == 1
    ]
    base.sort(key=lambda v: math.atan2(v[1], v[0]))
    vectors, pairs = [], []
    for p, q in base:
        pairs.append((len(vectors), len(vectors) + 1))
        vectors += [(p, q), (-q, p)]
    return np.array(vectors), np.array(pairs)


@dataclass(frozen=True, eq=False)
class Grid:
    """Lattice data.  Arrays indexed by ``k`` run over the unknown nodes."""

    domain: Domain
    h: float
    width: int
    origin: np.ndarray          # lattice coordinates of index (0, ..., 0)
    shape: tuple[int, ...]
    node_class: np.ndarray      # lattice-shaped int8
    lattice_index: np.ndarray   # (m, dim) integer indices of unknowns
    points: np.ndarray          # (m, dim) coordinates of unknowns
    vectors: np.ndarray         # (D, dim) integer stencil vectors
    pairs: np.ndarray           # (P, dim) rows of indices into ``vectors``
    neighbors: np.ndarray       # (m, D, 2) unknown index of +v / -v neighbor, -1 at the boundary
    arms: np.ndarray            # (m, D, 2) physical arm lengths (cut where neighbor is -1)
    quad_weight: np.ndarray     # (m,)
    boundary_distance: np.ndarray  # (m,) distance to the boundary

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def full_stencil(self) -> np.ndarray:
        """Mask of unknowns none of whose arms is cut."""
        idx = tuple(self.lattice_index.T)
        return self.node_class[idx] == INTERIOR

    @property
    def step_lengths(self) -> np.ndarray:
        return self.h * np.sqrt((self.vectors**2).sum(axis=1))

    @property
    def nodes_per_side(self) -> int:
        return max(self.shape)

    @cached_property
    def kernel_args(self) -> tuple[np.ndarray, ...]:
        """Arrays consumed by the jitted kernels, see ``ma_eigen._kernels``.

        ``(flat, slot, offsets, cint, cnbp, cnbm, cwp, cwm, cc)``: lattice
        position of each unknown, its row in the cut-node tables (-1 for
        full-stencil nodes), constant lattice offsets and coefficients, and
        the cut-node neighbor indices, arm weights and coefficients.
        Boundary neighbors point at the ghost slot after the lattice.
        """
        n_lattice = int(np.prod(self.shape))
        flat = np.ravel_multi_index(tuple(self.lattice_index.T), self.shape)
        strides = np.array([int(np.prod(self.shape[i + 1:])) for i in range(self.dim)])
        offsets = self.vectors @ strides
        cint = 2.0 / self.step_lengths**2
        cut = ~self.full_stencil
        slot = np.full(self.size, -1, dtype=np.int64)
        slot[cut] = np.arange(cut.sum())
        nb = self.neighbors[cut]
        to_flat = np.append(flat, n_lattice)   # -1 maps to the ghost
        cnbp, cnbm = to_flat[nb[:, :, 0]], to_flat[nb[:, :, 1]]
        a, b = self.arms[cut, :, 0], self.arms[cut, :, 1]
        arrays = (flat, slot, offsets, cint, cnbp, cnbm, b / (a + b), a / (a + b), 2.0 / (a * b))
        return tuple(np.ascontiguousarray(x) for x in arrays)

    def lattice_values(self, values: np.ndarray) -> np.ndarray:
        """Scatter nodal values onto the flat lattice plus ghost slot (zeros elsewhere)."""
        U = np.zeros(int(np.prod(self.shape)) + 1)
        U[self.kernel_args[0]] = values
        return U

    def colors(self) -> np.ndarray:
        """Color per unknown such that no two nodes of one color are stencil neighbors.

        Stencil vectors have components in ``[-W, W]``, so the lattice index
        taken mod ``W + 1`` per axis separates every node from its neighbors.
        """
        base = self.width + 1
        c = np.zeros(self.size, dtype=np.int64)
        for d in range(self.dim):
            c = c * base + self.lattice_index[:, d] % base
        return c

    def field(self, values) -> "ScalarField":
        return ScalarField(self, np.asarray(values, dtype=float))

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.size))

    def sample(self, func) -> "ScalarField":
        """Field of ``func`` evaluated at the unknown nodes (``func`` gets an (m, dim) array)."""
        return ScalarField(self, np.asarray(func(self.points), dtype=float).reshape(self.size))


class ScalarField:
    """Nodal values of a candidate convex function, zero on the boundary.

    The boundary value enters only through the cut arms of the grid, so
    ``values`` holds the unknown nodes alone.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.size,):
            raise ValueError(f"expected {grid.size} nodal values, got shape {values.shape}")
        self.grid = grid
        self.values = values

    def __repr__(self):
        return f"ScalarField(m={self.grid.size}, sup={self.sup_norm():.6g})"

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values / float(c))

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values - other.values)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def normalized(self) -> "ScalarField":
        s = self.sup_norm()
        if s == 0:
            raise ValueError("cannot normalize the zero field")
        return self / s


def _lattice(domain: Domain, h: float) -> tuple[np.ndarray, tuple[int, ...]]:
    lo, hi = domain.bounding_box
    counts = tuple(int(math.floor((b - a) / h + 1e-9)) + 1 for a, b in zip(lo, hi))
    return np.asarray(lo, dtype=float), counts


def build_grid(domain: Domain, h: float, width: int = 2) -> Grid:
    """Discretize ``domain`` with lattice spacing ``h`` and stencil width ``width``.

    ``width`` is ignored in 1D.  Raises :class:`GridError` if ``h`` is out of
    range or, in 2D, the grid has fewer than 9 unknowns (in 1D the bound
    on ``h`` already guarantees at least 7).
    """
    h = float(h)
    if not (h > 0 and h <= domain.diameter / 8 * (1 + 1e-12)):
        raise GridError(f"h must lie in (0, diam/8] = (0, {domain.diameter / 8:g}], got {h:g}")
    dim = domain.dim
    if dim == 1:
        width = 1
    elif not 1 <= int(width) <= 4:
        raise GridError(f"stencil width W must lie in [1, 4], got {width}")
    width = int(width)

    origin, shape = _lattice(domain, h)
    axes = [origin[i] + h * np.arange(shape[i]) for i in range(dim)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    inside = domain._slack(mesh) > _SNAP * h

    lattice_flat = np.flatnonzero(inside)
    m = lattice_flat.size
    if m < (9 if dim == 2 else 3):
        raise GridError(f"grid too coarse: {m} unknown nodes (need at least 9)")
    index_of = np.full(mesh.shape[0], -1, dtype=np.int64)
    index_of[lattice_flat] = np.arange(m)
    lattice_index = np.stack(np.unravel_index(lattice_flat, shape), axis=-1)
    points = mesh[lattice_flat]

    vectors, pairs = stencil_pairs(dim, width)
    D = len(vectors)
    steps = h * np.sqrt((vectors**2).sum(axis=1))
    neighbors = np.full((m, D, 2), -1, dtype=np.int64)
    arms = np.empty((m, D, 2))
    shape_arr = np.array(shape)
    for d, v in enumerate(vectors):
        for s, sign in enumerate((1, -1)):
            target = lattice_index + sign * v
            valid = np.all((target >= 0) & (target < shape_arr), axis=1)
            nb = np.full(m, -1, dtype=np.int64)
            flat = np.ravel_multi_index(tuple(target[valid].T), shape)
            nb[valid] = index_of[flat]
            neighbors[:, d, s] = nb
            arms[:, d, s] = steps[d]
            direction = sign * v / np.linalg.norm(v)
            for k in np.flatnonzero(nb < 0):
                t = boundary_crossing(domain, points[k], direction, steps[d])
                arms[k, d, s] = steps[d] if t is None else t

    cut = np.any(neighbors < 0, axis=(1, 2))
    node_class = np.zeros(shape, dtype=np.int8)
    node_class[tuple(lattice_index.T)] = np.where(cut, BOUNDARY_ADJACENT, INTERIOR)

    weights = np.full(m, h**dim)
    offsets = (np.arange(_SUBSAMPLES) + 0.5) / _SUBSAMPLES - 0.5
    sub = np.stack(np.meshgrid(*([offsets] * dim), indexing="ij"), axis=-1).reshape(-1, dim) * h
    for k in np.flatnonzero(cut):
        frac = np.mean(domain._slack(points[k] + sub) > 0)
        weights[k] = frac * h**dim

    for arr in (node_class, lattice_index, points, neighbors, arms, weights):
        arr.setflags(write=False)
    return Grid(
        domain=domain,
        h=h,
        width=width,
        origin=origin,
        shape=tuple(shape),
        node_class=node_class,
        lattice_index=lattice_index,
        points=points,
        vectors=vectors,
        pairs=pairs,
        neighbors=neighbors,
        arms=arms,
        quad_weight=weights,
        boundary_distance=distance_to_boundary(domain, points),
    )


def integrate_power(field: ScalarField, p: float) -> float:
    """Quadrature of ``(-u)**p`` over the domain."""
    if p < 1:
        raise ValueError(f"power must be >= 1, got {p}")
    neg = np.maximum(-field.values, 0.0)
    return float(np.dot(field.grid.quad_weight, neg**p))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def dump_field_csv(field: ScalarField, out=None) -> str:
    """CSV of every lattice node in lexicographic index order.

    Columns are ``ix,iy,x,y,class,value`` in 2D and ``ix,x,class,value`` in 1D.
    Exterior nodes carry the boundary value 0.
    """
    grid = field.grid
    dim = grid.dim
    full = np.zeros(grid.shape)
    full[tuple(grid.lattice_index.T)] = field.values
    buf = io.StringIO()
    buf.write("ix,iy,x,y,class,value\n" if dim == 2 else "ix,x,class,value\n")
    for idx in np.ndindex(*grid.shape):
        coords = grid.origin + grid.h * np.array(idx)
        cls = CLASS_NAMES[int(grid.node_class[idx])]
        row = [str(i) for i in idx] + [_fmt(c) for c in coords] + [cls, _fmt(full[idx])]
        buf.write(",".join(row) + "\n")
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def read_field_csv(grid: Grid, lines: Iterable[str] | str) -> ScalarField:
    """Inverse of :func:`dump_field_csv` on a matching grid (extra rows are ignored)."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    lines = iter(lines)
    header = next(lines).strip().split(",")
    dim = grid.dim
    expected = ["ix", "iy", "x", "y", "class", "value"] if dim == 2 else ["ix", "x", "class", "value"]
    if header != expected:
        raise ValueError(f"unexpected field header {header}, want {expected}")
    full = np.zeros(grid.shape)
    seen = np.zeros(grid.shape, dtype=bool)
    for line in lines:
        if not line.strip():
            continue
        parts = line.strip().split(",")
        idx = tuple(int(v) for v in parts[:dim])
        if all(0 <= i < n for i, n in zip(idx, grid.shape)):
            full[idx] = float(parts[-1])
            seen[idx] = True
    li = tuple(grid.lattice_index.T)
    if not seen[li].all():
        raise ValueError("field file does not cover every unknown node of the grid")
    return ScalarField(grid, full[li])

"""Multi-resolution trilinear grid encoder with hashed or dense tables.

The level-l lattice places its vertices at (k - 1/2) * s for integer k and
step s = 1 / (n_min * 2^(l*b) - 1), so cell boundaries carry the half-step
offset that keeps derivative kinks from aligning across levels.  The first
and last cells are truncated by the domain [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trilinear import CORNER_OFFSETS_INT, trilinear_batch, interp_weight_gradient

HASH_PRIMES = (1, 2654435761, 805459861)


class CorruptWeightsError(ValueError):
    """Feature tables or layer weights contain non-finite values."""


@dataclass(frozen=True)
class HashGridSpec:
    """Geometry and hashing parameters of the multi-resolution encoder."""

    levels: int
    features_per_level: int
    n_min: int
    n_max: int
    table_size: int

    def __post_init__(self):
        if self.levels < 1 or self.features_per_level < 1:
            raise ValueError("levels and features_per_level must be positive")
        if not (2 <= self.n_min <= self.n_max):
            raise ValueError("need 2 <= n_min <= n_max")
        if self.table_size < 8:
            raise ValueError("table_size must be at least 8")

    @property
    def growth(self) -> float:
        if self.levels == 1:
            return 0.0
        return np.log2(self.n_max / self.n_min) / (self.levels - 1)

    def resolution(self, level: int) -> float:
        return self.n_min * 2.0 ** (level * self.growth)

    def scale(self, level: int) -> float:
        """pos = x * scale + 1/2; lattice vertex k sits at x = (k - 1/2)/scale."""
        return self.resolution(level) - 1.0

    def step(self, level: int) -> float:
        return 1.0 / self.scale(level)

    def num_cells(self, level: int) -> int:
        return int(np.floor(self.scale(level) + 0.5)) + 1

    def verts_per_axis(self, level: int) -> int:
        return self.num_cells(level) + 1

    def level_is_dense(self, level: int) -> bool:
        return self.verts_per_axis(level) ** 3 <= self.table_size

    def level_entries(self, level: int, dense: bool) -> int:
        return self.verts_per_axis(level) ** 3 if dense else self.table_size

    def level_marks(self, level: int) -> np.ndarray:
        """Sorted cell boundaries of one level inside [0, 1], endpoints included."""
        s = self.step(level)
        ks = np.arange(1, self.num_cells(level))
        interior = ks * s - s / 2.0
        return np.concatenate(([0.0], interior[interior < 1.0 - 1e-12], [1.0]))

    @property
    def output_dim(self) -> int:
        return self.levels * self.features_per_level


def grid_marks(spec: HashGridSpec, tol: float = 1e-12) -> np.ndarray:
    """Union of all levels' cell boundaries, deduplicated and ascending."""
    marks = np.concatenate([spec.level_marks(l) for l in range(spec.levels)])
    marks = np.sort(marks)
    keep = np.concatenate(([True], np.diff(marks) > tol))
    return marks[keep]


def corner_hash(coords: np.ndarray, table_size: int) -> np.ndarray:
    """Spatial hash of integer lattice coordinates into [0, table_size)."""
    c = np.asarray(coords, dtype=np.uint64)
    h = (
        c[..., 0] * np.uint64(HASH_PRIMES[0])
        ^ c[..., 1] * np.uint64(HASH_PRIMES[1])
        ^ c[..., 2] * np.uint64(HASH_PRIMES[2])
    )
    return (h % np.uint64(table_size)).astype(np.int64)


def dense_index(coords: np.ndarray, verts_per_axis: int) -> np.ndarray:
    c = np.asarray(coords, dtype=np.int64)
    return c[..., 0] + verts_per_axis * (c[..., 1] + verts_per_axis * c[..., 2])


class FeatureTables:
    """Per-level feature arrays; dense levels index the lattice directly."""

    def __init__(self, spec: HashGridSpec, tables: list[np.ndarray], dense: list[bool] | None = None):
        self.spec = spec
        if dense is None:
            dense = [spec.level_is_dense(l) for l in range(spec.levels)]
        if len(tables) != spec.levels or len(dense) != spec.levels:
            raise ValueError("one table and one dense flag per level required")
        self.dense = list(dense)
        self.tables = []
        for l, t in enumerate(tables):
            t = np.asarray(t, dtype=np.float64)
            want = (spec.level_entries(l, self.dense[l]), spec.features_per_level)
            if t.shape != want:
                raise ValueError(f"level {l} table shape {t.shape}, expected {want}")
            if not np.all(np.isfinite(t)):
                raise CorruptWeightsError(f"non-finite feature in level {l} table")
            self.tables.append(t)

    @classmethod
    def zeros(cls, spec: HashGridSpec) -> "FeatureTables":
        dense = [spec.level_is_dense(l) for l in range(spec.levels)]
        tables = [
            np.zeros((spec.level_entries(l, dense[l]), spec.features_per_level))
            for l in range(spec.levels)
        ]
        return cls(spec, tables, dense)

    def corner_indices(self, level: int, coords: np.ndarray) -> np.ndarray:
        if self.dense[level]:
            return dense_index(coords, self.spec.verts_per_axis(level))
        return corner_hash(coords, self.spec.table_size)


def _locate(points: np.ndarray, spec: HashGridSpec, level: int):
    """Lattice cell index and in-cell weight for each point, one level."""
    scale = spec.scale(level)
    pos = points * scale + 0.5
    cell = np.clip(np.floor(pos), 0, spec.num_cells(level) - 1).astype(np.int64)
    w = pos - cell
    return cell, w


def cell_of(x, spec: HashGridSpec):
    """Per-level interval index and relative position between cell boundaries.

    The interval is taken between consecutive level marks (the first and last
    intervals are the truncated half cells), right-closed at 1; the relative
    weight is rescaled to the actual interval width.
    """
    x = np.asarray(x, dtype=np.float64)
    out = []
    for l in range(spec.levels):
        marks = spec.level_marks(l)
        idx = np.clip(np.searchsorted(marks, x, side="right") - 1, 0, len(marks) - 2)
        lo = marks[idx]
        width = marks[idx + 1] - lo
        out.append((idx.astype(np.int64), (x - lo) / width))
    return out


def encode(points, spec: HashGridSpec, tables: FeatureTables) -> np.ndarray:
    """Concatenated per-level trilinear features, level-major: (N, L*F)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = pts.shape[0]
    f = spec.features_per_level
    out = np.empty((n, spec.output_dim))
    for l in range(spec.levels):
        cell, w = _locate(pts, spec, l)
        u = 1.0 - w
        acc = np.zeros((n, f))
        table = tables.tables[l]
        dense = tables.dense[l]
        v = spec.verts_per_axis(l)
        for ci in range(8):
            bx, by, bz = ci & 1, (ci >> 1) & 1, (ci >> 2) & 1
            cx = cell[:, 0] + bx
            cy = cell[:, 1] + by
            cz = cell[:, 2] + bz
            if dense:
                idx = cx + v * (cy + v * cz)
            else:
                h = (
                    cx.astype(np.uint64) * np.uint64(HASH_PRIMES[0])
                    ^ cy.astype(np.uint64) * np.uint64(HASH_PRIMES[1])
                    ^ cz.astype(np.uint64) * np.uint64(HASH_PRIMES[2])
                )
                idx = (h % np.uint64(spec.table_size)).astype(np.int64)
            wgt = (
                (w[:, 0] if bx else u[:, 0])
                * (w[:, 1] if by else u[:, 1])
                * (w[:, 2] if bz else u[:, 2])
            )
            acc += wgt[:, None] * table[idx]
        out[:, l * f : (l + 1) * f] = acc
    if np.asarray(points).ndim == 1:
        return out[0]
    return out


def encode_via_cells(points, spec: HashGridSpec, tables: FeatureTables) -> np.ndarray:
    """encode() computed through cell_of and virtual sub-cell corners.

    The truncated boundary intervals are handled as smaller cells whose
    corner features are trilinear evaluations of the underlying lattice
    cell; nested interpolation makes this agree with :func:`encode`.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = pts.shape[0]
    located = cell_of(pts, spec)
    feats = []
    for l in range(spec.levels):
        marks = spec.level_marks(l)
        idx, w_rel = located[l]
        lo = marks[idx]
        hi = marks[idx + 1]
        # virtual corner positions of the interval box, then one more encode
        corners_pos = np.empty((n, 8, 3))
        for c in range(8):
            b = CORNER_OFFSETS_INT[c]
            corners_pos[:, c, :] = np.where(b[None, :] == 1, hi, lo)
        level_slice = slice(l * spec.features_per_level, (l + 1) * spec.features_per_level)
        corner_feats = encode(corners_pos.reshape(-1, 3), spec, tables)[:, level_slice]
        corner_feats = corner_feats.reshape(n, 8, spec.features_per_level)
        feats.append(trilinear_batch(w_rel, corner_feats))
    out = np.concatenate(feats, axis=1)
    if np.asarray(points).ndim == 1:
        return out[0]
    return out


def encode_gradient(points, spec: HashGridSpec, tables: FeatureTables) -> np.ndarray:
    """Jacobian of encode with respect to x: (N, 3, L*F)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = pts.shape[0]
    grads = []
    for l in range(spec.levels):
        cell, w = _locate(pts, spec, l)
        coords = cell[:, None, :] + CORNER_OFFSETS_INT[None, :, :]
        idx = tables.corner_indices(l, coords)
        corners = tables.tables[l][idx]  # (N, 8, F)
        dw = interp_weight_gradient(w)  # (N, 8, 3)
        g = np.einsum("ncj,ncf->njf", dw, corners) * spec.scale(l)
        grads.append(g)
    out = np.concatenate(grads, axis=2)
    if np.asarray(points).ndim == 1:
        return out[0]
    return out

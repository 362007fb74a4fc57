"""Evaluation harness: marching-cubes baseline, surface samplers, chamfer
distance/efficiency, angular distance, flatness error, surface SDF error."""

from __future__ import annotations

import sys

import numpy as np
from scipy.spatial import cKDTree

from .extractor import CORNER_OFFSETS
from .network import SdfNetwork

BRUTE_FORCE_LIMIT = 2000


def sample_grid_field(field, resolution: int, chunk: int = 8) -> np.ndarray:
    """field evaluated on a resolution^3 grid over [0,1]^3, x-major."""
    xs = np.linspace(0.0, 1.0, resolution)
    vol = np.empty((resolution,) * 3)
    for i0 in range(0, resolution, chunk):
        i1 = min(i0 + chunk, resolution)
        gx, gy, gz = np.meshgrid(xs[i0:i1], xs, xs, indexing="ij")
        pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
        vol[i0:i1] = np.asarray(field(pts)).reshape(i1 - i0, resolution, resolution)
    return vol


def marching_cubes(field, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Triangle mesh of the zero level set from grid samples of ``field``.

    Classic case-table marching cubes (scikit-image's topologically
    disambiguated variant) with linear interpolation on crossing edges.
    Returns (vertices, triangles); both empty when the level is not crossed.
    """
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    from skimage.measure import marching_cubes as _mc

    vol = sample_grid_field(field, resolution)
    if vol.min() > 0.0 or vol.max() < 0.0:
        return np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)
    h = 1.0 / (resolution - 1)
    verts, tris, _, _ = _mc(vol, level=0.0, spacing=(h, h, h))
    return np.asarray(verts, dtype=np.float64), np.asarray(tris, dtype=np.int64)


def _triangle_areas(vertices: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a = vertices[tris[:, 1]] - vertices[tris[:, 0]]
    b = vertices[tris[:, 2]] - vertices[tris[:, 0]]
    return 0.5 * np.linalg.norm(np.cross(a, b), axis=1)


def sample_mesh(
    vertices: np.ndarray,
    faces,
    n: int,
    seed: int,
    with_normals: bool = False,
):
    """Area-weighted uniform points on the faces, deterministic per seed."""
    if n < 1:
        raise ValueError("need at least one sample")
    if isinstance(faces, list):
        tris = np.asarray([t for f in faces for t in _fan(f)], dtype=np.int64)
    else:
        tris = np.asarray(faces, dtype=np.int64)
    tris = tris.reshape(-1, 3) if tris.size else np.zeros((0, 3), dtype=np.int64)
    if len(tris) == 0:
        raise ValueError("cannot sample an empty mesh")
    areas = _triangle_areas(vertices, tris)
    total = areas.sum()
    if total <= 0:
        raise ValueError("mesh has zero area")
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(tris), size=n, p=areas / total)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    a = vertices[tris[pick, 0]]
    b = vertices[tris[pick, 1]]
    c = vertices[tris[pick, 2]]
    pts = (1 - r1)[:, None] * a + (r1 * (1 - r2))[:, None] * b + (r1 * r2)[:, None] * c
    if not with_normals:
        return pts
    nrm = np.cross(b - a, c - a)
    nn = np.linalg.norm(nrm, axis=1, keepdims=True)
    nrm = nrm / np.maximum(nn, 1e-300)
    return pts, nrm


def _fan(face):
    for k in range(1, len(face) - 1):
        yield [face[0], face[k], face[k + 1]]


def sample_field_surface(
    field, n: int, seed: int, center=(0.5, 0.5, 0.5), tol: float = 1e-6, max_steps: int = 256
):
    """Sphere-trace seeded random rays from the domain centre to the zero set.

    Emits a warning and returns a partial sample when fewer than ``n`` rays
    hit after shooting 10n of them.
    """
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=np.float64)
    hits = []
    shot = 0
    batch = max(n, 256)
    while len(hits) < n and shot < 10 * n:
        dirs = rng.normal(size=(batch, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        shot += batch
        t = np.zeros(batch)
        alive = np.ones(batch, dtype=bool)
        pts = np.repeat(center[None, :], batch, axis=0)
        inside_sign = np.sign(field(center[None, :]))[0] or 1.0
        for _ in range(max_steps):
            if not alive.any():
                break
            cur = center[None, :] + t[alive, None] * dirs[alive]
            d = np.asarray(field(cur)) * inside_sign
            done = np.abs(d) <= tol
            idx = np.nonzero(alive)[0]
            pts[idx[done]] = cur[done]
            out = np.any((cur < -0.05) | (cur > 1.05), axis=1)
            step = np.abs(d)
            t[idx] += np.where(done, 0.0, step)
            alive[idx[done]] = False
            alive[idx[out]] = False
            finished = idx[done]
        converged = ~alive & (np.abs(np.asarray(field(pts))) <= 10 * tol)
        hits.extend(pts[converged])
    hits = np.asarray(hits[: n]) if hits else np.zeros((0, 3))
    if len(hits) < n:
        print(
            f"warning: surface sampler hit {len(hits)}/{n} rays",
            file=sys.stderr,
        )
    return hits


def _directed_sq(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) <= BRUTE_FORCE_LIMIT and len(b) <= BRUTE_FORCE_LIMIT:
        return _directed_sq_brute(a, b)
    d, _ = cKDTree(b).query(a, k=1)
    return float(np.mean(d**2))


def _directed_sq_brute(a: np.ndarray, b: np.ndarray) -> float:
    d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)
    return float(np.mean(d2.min(axis=1)))


def chamfer(s0: np.ndarray, s1: np.ndarray) -> float:
    """Bidirectional mean squared nearest-neighbour distance."""
    s0 = np.atleast_2d(np.asarray(s0, dtype=np.float64))
    s1 = np.atleast_2d(np.asarray(s1, dtype=np.float64))
    if len(s0) == 0 or len(s1) == 0:
        raise ValueError("chamfer needs two non-empty point sets")
    return 0.5 * (_directed_sq(s0, s1) + _directed_sq(s1, s0))


def chamfer_brute(s0: np.ndarray, s1: np.ndarray) -> float:
    return 0.5 * (_directed_sq_brute(s0, s1) + _directed_sq_brute(s1, s0))


def chamfer_efficiency(nvertices: int, cd: float) -> float:
    """100 / sqrt(|V| * CD); +inf when the distance vanishes."""
    if nvertices <= 0 or cd < 0:
        raise ValueError("need positive vertex count and non-negative cd")
    if cd == 0.0:
        return float("inf")
    return 100.0 / np.sqrt(nvertices * cd)


def angular_distance(n0: np.ndarray, n1: np.ndarray) -> float:
    """Mean arc-cosine of paired unit normals, in degrees."""
    n0 = np.atleast_2d(n0)
    n1 = np.atleast_2d(n1)
    dots = np.clip(np.sum(n0 * n1, axis=1), -1.0, 1.0)
    return float(np.degrees(np.arccos(dots)).mean())


def flatness_terms(corner_vals: np.ndarray) -> float:
    """Planarity violation of one cell from its eight corner values."""
    x = np.asarray(corner_vals, dtype=np.float64)
    term_a = 0.25 * (abs(x[1] + x[2] + x[4]) + abs(x[3] + x[5] + x[6]))
    term_b = (abs(x[1] + x[6]) + abs(x[2] + x[5]) + abs(x[3] + x[4])) / 6.0
    return float(term_a + term_b)


def flatness_error(net: SdfNetwork, edge_endpoints, eps: float = 1e-4) -> float:
    """Mean planarity violation over the given diagonal edges.

    Each entry of ``edge_endpoints`` is an (x0, x7) pair spanning a cell box;
    the box corner values come from the masked regional evaluation of the
    network output.
    """
    total = 0.0
    count = 0
    layer, neuron = net.num_layers, 0
    for p0, p1 in edge_endpoints:
        p0 = np.asarray(p0, dtype=np.float64)
        p1 = np.asarray(p1, dtype=np.float64)
        corners = p0 + CORNER_OFFSETS * (p1 - p0)
        vals = net.masked_corner_values(p0, p1, corners, layer, neuron, eps)
        total += flatness_terms(vals)
        count += 1
    if count == 0:
        raise ValueError("no edges supplied")
    return total / count


def diagonal_edges(points: np.ndarray, edges: np.ndarray, min_extent: float = 1e-9):
    """Endpoint pairs whose boxes have full 3-d extent (diagonal edges)."""
    out = []
    for a, b in edges:
        p0, p1 = points[int(a)], points[int(b)]
        if np.all(np.abs(p1 - p0) > min_extent):
            out.append((p0, p1))
    return out


def surface_sdf_error(net: SdfNetwork, points: np.ndarray) -> float:
    """Mean squared network output over surface samples."""
    vals = np.asarray(net.forward(np.atleast_2d(points)))
    return float(np.mean(vals**2))

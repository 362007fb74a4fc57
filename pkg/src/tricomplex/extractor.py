"""Polyhedral complex derivation from a trilinear network.

The complex starts as the grid-mark lattice and is subdivided by one
candidate surface at a time (hidden neurons in layer order, output last).
Straight lattice edges split by exact linear interpolation of the endpoint
values; curved edges (edges riding on earlier surfaces) split by solving
the two-hypersurface/diagonal-plane quartic inside the edge's cell box.
Afterwards the zero-level vertices are kept, grouped into faces per region,
and each face is wound counter-clockwise against its outward normal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import hashgrid
from .network import SdfNetwork, SignVector
from .trilinear import (
    CORNER_OFFSETS,
    DegeneratePolynomialError,
    bezier_power_coefficients,
    diagonal_bezier_control_points,
    solve_quartic_unit_interval,
)

# Bernstein -> power map for the quadratic pair basis
# [(1-x)^2, x(1-x), (1-x)x, x^2] -> 1, x, x^2
C_MAP = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [-2.0, 1.0, 1.0, 0.0],
        [1.0, -1.0, -1.0, 1.0],
    ]
)

# corner groups per diagonal plane: (alpha, beta, local point builder)
_PLANES = {
    "xz": (np.array([0, 1, 4, 5]), np.array([2, 3, 6, 7]), lambda u, v: (u, v, u)),
    "yz": (np.array([0, 2, 4, 6]), np.array([1, 3, 5, 7]), lambda u, v: (v, u, u)),
    "xy": (np.array([0, 1, 2, 3]), np.array([4, 5, 6, 7]), lambda u, v: (u, u, v)),
}
PLANE_ORDER = ("xz", "yz", "xy")


class ExtractionError(RuntimeError):
    pass


@dataclass
class EdgeCorners:
    """Corner tensors of two fields over one cell box.

    ``origin``/``size`` place the local unit cube in space; sizes may be
    signed or zero (degenerate boxes collapse an axis).
    """

    p: np.ndarray
    q: np.ndarray
    origin: np.ndarray
    size: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64).reshape(8)
        self.q = np.asarray(self.q, dtype=np.float64).reshape(8)
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.size = np.asarray(self.size, dtype=np.float64).reshape(3)

    def to_global(self, local) -> np.ndarray:
        return self.origin + np.asarray(local) * self.size


@dataclass
class IntersectResult:
    point: np.ndarray  # global coordinates
    local: np.ndarray
    plane: str | None
    status: str  # "ok" | "degenerate" | "failed"
    candidates: list[np.ndarray] = field(default_factory=list)


def quartic_coefficients(p: np.ndarray, q: np.ndarray, plane: str) -> np.ndarray:
    """Quartic in the tied coordinate of ``plane`` whose roots satisfy both
    restricted fields: anti-diagonal sums of C (Pa Qb^T - Pb Qa^T) C^T."""
    a_idx, b_idx, _ = _PLANES[plane]
    pa, pb = p[a_idx], p[b_idx]
    qa, qb = q[a_idx], q[b_idx]
    m = np.outer(pa, qb) - np.outer(pb, qa)
    cmc = C_MAP @ m @ C_MAP.T
    coeffs = np.zeros(5)
    for i in range(3):
        for j in range(3):
            coeffs[i + j] += cmc[i, j]
    return coeffs


def _pair_basis(u: float) -> np.ndarray:
    return np.array([(1 - u) ** 2, u * (1 - u), (1 - u) * u, u * u])


def intersect_edge(
    corners: EdgeCorners,
    hint: np.ndarray | None = None,
    tol_real: float = 1e-9,
    planes: tuple[str, ...] = PLANE_ORDER,
) -> IntersectResult:
    """Point where both corner fields vanish on a diagonal plane of the box.

    Tries the diagonal planes in order; a plane whose quartic degenerates
    (both restrictions share a zero curve) is skipped, and if every plane
    degenerates the diagonal midpoint (or the hint projected onto the
    diagonal) is returned.  ``hint`` is a local-coordinate point used to
    choose among multiple roots.
    """
    scale = max(np.max(np.abs(corners.p)), np.max(np.abs(corners.q)), 1e-300)
    hint_local = np.asarray(hint, dtype=np.float64) if hint is not None else np.full(3, 0.5)
    all_degenerate = True
    for plane in planes:
        a_idx, b_idx, placer = _PLANES[plane]
        coeffs = quartic_coefficients(corners.p, corners.q, plane)
        if np.max(np.abs(coeffs)) <= 1e-12 * scale * scale:
            continue  # this plane is degenerate; try the next
        all_degenerate = False
        try:
            roots = solve_quartic_unit_interval(coeffs, tol_real=tol_real)
        except DegeneratePolynomialError:
            continue
        pa, pb = corners.p[a_idx], corners.p[b_idx]
        qa, qb = corners.q[a_idx], corners.q[b_idx]
        candidates = []
        for u in roots:
            x = _pair_basis(float(u))
            den = x @ (pa - pb)
            num = x @ pa
            if abs(den) <= 1e-12 * max(scale, 1e-300):
                # fall back to the other field for the free coordinate
                den = x @ (qa - qb)
                num = x @ qa
                if abs(den) <= 1e-12 * max(scale, 1e-300):
                    continue
            v = num / den
            if not (-1e-6 <= v <= 1.0 + 1e-6):
                continue
            local = np.clip(np.asarray(placer(float(u), float(v))), 0.0, 1.0)
            candidates.append(local)
        if candidates:
            dists = [np.linalg.norm(c - hint_local) for c in candidates]
            best = candidates[int(np.argmin(dists))]
            return IntersectResult(
                corners.to_global(best), best, plane, "ok", candidates
            )
    if all_degenerate:
        t = float(np.clip(np.mean(hint_local), 0.0, 1.0)) if hint is not None else 0.5
        local = np.full(3, t)
        return IntersectResult(corners.to_global(local), local, None, "degenerate", [])
    return IntersectResult(
        corners.to_global(hint_local), hint_local, None, "failed", []
    )


def thales_weight(d0: float, d1: float) -> float:
    """Linear crossing parameter from endpoint values of opposite sign."""
    return abs(d0) / abs(d0 - d1)


# ---------------------------------------------------------------------------


@dataclass
class ExtractionConfig:
    epsilon: float = 1e-4
    merge_tol: float = 1e-9
    root_tol: float = 1e-9
    prune: bool = False
    boundary_faces: bool = True


class ComplexState:
    """Growing vertex/edge sets with per-vertex surface membership."""

    def __init__(self, marks: np.ndarray, num_surfaces: int):
        self.marks = np.asarray(marks, dtype=np.float64)
        self.num_surfaces = num_surfaces
        self.points = np.zeros((0, 3))
        self.grid_interval = np.zeros((0, 3), dtype=np.int64)
        self.grid_mark = np.zeros((0, 3), dtype=np.int64)
        self.nsign = np.zeros((0, num_surfaces), dtype=np.int8)
        self.edges = np.zeros((0, 2), dtype=np.int64)
        self.processed = 0  # number of surface columns already valid
        self.lattice_index: np.ndarray | None = None
        self.stats = {
            "curved_splits": 0,
            "straight_splits": 0,
            "fallback_splits": 0,
            "merged_vertices": 0,
            "dropped_face_groups": 0,
            "open_face_groups": 0,
            "pruned_edges": 0,
        }

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    def grid_locate(self, pts: np.ndarray, eps: float):
        """Interval index and on-mark index (or -1) per axis for points."""
        idx = np.clip(
            np.searchsorted(self.marks, pts, side="right") - 1, 0, len(self.marks) - 2
        )
        near = np.searchsorted(self.marks, pts)
        mark = np.full(pts.shape, -1, dtype=np.int64)
        for cand in (near - 1, near):
            ok = (cand >= 0) & (cand < len(self.marks))
            c = np.clip(cand, 0, len(self.marks) - 1)
            hit = ok & (np.abs(self.marks[c] - pts) <= eps)
            mark[hit] = c[hit]
        return idx.astype(np.int64), mark

    def append_points(self, pts: np.ndarray, eps: float) -> np.ndarray:
        idx, mark = self.grid_locate(pts, eps)
        start = self.num_points
        self.points = np.vstack([self.points, pts])
        self.grid_interval = np.vstack([self.grid_interval, idx])
        self.grid_mark = np.vstack([self.grid_mark, mark])
        self.nsign = np.vstack(
            [self.nsign, np.zeros((len(pts), self.num_surfaces), dtype=np.int8)]
        )
        return np.arange(start, self.num_points)

    def sign_vector(self, i: int) -> SignVector:
        return SignVector(
            self.grid_interval[i].copy(),
            self.grid_mark[i].copy(),
            self.nsign[i, : self.processed].copy(),
        )

    def axis_cells(self, i: int, ax: int) -> list[int]:
        """Intervals the vertex touches along one axis (two when on a mark)."""
        m = self.grid_mark[i, ax]
        if m < 0:
            return [int(self.grid_interval[i, ax])]
        return [c for c in (int(m) - 1, int(m)) if 0 <= c <= len(self.marks) - 2]

    def cells_of_vertex(self, i: int) -> list[tuple[int, int, int]]:
        return list(
            itertools.product(
                self.axis_cells(i, 0), self.axis_cells(i, 1), self.axis_cells(i, 2)
            )
        )


def init_grid_complex(marks: np.ndarray, num_surfaces: int, eps: float = 1e-4) -> ComplexState:
    """Lattice of all mark triples with axis-aligned neighbour edges."""
    state = ComplexState(marks, num_surfaces)
    m = len(marks)
    gx, gy, gz = np.meshgrid(marks, marks, marks, indexing="ij")
    pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    state.append_points(pts, eps)
    state.lattice_index = np.arange(m**3, dtype=np.int64).reshape(m, m, m)

    def vid(i, j, k):
        return (i * m + j) * m + k

    edges = []
    for i in range(m):
        for j in range(m):
            for k in range(m):
                if i + 1 < m:
                    edges.append((vid(i, j, k), vid(i + 1, j, k)))
                if j + 1 < m:
                    edges.append((vid(i, j, k), vid(i, j + 1, k)))
                if k + 1 < m:
                    edges.append((vid(i, j, k), vid(i, j, k + 1)))
    state.edges = np.asarray(sorted(edges), dtype=np.int64)
    return state


def _ternary(values: np.ndarray, eps: float) -> np.ndarray:
    out = np.zeros(values.shape, dtype=np.int8)
    out[values > eps] = 1
    out[values < -eps] = -1
    return out


def _segment_root(net: SdfNetwork, p0, p1, layer, neuron, masks, hint) -> float:
    """Root of the masked field restricted to the straight segment p0..p1.

    The restriction is the cubic Bezier of the box corner values along the
    diagonal; for axis-aligned segments it collapses to the linear case.
    """
    diag = p1 - p0
    corners = p0 + CORNER_OFFSETS * diag
    vals = net.masked_surface_values(corners, layer, neuron, masks)
    coeffs = bezier_power_coefficients(diagonal_bezier_control_points(vals))
    try:
        roots = solve_quartic_unit_interval(coeffs)
    except DegeneratePolynomialError:
        return hint
    if len(roots) == 0:
        return hint
    return float(roots[np.argmin(np.abs(roots - hint))])


def subdivide_surface(
    state: ComplexState, net: SdfNetwork, layer: int, neuron: int, cfg: ExtractionConfig
) -> np.ndarray:
    """One curved-edge-subdivision pass; returns the new vertex indices."""
    eps = cfg.epsilon
    phi = net.phi(layer, neuron)
    pre_all = net.surface_matrix(state.points)
    d = pre_all[:, phi]
    state.nsign[:, phi] = _ternary(d, eps)

    a = state.edges[:, 0]
    b = state.edges[:, 1]
    crossing = ((d[a] > eps) & (d[b] < -eps)) | ((d[a] < -eps) & (d[b] > eps))
    cross_idx = np.nonzero(crossing)[0]

    new_points: list[np.ndarray] = []
    new_sources: list[int] = []  # edge row per new point
    forced_zero: list[bool] = []

    # prior common neuron zeros per crossing edge decide the split machinery
    prior = state.nsign[:, :phi]
    for row in cross_idx:
        i, j = int(a[row]), int(b[row])
        p0, p1 = state.points[i], state.points[j]
        d0, d1 = float(d[i]), float(d[j])
        w = thales_weight(d0, d1)
        chord = p0 + w * (p1 - p0)
        shared_marks = int(
            np.sum((state.grid_mark[i] >= 0) & (state.grid_mark[i] == state.grid_mark[j]))
        )
        common = np.nonzero((prior[i] == 0) & (prior[j] == 0))[0]
        if shared_marks >= 2 and len(common) == 0:
            # straight lattice edge: the restriction is affine, Thales is exact
            state.stats["straight_splits"] += 1
            new_points.append(chord)
            new_sources.append(row)
            forced_zero.append(False)
            continue
        state.stats["curved_splits"] += 1
        masks = net.masks_from_rows(pre_all[i], pre_all[j], eps)
        if len(common) == 0:
            t = _segment_root(net, p0, p1, layer, neuron, masks, w)
            new_points.append(p0 + t * (p1 - p0))
            new_sources.append(row)
            forced_zero.append(False)
            continue
        diag = p1 - p0
        box = p0 + CORNER_OFFSETS * diag
        box_feats = hashgrid.encode(box, net.spec, net.tables)
        q_vals = net.masked_values_from_features(box_feats, layer, neuron, masks)
        hint_local = np.full(3, w)
        result = None
        for pphi in list(common[::-1])[:2]:
            pl, pn = net.surface_of(int(pphi))
            p_vals = net.masked_values_from_features(box_feats, pl, pn, masks)
            corners = EdgeCorners(p_vals, q_vals, p0, diag)
            res = intersect_edge(corners, hint=hint_local, tol_real=cfg.root_tol)
            if res.status == "ok":
                result = res
                break
        if result is not None:
            new_points.append(result.point)
            new_sources.append(row)
            forced_zero.append(False)
        else:
            state.stats["fallback_splits"] += 1
            new_points.append(chord)
            new_sources.append(row)
            forced_zero.append(True)
    state.processed = phi + 1
    if not new_points:
        return np.arange(0)

    pts = np.asarray(new_points)
    if np.any(~np.isfinite(pts)):
        raise ExtractionError("non-finite split vertex")

    # merge duplicates (against existing vertices and within the batch)
    from scipy.spatial import cKDTree

    tree_old = cKDTree(state.points)
    dist, nearest = tree_old.query(pts, k=1)
    assign = np.full(len(pts), -1, dtype=np.int64)
    fresh_rows = []
    for r in range(len(pts)):
        if dist[r] <= cfg.merge_tol:
            assign[r] = nearest[r]
            state.stats["merged_vertices"] += 1
    fresh_mask = assign < 0
    fresh_pts = pts[fresh_mask]
    fresh_map = np.nonzero(fresh_mask)[0]
    if len(fresh_pts):
        tree_new = cKDTree(fresh_pts)
        pairs = sorted(tree_new.query_pairs(cfg.merge_tol))
        canon = np.arange(len(fresh_pts))
        for r, s in pairs:
            canon[s] = min(canon[s], canon[r])
        for r in range(len(fresh_pts)):
            canon[r] = canon[canon[r]]
        keep_rows = np.nonzero(canon == np.arange(len(fresh_pts)))[0]
        new_idx = state.append_points(fresh_pts[keep_rows], eps)
        lookup = {int(k): int(new_idx[t]) for t, k in enumerate(keep_rows)}
        for r in range(len(fresh_pts)):
            assign[fresh_map[r]] = lookup[int(canon[r])]
        state.stats["merged_vertices"] += len(fresh_pts) - len(keep_rows)
        # signs for genuinely new vertices
        fresh_global = new_idx
        sm = net.sign_matrix(state.points[fresh_global], phi, eps)
        state.nsign[fresh_global, : phi + 1] = sm
    else:
        fresh_global = np.arange(0)

    # current surface entry is zero for every split vertex by construction
    state.nsign[assign, phi] = 0

    # split the edges
    extra_edges = []
    for r, row in enumerate(new_sources):
        n = int(assign[r])
        i, j = int(state.edges[row, 0]), int(state.edges[row, 1])
        if n == i or n == j:
            continue
        state.edges[row] = (min(i, n), max(i, n))
        extra_edges.append((min(n, j), max(n, j)))
    if extra_edges:
        state.edges = np.vstack([state.edges, np.asarray(extra_edges, dtype=np.int64)])

    touched = np.unique(assign)
    polygon_edges = find_polygon_edges(state, touched, phi)
    if len(polygon_edges):
        state.edges = np.vstack([state.edges, polygon_edges])
    return touched


def find_polygon_edges(state: ComplexState, new_vertices: np.ndarray, phi: int) -> np.ndarray:
    """Connect vertices on the current surface that share one more zero and a
    region (zeros are wildcards for region matching).

    Vertices sharing a second zero all ride one intersection curve of the
    current surface; linking consecutive vertices along that curve (instead
    of every pair) keeps edges from skipping over region boundaries.
    """
    onsurf = np.nonzero(state.nsign[:, phi] == 0)[0]
    candidates = np.unique(np.concatenate([new_vertices, onsurf]))
    groups: dict[tuple, list[int]] = {}
    for v in candidates:
        v = int(v)
        zeros: list[tuple] = [
            ("g", ax, int(state.grid_mark[v, ax]))
            for ax in range(3)
            if state.grid_mark[v, ax] >= 0
        ]
        zeros.extend(("n", p) for p in range(phi) if state.nsign[v, p] == 0)
        for z in zeros:
            for cell in state.cells_of_vertex(v):
                groups.setdefault((z, cell), []).append(v)
    existing = {(int(x), int(y)) for x, y in state.edges}
    prior = state.nsign[:, :phi]
    out = set()
    for key in sorted(groups):
        members = sorted(set(groups[key]))
        if len(members) < 2:
            continue
        pts = state.points[members]
        axis = int(np.argmax(np.ptp(pts, axis=0)))
        order = sorted(range(len(members)), key=lambda i: (pts[i, axis], members[i]))
        for s in range(len(order) - 1):
            u, v = members[order[s]], members[order[s + 1]]
            pair = (min(u, v), max(u, v))
            if pair in existing or pair in out:
                continue
            su, sv = prior[u], prior[v]
            if np.any(su * sv == -1):
                continue  # separated by a processed surface
            out.add(pair)
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.asarray(sorted(out), dtype=np.int64)


def subdivide_linear(state: ComplexState, d: np.ndarray, phi: int, cfg: ExtractionConfig) -> np.ndarray:
    """Split every edge whose endpoint values straddle zero at the exact
    linear (Thales) crossing of an affine field; record the new zeros."""
    eps = cfg.epsilon
    d = np.asarray(d, dtype=np.float64)
    state.nsign[:, phi] = _ternary(d, eps)
    a, b = state.edges[:, 0], state.edges[:, 1]
    crossing = ((d[a] > eps) & (d[b] < -eps)) | ((d[a] < -eps) & (d[b] > eps))
    rows = np.nonzero(crossing)[0]
    if not len(rows):
        state.processed = max(state.processed, phi + 1)
        return np.arange(0)
    w = thales_weight_vec(d[a[rows]], d[b[rows]])
    pts = state.points[a[rows]] + w[:, None] * (state.points[b[rows]] - state.points[a[rows]])
    new_idx = state.append_points(pts, eps)
    state.nsign[new_idx, phi] = 0
    extra = []
    for r, row in zip(new_idx, rows):
        i, j = int(state.edges[row, 0]), int(state.edges[row, 1])
        state.edges[row] = (min(i, int(r)), max(i, int(r)))
        extra.append((min(int(r), j), max(int(r), j)))
    state.edges = np.vstack([state.edges, np.asarray(extra, dtype=np.int64)])
    state.processed = max(state.processed, phi + 1)
    return new_idx


def thales_weight_vec(d0: np.ndarray, d1: np.ndarray) -> np.ndarray:
    return np.abs(d0) / np.abs(d0 - d1)


# ---------------------------------------------------------------------------
# skeleton, faces, mesh


@dataclass
class ExtractedMesh:
    vertices: np.ndarray
    edges: np.ndarray
    faces: list[list[int]]
    face_normals: np.ndarray
    stats: dict

    @property
    def empty(self) -> bool:
        return len(self.vertices) == 0 or len(self.faces) == 0


def skeletonize(state: ComplexState, net: SdfNetwork, eps: float):
    """Vertices with |output| <= eps and the edges joining two of them."""
    vals = np.asarray(net.forward(state.points))
    keep = np.abs(vals) <= eps
    keep_idx = np.nonzero(keep)[0]
    remap = -np.ones(state.num_points, dtype=np.int64)
    remap[keep_idx] = np.arange(len(keep_idx))
    e = state.edges
    mask = keep[e[:, 0]] & keep[e[:, 1]]
    kept_edges = e[mask]
    return keep_idx, kept_edges, remap


def _definite_interval(state: ComplexState, x: float) -> int:
    return int(
        np.clip(np.searchsorted(state.marks, x, side="right") - 1, 0, len(state.marks) - 2)
    )


def assemble_faces(
    state: ComplexState,
    net: SdfNetwork,
    keep_idx: np.ndarray,
    kept_edges: np.ndarray,
    cfg: ExtractionConfig,
):
    """Group skeleton edges by region and wind each group's cycle CCW
    against the gradient normal."""
    phi_last = net.num_surfaces - 1
    groups: dict[tuple, list[tuple[int, int]]] = {}
    if len(kept_edges):
        mids = 0.5 * (state.points[kept_edges[:, 0]] + state.points[kept_edges[:, 1]])
        mid_signs = None
        for row in range(len(kept_edges)):
            u, v = int(kept_edges[row, 0]), int(kept_edges[row, 1])
            axis_opts = []
            for ax in range(3):
                mu, mv = int(state.grid_mark[u, ax]), int(state.grid_mark[v, ax])
                if mu >= 0 and mu == mv:
                    opts = [c for c in (mu - 1, mu) if 0 <= c <= len(state.marks) - 2]
                else:
                    opts = [_definite_interval(state, float(mids[row, ax]))]
                axis_opts.append(opts)
            neuron_opts = []
            for p in range(phi_last):
                su, sv = int(state.nsign[u, p]), int(state.nsign[v, p])
                if su == 0 and sv == 0:
                    neuron_opts.append((1, -1))
                elif su == 0 or sv == 0:
                    neuron_opts.append((su + sv,))
                elif su == sv:
                    neuron_opts.append((su,))
                else:  # conflicting; resolve from the midpoint value
                    if mid_signs is None:
                        mid_signs = net.surface_matrix(mids)
                    neuron_opts.append((1 if mid_signs[row, p] > 0 else -1,))
            for combo in itertools.product(*axis_opts, *neuron_opts):
                groups.setdefault(combo, []).append((u, v))

    faces: list[list[int]] = []
    normals: list[np.ndarray] = []
    for key in sorted(groups):
        edge_list = groups[key]
        if len(edge_list) < 3:
            state.stats["dropped_face_groups"] += 1
            continue
        cycle = _edges_to_cycle(edge_list)
        if cycle is None:
            state.stats["open_face_groups"] += 1
            verts = sorted({w for e in edge_list for w in e})
            cycle = _angular_order(state.points[verts], net)
            cycle = [verts[c] for c in cycle]
        pts = state.points[cycle]
        normal = np.asarray(net.gradient(pts.mean(axis=0)), dtype=np.float64)
        nn = np.linalg.norm(normal)
        newell = _newell_normal(pts)
        if nn > 1e-12:
            normal = normal / nn
        else:
            normal = newell
        if np.dot(newell, normal) < 0:
            cycle = cycle[::-1]
        faces.append([int(c) for c in cycle])
        normals.append(normal)
    return faces, normals


def _edges_to_cycle(edge_list) -> list[int] | None:
    adj: dict[int, list[int]] = {}
    for u, v in edge_list:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    if any(len(n) != 2 for n in adj.values()) or len(adj) != len(edge_list):
        return None
    start = min(adj)
    cycle = [start]
    prev, cur = None, start
    for _ in range(len(edge_list)):
        nxt = sorted(n for n in adj[cur] if n != prev)
        if not nxt:
            return None
        step = nxt[0]
        if step == start and len(cycle) == len(adj):
            return cycle
        cycle.append(step)
        prev, cur = cur, step
    return cycle if len(cycle) == len(adj) else None


def _angular_order(pts: np.ndarray, net: SdfNetwork) -> list[int]:
    """Sort polygon vertices by angle around their mean against the
    gradient normal (deterministic fallback for non-cycle groups)."""
    mu = pts.mean(axis=0)
    n = np.asarray(net.gradient(mu), dtype=np.float64)
    if np.linalg.norm(n) < 1e-12:
        n = _newell_normal(pts)
    n = n / max(np.linalg.norm(n), 1e-300)
    rel = pts - mu
    rel = rel / np.maximum(np.linalg.norm(rel, axis=1, keepdims=True), 1e-300)
    v0 = rel[0]
    c = rel @ v0
    dvec = np.cross(rel, v0) @ n
    theta = np.where(dvec >= 0, c, 2.0 - c)
    return list(np.argsort(theta, kind="stable"))


def _newell_normal(pts: np.ndarray) -> np.ndarray:
    nrm = np.zeros(3)
    for i in range(len(pts)):
        p, q = pts[i], pts[(i + 1) % len(pts)]
        nrm[0] += (p[1] - q[1]) * (p[2] + q[2])
        nrm[1] += (p[2] - q[2]) * (p[0] + q[0])
        nrm[2] += (p[0] - q[0]) * (p[1] + q[1])
    norm = np.linalg.norm(nrm)
    return nrm / norm if norm > 0 else np.array([0.0, 0.0, 1.0])


def _wall_faces(state: ComplexState, net: SdfNetwork, keep_idx, cfg: ExtractionConfig):
    """Polygons of the negative region on each domain wall."""
    eps = cfg.epsilon
    marks = state.marks
    m = len(marks)
    lat = state.lattice_index
    keep_set = set(int(k) for k in keep_idx)
    vals = np.asarray(net.forward(state.points))
    # skeleton vertices per wall
    faces = []
    normals = []
    extra_vertices: list[int] = []
    cyc = {0: (1, 2), 1: (2, 0), 2: (0, 1)}
    for ax in range(3):
        for side in (0, 1):
            wall_mark = 0 if side == 0 else m - 1
            u_ax, v_ax = cyc[ax]
            outward = np.zeros(3)
            outward[ax] = 1.0 if side == 1 else -1.0
            onwall = [
                int(i)
                for i in keep_idx
                if state.grid_mark[int(i), ax] == wall_mark
            ]
            for iu in range(m - 1):
                for iv in range(m - 1):
                    poly_sets = _wall_cell_polygons(
                        state, net, vals, lat, ax, wall_mark, u_ax, v_ax, iu, iv,
                        onwall, eps,
                    )
                    for poly in poly_sets:
                        if len(poly) < 3:
                            continue
                        pts = state.points[poly]
                        if np.dot(_newell_normal(pts), outward) < 0:
                            poly = poly[::-1]
                        faces.append([int(p) for p in poly])
                        normals.append(outward.copy())
                        extra_vertices.extend(int(p) for p in poly if int(p) not in keep_set)
    return faces, normals, sorted(set(extra_vertices))


def _wall_cell_polygons(
    state, net, vals, lat, ax, wall_mark, u_ax, v_ax, iu, iv, onwall, eps
):
    """Negative-region polygons of one lattice cell face on a wall."""
    marks = state.marks

    def corner_vid(du, dv):
        coord = [0, 0, 0]
        coord[ax] = wall_mark
        coord[u_ax] = iu + du
        coord[v_ax] = iv + dv
        return int(lat[coord[0], coord[1], coord[2]])

    ring = [corner_vid(0, 0), corner_vid(1, 0), corner_vid(1, 1), corner_vid(0, 1)]
    sides = []
    for s in range(4):
        a, b = ring[s], ring[(s + 1) % 4]
        pa, pb = state.points[a], state.points[b]
        run_ax = u_ax if abs(pb[u_ax] - pa[u_ax]) > abs(pb[v_ax] - pa[v_ax]) else v_ax
        inner = []
        for w in onwall:
            pw = state.points[w]
            fixed_ax = v_ax if run_ax == u_ax else u_ax
            if abs(pw[fixed_ax] - pa[fixed_ax]) > eps:
                continue
            lo, hi = min(pa[run_ax], pb[run_ax]), max(pa[run_ax], pb[run_ax])
            if lo + eps < pw[run_ax] < hi - eps:
                inner.append(w)
        inner.sort(key=lambda w: (state.points[w][run_ax] - pa[run_ax]) / (pb[run_ax] - pa[run_ax]))
        sides.append(inner)
    perimeter = []
    kinds = []  # "corner" | "cross"
    for s in range(4):
        perimeter.append(ring[s])
        kinds.append("corner")
        for w in sides[s]:
            perimeter.append(w)
            kinds.append("cross")
    crossings = [i for i, k in enumerate(kinds) if k == "cross"]
    neg = {i: vals[perimeter[i]] < -eps for i, k in enumerate(kinds) if k == "corner"}
    if not crossings:
        if all(neg.values()):
            return [perimeter]
        return []
    if len(crossings) % 2 == 1:
        state.stats["dropped_face_groups"] += 1
        return []
    n = len(perimeter)
    arcs = []
    for t in range(len(crossings)):
        i0, i1 = crossings[t], crossings[(t + 1) % len(crossings)]
        arc = [i0]
        j = (i0 + 1) % n
        while j != i1:
            arc.append(j)
            j = (j + 1) % n
        arc.append(i1)
        interior = [p for p in arc[1:-1] if kinds[p] == "corner"]
        is_neg = all(neg[p] for p in interior) if interior else None
        arcs.append((arc, is_neg))
    # resolve arcs without interior corners from the field midway
    resolved = []
    for arc, is_neg in arcs:
        if is_neg is None:
            a, b = perimeter[arc[0]], perimeter[arc[-1]]
            mid = 0.5 * (state.points[a] + state.points[b])
            is_neg = bool(net.forward(mid) < 0)
        resolved.append((arc, is_neg))
    neg_arcs = [arc for arc, is_neg in resolved if is_neg]
    if not neg_arcs:
        return []
    if len(neg_arcs) == 1:
        return [[perimeter[i] for i in neg_arcs[0]]]
    # two negative arcs: join or separate based on the centre sign
    centre = np.zeros(3)
    centre[ax] = marks[wall_mark]
    centre[u_ax] = 0.5 * (marks[iu] + marks[iu + 1])
    centre[v_ax] = 0.5 * (marks[iv] + marks[iv + 1])
    if net.forward(centre) < 0 and len(neg_arcs) == 2:
        return [[perimeter[i] for i in neg_arcs[0]] + [perimeter[i] for i in neg_arcs[1]]]
    return [[perimeter[i] for i in arc] for arc in neg_arcs]


def extract(net: SdfNetwork, cfg: ExtractionConfig | None = None) -> ExtractedMesh:
    """Full pipeline: grid init, per-surface subdivision, skeleton, faces."""
    cfg = cfg or ExtractionConfig()
    marks = hashgrid.grid_marks(net.spec)
    state = init_grid_complex(marks, net.num_surfaces, cfg.epsilon)
    for layer, neuron in net.surfaces():
        if cfg.prune:
            _prune_edges(state, net, net.phi(layer, neuron), cfg.epsilon)
        subdivide_surface(state, net, layer, neuron, cfg)
    keep_idx, kept_edges, remap = skeletonize(state, net, cfg.epsilon)
    faces, normals = assemble_faces(state, net, keep_idx, kept_edges, cfg)
    used: list[int] = list(keep_idx)
    if cfg.boundary_faces:
        wfaces, wnormals, extra = _wall_faces(state, net, keep_idx, cfg)
        faces = faces + wfaces
        normals = normals + wnormals
        for v in extra:
            remap[v] = len(used)
            used.append(v)
    vertices = state.points[np.asarray(used, dtype=np.int64)] if used else np.zeros((0, 3))
    out_faces = [[int(remap[v]) for v in f] for f in faces]
    out_edges = (
        np.stack([remap[kept_edges[:, 0]], remap[kept_edges[:, 1]]], axis=1)
        if len(kept_edges)
        else np.zeros((0, 2), dtype=np.int64)
    )
    fn = np.asarray(normals) if normals else np.zeros((0, 3))
    return ExtractedMesh(vertices, out_edges, out_faces, fn, dict(state.stats))


def _prune_edges(state: ComplexState, net: SdfNetwork, phi: int, eps: float) -> None:
    """Drop edges that no future surface can split and that cannot reach the
    skeleton (both endpoints strictly off the zero set with equal signs)."""
    if not len(state.edges):
        return
    future = net.sign_matrix(state.points, net.num_surfaces - 1, eps)[:, phi:]
    a, b = state.edges[:, 0], state.edges[:, 1]
    same = np.all((future[a] == future[b]) & (future[a] != 0), axis=1)
    state.stats["pruned_edges"] += int(np.sum(same))
    state.edges = state.edges[~same]

"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import time

import numpy as np
import numpy.polynomial.polynomial as npoly
import pytest

from tricomplex import hashgrid, metrics
from tricomplex.extractor import (
    EdgeCorners,
    ExtractionConfig,
    extract,
    init_grid_complex,
    intersect_edge,
    quartic_coefficients,
    skeletonize,
    subdivide_surface,
    _PLANES,
    _pair_basis,
)
from tricomplex.mesh import (
    euler_characteristic,
    export_obj,
    face_edge_counts,
    triangulate_faces,
    winding_normals,
)
from tricomplex.network import SdfNetwork
from tricomplex.trilinear import (
    CORNER_OFFSETS,
    bezier_eval,
    diagonal_bezier_control_points,
    solve_quartic_unit_interval,
    trilinear,
)
from tricomplex.weightfile import random_network, sphere_identity_network

EPS = 1e-4


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def sphere_setup():
    spec, tables, weights = sphere_identity_network(intervals=16)
    net = SdfNetwork(spec, tables, weights)
    cfg = ExtractionConfig(epsilon=EPS, boundary_faces=False)
    marks = hashgrid.grid_marks(spec)
    state = init_grid_complex(marks, net.num_surfaces, cfg.epsilon)
    for layer, neuron in net.surfaces():
        subdivide_surface(state, net, layer, neuron, cfg)
    keep_idx, kept_edges, _ = skeletonize(state, net, cfg.epsilon)
    mesh = extract(net, cfg)
    return net, state, keep_idx, kept_edges, mesh


def test_criterion_1_nested_interpolation():
    t0 = time.monotonic()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        h = rng.normal(size=8)
        w = rng.random(3)
        a = w * rng.random(3)
        b = (1.0 - w) * rng.random(3)
        lo, hi = w - a, w + b
        nested = np.array(
            [trilinear(lo + CORNER_OFFSETS[i] * (hi - lo), h) for i in range(8)]
        )
        w_rel = np.where(hi > lo, (w - lo) / np.maximum(hi - lo, 1e-300), 0.0)
        worst = max(worst, abs(trilinear(w_rel, nested) - trilinear(w, h)))
    dt = time.monotonic() - t0
    report(
        "criterion 1 (nested interpolation)",
        worst <= 1e-10 and dt < 1.0,
        f"max err {worst:.2e} (<=1e-10), runtime {dt:.2f}s (<1s)",
    )


def test_criterion_2_bezier_diagonal():
    rng = np.random.default_rng(102)
    ts = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    worst = 0.0
    for _ in range(1000):
        h = rng.normal(size=8)
        cp = diagonal_bezier_control_points(h)
        for t in ts:
            worst = max(worst, abs(bezier_eval(cp, t) - trilinear((t, t, t), h)))
    report("criterion 2 (Bezier diagonal)", worst <= 1e-12, f"max err {worst:.2e} (<=1e-12)")


def test_criterion_3_quartic_solver():
    rng = np.random.default_rng(103)
    worst_rec, worst_res = 0.0, 0.0
    for _ in range(1000):
        true = rng.random(4)
        coeffs = npoly.polyfromroots(true).real
        got = solve_quartic_unit_interval(coeffs)
        for r in true:
            worst_rec = max(worst_rec, np.min(np.abs(got - r)) if len(got) else np.inf)
        if len(got):
            worst_res = max(worst_res, np.max(np.abs(npoly.polyval(got, coeffs))))
    report(
        "criterion 3 (quartic solver)",
        worst_rec <= 1e-8 and worst_res <= 1e-9,
        f"recovery {worst_rec:.2e} (<=1e-8), residual {worst_res:.2e} (<=1e-9)",
    )


def test_criterion_4_intersection_vs_brute_force():
    t0 = time.monotonic()
    rng = np.random.default_rng(104)
    a_idx, b_idx, _ = _PLANES["xz"]
    n = 2000
    xs = np.linspace(0.0, 1.0, n)
    basis = np.stack([(1 - xs) ** 2, xs * (1 - xs), (1 - xs) * xs, xs**2])
    ys = xs[:, None]
    gx, gy = np.meshgrid(xs, xs)  # gy rows: y, gx cols: x
    corner_near = (gx**2 + gy**2 < 0.04**2) | ((gx - 1) ** 2 + (gy - 1) ** 2 < 0.04**2)

    worst_curved = 0.0
    done = 0
    while done < 200:
        p = rng.normal(size=8)
        q = rng.normal(size=8)
        p[0] = p[7] = q[0] = q[7] = 0.0
        coeffs = quartic_coefficients(p, q, "xz")
        if np.max(np.abs(coeffs)) < 1e-9:
            continue
        roots = solve_quartic_unit_interval(coeffs)
        pa, pb = p[a_idx], p[b_idx]
        qa, qb = q[a_idx], q[b_idx]
        dbasis = np.stack([-2 * (1 - xs), 1 - 2 * xs, 1 - 2 * xs, 2 * xs])
        valid = []
        for u in roots:
            if not 0.08 <= u <= 0.92:
                continue
            x = _pair_basis(float(u))
            den = x @ (pa - pb)
            if abs(den) < 0.2:
                continue
            v = (x @ pa) / den
            if not 0.08 <= v <= 0.92:
                continue
            # transversality: the two restricted zero curves must cross at a
            # healthy angle for the energy minimum to localise
            dx = np.array([-2 * (1 - u), 1 - 2 * u, 1 - 2 * u, 2 * u])
            gp = np.array([(1 - v) * (pa @ dx) + v * (pb @ dx), pb @ x - pa @ x])
            gq = np.array([(1 - v) * (qa @ dx) + v * (qb @ dx), qb @ x - qa @ x])
            np_, nq_ = np.linalg.norm(gp), np.linalg.norm(gq)
            if np_ < 0.5 or nq_ < 0.5:
                continue
            sin_angle = abs(gp[0] * gq[1] - gp[1] * gq[0]) / (np_ * nq_)
            if sin_angle < 0.6:
                continue  # the grid minimiser only localises transversal crossings
            valid.append((float(u), float(v)))
        if len(valid) != 1:
            continue
        # brute-force 2000 x 2000 energy minimiser on the x=z plane
        fp = (1 - ys) * (pa @ basis) + ys * (pb @ basis)
        fq = (1 - ys) * (qa @ basis) + ys * (qb @ basis)
        energy = np.abs(fp) + np.abs(fq)
        energy[corner_near] = np.inf
        iy, ix = np.unravel_index(np.argmin(energy), energy.shape)
        if energy[iy, ix] > 5e-3:
            continue
        oracle = np.array([xs[ix], xs[iy], xs[ix]])
        res = intersect_edge(EdgeCorners(p, q, np.zeros(3), np.ones(3)))
        assert res.status == "ok"
        dist = min(np.linalg.norm(c - oracle) for c in res.candidates)
        worst_curved = max(worst_curved, dist)
        done += 1

    # exact-plane sub-case: prior plane through both corners, affine current
    worst_plane = 0.0
    done_plane = 0
    while done_plane < 50:
        a, b = rng.normal(size=2)
        c = -(a + b)
        if abs(b) < 0.1:
            continue
        a2, b2, c2, d2 = rng.normal(size=4)
        if abs(a2 + b2 + c2) < 0.1:
            continue
        t = -d2 / (a2 + b2 + c2)
        if not 0.05 < t < 0.95:
            continue
        p = np.array([a * o[0] + b * o[1] + c * o[2] for o in CORNER_OFFSETS])
        q = np.array([a2 * o[0] + b2 * o[1] + c2 * o[2] + d2 for o in CORNER_OFFSETS])
        res = intersect_edge(EdgeCorners(p, q, np.zeros(3), np.ones(3)))
        m = np.array([[a + c, b], [a2 + c2, b2]])
        xy = np.linalg.solve(m, np.array([0.0, -d2]))
        expected = np.array([xy[0], xy[1], xy[0]])
        worst_plane = max(worst_plane, float(np.max(np.abs(res.point - expected))))
        done_plane += 1
    dt = time.monotonic() - t0
    report(
        "criterion 4 (intersection vs brute force)",
        worst_curved <= 1e-3 and worst_plane <= 1e-9 and dt < 60.0,
        f"curved {worst_curved:.2e} (<=1e-3), planes {worst_plane:.2e} (<=1e-9), "
        f"runtime {dt:.1f}s (<60s)",
    )


def test_criterion_5_flatness_formula():
    x1, x2 = 0.5, -0.25
    x4 = -(x1 + x2)
    constrained = np.array([0.0, x1, x2, -x4, x4, -x2, -x1, 0.0])
    zero_val = metrics.flatness_terms(constrained)
    ones_val = metrics.flatness_terms(np.ones(8))
    report(
        "criterion 5 (flatness formula)",
        zero_val == 0.0 and ones_val == 2.5,
        f"constrained {zero_val} (==0), all-ones {ones_val} (==2.5)",
    )


def test_criterion_6_skeleton_contract(sphere_setup):
    net, state, keep_idx, _, mesh = sphere_setup
    vals = np.abs(np.asarray(net.forward(mesh.vertices)))
    zero_counts = []
    for i in keep_idx:
        zero_counts.append(
            int(np.sum(state.grid_mark[i] >= 0) + np.sum(state.nsign[i] == 0))
        )
    ok = vals.max() <= EPS and min(zero_counts) >= 3
    report(
        "criterion 6 (skeleton contract)",
        ok,
        f"max |f| {vals.max():.2e} (<=1e-4), min zero count {min(zero_counts)} (>=3)",
    )


def test_criterion_7_geometric_accuracy(sphere_setup):
    net, _, _, _, mesh = sphere_setup
    t0 = time.monotonic()
    v256, t256 = metrics.marching_cubes(net.forward, 256)
    v32, t32 = metrics.marching_cubes(net.forward, 32)
    s_mine = metrics.sample_mesh(mesh.vertices, mesh.faces, 100000, seed=1)
    s_256 = metrics.sample_mesh(v256, t256, 100000, seed=2)
    s_32 = metrics.sample_mesh(v32, t32, 100000, seed=3)
    cd_mine = metrics.chamfer(s_mine, s_256)
    cd_32 = metrics.chamfer(s_32, s_256)
    dt = time.monotonic() - t0
    ok = cd_mine <= cd_32 and len(mesh.vertices) <= 1.5 * len(v32) and dt < 30.0
    report(
        "criterion 7 (geometric accuracy)",
        ok,
        f"CD(ours,MC256) {cd_mine:.3e} <= CD(MC32,MC256) {cd_32:.3e}; "
        f"|V*| {len(mesh.vertices)} <= 1.5x{len(v32)}; runtime {dt:.1f}s (<30s)",
    )


def test_criterion_8_normals(sphere_setup):
    _, _, _, _, mesh = sphere_setup
    wn = winding_normals(mesh.vertices, mesh.faces)
    cents = np.array([mesh.vertices[f].mean(axis=0) for f in mesh.faces])
    radial = cents - 0.5
    radial /= np.linalg.norm(radial, axis=1, keepdims=True)
    ad = metrics.angular_distance(wn, radial)
    outward = np.mean(np.sum(wn * radial, axis=1) > 0)
    report(
        "criterion 8 (normals)",
        ad <= 5.0 and outward >= 0.99,
        f"mean angular {ad:.2f} deg (<=5), outward {outward:.4f} (>=0.99)",
    )


def test_criterion_9_topology(sphere_setup):
    _, _, _, _, mesh = sphere_setup
    tris = triangulate_faces(mesh.faces)
    euler = euler_characteristic(len(mesh.vertices), tris)
    borders = set(face_edge_counts(tris).values())
    report(
        "criterion 9 (topology)",
        euler == 2 and borders == {2},
        f"V-E+F {euler} (==2), edge borders {sorted(borders)} (=={{2}})",
    )


def test_criterion_10_determinism(sphere_setup, tmp_path):
    net, *_ = sphere_setup
    cfg = ExtractionConfig(epsilon=EPS, boundary_faces=False)
    pa, pb = tmp_path / "a.obj", tmp_path / "b.obj"
    export_obj(extract(net, cfg), pa)
    export_obj(extract(net, cfg), pb)
    same = pa.read_bytes() == pb.read_bytes()
    report("criterion 10 (determinism)", same, "two extraction runs byte-identical")


def test_criterion_robustness_random_networks():
    total_curved = 0
    total_fallback = 0
    worst_f = 0.0
    for seed in range(20):
        table_size = 2**14 if seed < 15 else 64  # the last five exercise hashing
        spec, tables, weights = random_network(seed=seed, table_size=table_size)
        net = SdfNetwork(spec, tables, weights)
        mesh = extract(net, ExtractionConfig(epsilon=EPS, boundary_faces=False))
        assert np.all(np.isfinite(mesh.vertices))
        if len(mesh.vertices):
            worst_f = max(worst_f, float(np.max(np.abs(np.asarray(net.forward(mesh.vertices))))))
        total_curved += mesh.stats["curved_splits"]
        total_fallback += mesh.stats["fallback_splits"]
    rate = total_fallback / max(total_curved, 1)
    report(
        "criterion robustness (20 random networks)",
        rate < 0.05 and worst_f <= EPS,
        f"fallback rate {rate:.4f} (<0.05) over {total_curved} curved splits, "
        f"max skeleton |f| {worst_f:.2e} (<=1e-4)",
    )

"""Command-line surface: extraction, marching-cubes baseline, metrics."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import hashgrid, metrics, weightfile
from .extractor import ExtractedMesh, ExtractionConfig, extract
from .mesh import export_obj, load_obj


def _add_weights(p):
    p.add_argument("--weights", required=True, help="PTNW checkpoint path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tricomplex")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="analytic zero-set mesh from a checkpoint")
    _add_weights(p)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--out", required=True)
    p.add_argument("--triangulate", action="store_true")
    p.add_argument("--prune", action="store_true")
    p.add_argument("--boundary-faces", choices=("on", "off"), default="on")

    p = sub.add_parser("mc", help="marching-cubes baseline mesh")
    _add_weights(p)
    p.add_argument("--res", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("marks", help="print the grid marks of a checkpoint")
    _add_weights(p)

    p = sub.add_parser("preset", help="write a deterministic test checkpoint")
    p.add_argument("kind", choices=("sphere", "random"))
    p.add_argument("--out", required=True)
    p.add_argument("--intervals", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)

    ev = sub.add_parser("eval", help="metric reports")
    esub = ev.add_subparsers(dest="metric", required=True)

    p = esub.add_parser("chamfer")
    p.add_argument("mesh_a")
    p.add_argument("mesh_b")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)

    p = esub.add_parser("angular")
    p.add_argument("mesh_a")
    p.add_argument("mesh_b")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)

    p = esub.add_parser("flatness")
    _add_weights(p)
    p.add_argument("--epsilon", type=float, default=1e-4)

    p = esub.add_parser("sdf-error")
    _add_weights(p)
    p.add_argument("--mesh", required=True)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    return ap


def _report_stats(stats: dict) -> None:
    for key in ("fallback_splits", "open_face_groups", "dropped_face_groups"):
        if stats.get(key):
            print(f"warning: {key}={stats[key]}", file=sys.stderr)


def cmd_extract(args) -> int:
    net = weightfile.load_network(args.weights)
    cfg = ExtractionConfig(
        epsilon=args.epsilon,
        prune=args.prune,
        boundary_faces=args.boundary_faces == "on",
    )
    mesh = extract(net, cfg)
    if mesh.empty:
        print("empty skeleton", file=sys.stderr)
    export_obj(mesh, args.out, triangulate=args.triangulate)
    _report_stats(mesh.stats)
    print(f"vertices={len(mesh.vertices)}")
    print(f"faces={len(mesh.faces)}")
    return 0


def cmd_mc(args) -> int:
    net = weightfile.load_network(args.weights)
    verts, tris = metrics.marching_cubes(net.forward, args.res)
    mesh = ExtractedMesh(verts, np.zeros((0, 2), dtype=np.int64), [list(t) for t in tris], np.zeros((0, 3)), {})
    if mesh.empty:
        print("empty mesh", file=sys.stderr)
    export_obj(mesh, args.out)
    print(f"vertices={len(verts)}")
    print(f"faces={len(tris)}")
    return 0


def cmd_marks(args) -> int:
    spec, _, _ = weightfile.load_weights(args.weights)
    for v in hashgrid.grid_marks(spec):
        print("%g" % v)
    return 0


def cmd_preset(args) -> int:
    if args.kind == "sphere":
        spec, tables, weights = weightfile.sphere_identity_network(intervals=args.intervals)
    else:
        spec, tables, weights = weightfile.random_network(seed=args.seed)
    weightfile.save_weights(args.out, spec, tables, weights)
    print(f"wrote={args.out}")
    return 0


def _mesh_samples(path, n, seed, with_normals=False):
    verts, faces = load_obj(path)
    if len(verts) == 0 or len(faces) == 0:
        raise ValueError(f"{path}: mesh has no faces to sample")
    return metrics.sample_mesh(verts, faces, n, seed, with_normals=with_normals)


def cmd_eval(args) -> int:
    if args.metric == "chamfer":
        sa = _mesh_samples(args.mesh_a, args.samples, args.seed)
        sb = _mesh_samples(args.mesh_b, args.samples, args.seed)
        cd = metrics.chamfer(sa, sb)
        nverts = len(load_obj(args.mesh_a)[0])
        print("cd=%.9g" % cd)
        ce = metrics.chamfer_efficiency(nverts, cd)
        print("ce=%.9g" % ce)
        return 0
    if args.metric == "angular":
        pa, na = _mesh_samples(args.mesh_a, args.samples, args.seed, with_normals=True)
        pb, nb = _mesh_samples(args.mesh_b, args.samples, args.seed, with_normals=True)
        from scipy.spatial import cKDTree

        _, idx = cKDTree(pb).query(pa, k=1)
        paired = nb[idx]
        flip = np.sum(na * paired, axis=1) < 0
        ad = metrics.angular_distance(na, paired)
        print("ad_deg=%.9g" % ad)
        print("flipped_fraction=%.9g" % (np.mean(flip)))
        return 0
    if args.metric == "flatness":
        net = weightfile.load_network(args.weights)
        from .extractor import skeletonize
        from . import extractor

        cfg = ExtractionConfig(epsilon=args.epsilon)
        marks = hashgrid.grid_marks(net.spec)
        state = extractor.init_grid_complex(marks, net.num_surfaces, cfg.epsilon)
        for layer, neuron in net.surfaces():
            extractor.subdivide_surface(state, net, layer, neuron, cfg)
        keep_idx, kept_edges, _ = skeletonize(state, net, cfg.epsilon)
        pairs = [(state.points[int(a)], state.points[int(b)]) for a, b in kept_edges]
        if not pairs:
            print("flatness=nan", file=sys.stderr)
            return 1
        val = metrics.flatness_error(net, pairs, eps=args.epsilon)
        print("flatness=%.9g" % val)
        print(f"edges={len(pairs)}")
        return 0
    if args.metric == "sdf-error":
        net = weightfile.load_network(args.weights)
        pts = _mesh_samples(args.mesh, args.samples, args.seed)
        print("mse_sdf=%.9g" % metrics.surface_sdf_error(net, pts))
        return 0
    raise AssertionError("unreachable")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            return cmd_extract(args)
        if args.command == "mc":
            return cmd_mc(args)
        if args.command == "marks":
            return cmd_marks(args)
        if args.command == "preset":
            return cmd_preset(args)
        if args.command == "eval":
            return cmd_eval(args)
    except Exception as exc:  # runtime failures exit 1, usage errors exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())

"""Polygon mesh helpers: OBJ read/write, triangulation, incidence counts."""

from __future__ import annotations

import numpy as np

from .extractor import ExtractedMesh


def triangulate_faces(faces: list[list[int]]) -> list[list[int]]:
    """Fan triangulation preserving winding order."""
    tris = []
    for f in faces:
        for k in range(1, len(f) - 1):
            tris.append([f[0], f[k], f[k + 1]])
    return tris


def face_edge_counts(faces: list[list[int]]) -> dict[tuple[int, int], int]:
    """How many faces border each undirected edge of the face set."""
    counts: dict[tuple[int, int], int] = {}
    for f in faces:
        for k in range(len(f)):
            a, b = f[k], f[(k + 1) % len(f)]
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    return counts


def euler_characteristic(nvertices: int, faces: list[list[int]]) -> int:
    edges = face_edge_counts(faces)
    return nvertices - len(edges) + len(faces)


def winding_normals(vertices: np.ndarray, faces: list[list[int]]) -> np.ndarray:
    """Unit face normals implied by the vertex order (right-hand rule)."""
    out = np.zeros((len(faces), 3))
    for i, f in enumerate(faces):
        pts = vertices[f]
        n = np.zeros(3)
        for k in range(len(pts)):
            p, q = pts[k], pts[(k + 1) % len(pts)]
            n[0] += (p[1] - q[1]) * (p[2] + q[2])
            n[1] += (p[2] - q[2]) * (p[0] + q[0])
            n[2] += (p[0] - q[0]) * (p[1] + q[1])
        norm = np.linalg.norm(n)
        out[i] = n / norm if norm > 0 else n
    return out


def export_obj(
    mesh: ExtractedMesh,
    path,
    triangulate: bool = False,
    write_normals: bool = False,
) -> None:
    """Write vertices and faces; winding encodes the normal direction."""
    faces = triangulate_faces(mesh.faces) if triangulate else mesh.faces
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# tricomplex mesh\n")
        if mesh.empty and not faces:
            fh.write("# empty mesh\n")
        for v in mesh.vertices:
            fh.write("v %.9g %.9g %.9g\n" % (v[0], v[1], v[2]))
        if write_normals:
            for n in mesh.face_normals:
                fh.write("vn %.9g %.9g %.9g\n" % (n[0], n[1], n[2]))
        for fi, f in enumerate(faces):
            ids = " ".join(str(i + 1) for i in f)
            fh.write("f %s\n" % ids)


def load_obj(path) -> tuple[np.ndarray, list[list[int]]]:
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.strip().split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                ids = [int(tok.split("/")[0]) - 1 for tok in parts[1:]]
                faces.append(ids)
    v = np.asarray(vertices, dtype=np.float64) if vertices else np.zeros((0, 3))
    return v, faces

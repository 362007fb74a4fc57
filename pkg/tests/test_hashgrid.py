import json
import pathlib

import numpy as np
import pytest

from tricomplex.hashgrid import (
    CorruptWeightsError,
    FeatureTables,
    HashGridSpec,
    cell_of,
    corner_hash,
    encode,
    encode_via_cells,
    grid_marks,
)
from tricomplex.trilinear import trilinear

SHARED = pathlib.Path(__file__).resolve().parents[1] / "shared" / "hash_test_vectors.json"


def random_tables(spec, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    dense = [spec.level_is_dense(l) for l in range(spec.levels)]
    return FeatureTables(
        spec,
        [
            rng.normal(0, scale, size=(spec.level_entries(l, dense[l]), spec.features_per_level))
            for l in range(spec.levels)
        ],
        dense,
    )


class TestGridMarks:
    def test_single_level_two_cells(self):
        marks = grid_marks(HashGridSpec(1, 1, 2, 2, 8))
        assert np.allclose(marks, [0.0, 0.5, 1.0], atol=1e-15)

    def test_two_levels(self):
        marks = grid_marks(HashGridSpec(2, 1, 2, 4, 8))
        assert np.allclose(marks, [0.0, 1 / 6, 0.5, 5 / 6, 1.0], atol=1e-12)

    def test_endpoints_and_monotone(self):
        for spec in (HashGridSpec(4, 2, 2, 32, 2**14), HashGridSpec(3, 1, 3, 11, 64)):
            marks = grid_marks(spec)
            assert marks[0] == 0.0 and marks[-1] == 1.0
            assert np.all(np.diff(marks) > 1e-12)


class TestCornerHash:
    def test_zero(self):
        assert corner_hash(np.array([0, 0, 0]), 2**14) == 0

    def test_unit_x(self):
        assert corner_hash(np.array([1, 0, 0]), 2**14) == 1

    def test_all_ones(self):
        expected = (1 ^ (1 * 2654435761) ^ (1 * 805459861)) % (2**14)
        assert corner_hash(np.array([1, 1, 1]), 2**14) == expected

    def test_shared_vectors(self):
        data = json.loads(SHARED.read_text())
        for case in data["cases"]:
            got = int(corner_hash(np.array(case["coords"]), case["table_size"]))
            assert got == case["index"], case


class TestEncode:
    def test_lattice_corner_hits_table_entry(self):
        spec = HashGridSpec(1, 2, 4, 4, 1024)
        tables = random_tables(spec, seed=1)
        s = spec.step(0)
        # interior lattice vertex k=2 sits at (k - 0.5) * s
        p = np.array([(2 - 0.5) * s, (1 - 0.5) * s, (3 - 0.5) * s])
        v = spec.verts_per_axis(0)
        idx = 2 + v * (1 + v * 3)
        assert np.allclose(encode(p, spec, tables), tables.tables[0][idx], atol=1e-12)

    def test_zero_tables(self):
        spec = HashGridSpec(2, 2, 2, 4, 64)
        tables = FeatureTables.zeros(spec)
        pts = np.random.default_rng(2).random((10, 3))
        assert np.allclose(encode(pts, spec, tables), 0.0)

    def test_midpoint_matches_trilinear_core(self):
        spec = HashGridSpec(1, 1, 4, 4, 1024)
        tables = random_tables(spec, seed=3)
        s = spec.step(0)
        cell = np.array([1, 2, 1])
        mid = cell * s  # centre of lattice cell `cell`: (k - 1/2)s + s/2
        v = spec.verts_per_axis(0)
        corners = []
        for ci in range(8):
            b = [(ci >> a) & 1 for a in range(3)]
            idx = (cell[0] + b[0]) + v * ((cell[1] + b[1]) + v * (cell[2] + b[2]))
            corners.append(tables.tables[0][idx, 0])
        expected = trilinear((0.5, 0.5, 0.5), np.array(corners))
        assert encode(mid, spec, tables)[0] == pytest.approx(expected, abs=1e-12)

    def test_continuity_at_marks(self):
        spec = HashGridSpec(3, 2, 2, 8, 64)  # level 2 is hashed
        tables = random_tables(spec, seed=4)
        marks = grid_marks(spec)
        rng = np.random.default_rng(5)
        delta = 1e-11
        for m in marks[1:-1]:
            for _ in range(5):
                y, z = rng.random(2)
                lo = encode(np.array([m - delta, y, z]), spec, tables)
                hi = encode(np.array([m + delta, y, z]), spec, tables)
                assert np.max(np.abs(hi - lo)) <= 1e-9

    def test_axis_linearity_within_composite_cell(self):
        spec = HashGridSpec(2, 2, 2, 4, 64)
        tables = random_tables(spec, seed=6)
        marks = grid_marks(spec)
        rng = np.random.default_rng(7)
        for ci in range(len(marks) - 1):
            lo, hi = marks[ci], marks[ci + 1]
            y, z = rng.uniform(lo, hi, 2)
            xs = np.array([lo + 0.1 * (hi - lo), lo + 0.5 * (hi - lo), lo + 0.9 * (hi - lo)])
            vals = np.stack([encode(np.array([x, y, z]), spec, tables) for x in xs])
            lerp = vals[0] + (vals[2] - vals[0]) * (xs[1] - xs[0]) / (xs[2] - xs[0])
            assert np.max(np.abs(vals[1] - lerp)) <= 1e-9

    def test_matches_cell_route(self):
        spec = HashGridSpec(2, 2, 2, 4, 64)
        tables = random_tables(spec, seed=8)
        pts = np.random.default_rng(9).random((200, 3))
        a = encode(pts, spec, tables)
        b = encode_via_cells(pts, spec, tables)
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_nan_rejected(self):
        spec = HashGridSpec(1, 1, 2, 2, 64)
        bad = np.zeros((spec.verts_per_axis(0) ** 3, 1))
        bad[3, 0] = np.nan
        with pytest.raises(CorruptWeightsError):
            FeatureTables(spec, [bad], dense=[True])


class TestCellOf:
    def test_origin(self):
        spec = HashGridSpec(2, 1, 2, 4, 8)
        for l, (idx, w) in enumerate(cell_of(np.zeros(3), spec)):
            assert np.all(idx == 0)
            assert np.allclose(w, 0.0)
        # halfway into the clipped first interval [0, s/2] of level 0 (s=1)
        (idx, w), _ = cell_of(np.array([0.25, 0.0, 0.0]), spec)
        assert idx[0] == 0 and w[0] == pytest.approx(0.5, abs=1e-12)

    def test_on_interior_mark(self):
        spec = HashGridSpec(1, 1, 2, 2, 8)
        (idx, w), = cell_of(np.array([0.5, 0.2, 0.2]), spec)
        assert idx[0] == 1
        assert w[0] == pytest.approx(0.0, abs=1e-15)

    def test_at_one(self):
        spec = HashGridSpec(2, 1, 2, 4, 8)
        for idx, w in cell_of(np.ones(3), spec):
            assert np.allclose(w, 1.0, atol=1e-12)

import numpy as np
import pytest

from tricomplex.network import SdfNetwork
from tricomplex.weightfile import (
    BadMagicError,
    NonFiniteValueError,
    SizeMismatchError,
    load_network,
    load_weights,
    random_network,
    save_weights,
    sphere_identity_network,
)


@pytest.fixture()
def random_ckpt(tmp_path):
    spec, tables, weights = random_network(seed=7)
    path = tmp_path / "net.ptnw"
    save_weights(path, spec, tables, weights)
    return path, spec, tables, weights


class TestRoundTrip:
    def test_bit_identical_arrays(self, random_ckpt):
        path, spec, tables, weights = random_ckpt
        spec2, tables2, weights2 = load_weights(path)
        assert spec2 == spec
        assert tables2.dense == tables.dense
        for a, b in zip(tables.tables, tables2.tables):
            assert np.array_equal(a.astype(np.float32), b.astype(np.float32))
        for (w, b), (w2, b2) in zip(weights.layers, weights2.layers):
            assert np.array_equal(w.astype(np.float32), w2.astype(np.float32))
            assert np.array_equal(b.astype(np.float32), b2.astype(np.float32))

    def test_resave_identical_bytes(self, random_ckpt, tmp_path):
        path, *_ = random_ckpt
        spec, tables, weights = load_weights(path)
        second = tmp_path / "again.ptnw"
        save_weights(second, spec, tables, weights)
        assert path.read_bytes() == second.read_bytes()

    def test_forward_agreement_after_roundtrip(self, random_ckpt):
        path, spec, tables, weights = random_ckpt
        net_a = SdfNetwork(spec, tables, weights)
        net_b = load_network(path)
        pts = np.random.default_rng(0).random((64, 3))
        assert np.max(np.abs(net_a.forward(pts) - net_b.forward(pts))) <= 1e-5


class TestValidation:
    def test_truncated_payload(self, random_ckpt, tmp_path):
        path, *_ = random_ckpt
        raw = path.read_bytes()
        bad = tmp_path / "short.ptnw"
        bad.write_bytes(raw[:-8])
        with pytest.raises(SizeMismatchError):
            load_weights(bad)

    def test_bad_magic(self, random_ckpt, tmp_path):
        path, *_ = random_ckpt
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        bad = tmp_path / "magic.ptnw"
        bad.write_bytes(bytes(raw))
        with pytest.raises(BadMagicError):
            load_weights(bad)

    def test_non_finite_payload(self, random_ckpt, tmp_path):
        path, *_ = random_ckpt
        raw = bytearray(path.read_bytes())
        nan = np.array([np.nan], dtype="<f4").tobytes()
        raw[-4:] = nan  # clobber the very last float (a bias entry)
        bad = tmp_path / "nan.ptnw"
        bad.write_bytes(bytes(raw))
        with pytest.raises(NonFiniteValueError):
            load_weights(bad)


class TestBuilders:
    def test_sphere_identity_values(self):
        spec, tables, weights = sphere_identity_network(intervals=16)
        net = SdfNetwork(spec, tables, weights)
        # 16 intervals between 17 marks
        from tricomplex.hashgrid import grid_marks

        marks = grid_marks(spec)
        assert len(marks) == 17
        rng = np.random.default_rng(1)
        pts = rng.random((2000, 3))
        truth = np.linalg.norm(pts - 0.5, axis=1) - 0.3
        near = np.abs(truth) < 0.1  # the SDF cusp at the centre is far away
        err = np.abs(np.asarray(net.forward(pts[near])) - truth[near])
        assert err.max() <= 7e-3  # trilinear sampling error at this resolution

    def test_random_network_is_seed_deterministic(self):
        a = random_network(seed=3)
        b = random_network(seed=3)
        for ta, tb in zip(a[1].tables, b[1].tables):
            assert np.array_equal(ta, tb)
        for (wa, ba), (wb, bb) in zip(a[2].layers, b[2].layers):
            assert np.array_equal(wa, wb)
            assert np.array_equal(ba, bb)

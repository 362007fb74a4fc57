import numpy as np
import pytest

from tricomplex.hashgrid import FeatureTables, HashGridSpec
from tricomplex.network import NetworkWeights, SdfNetwork


def linear_feature_tables(spec: HashGridSpec, fields) -> FeatureTables:
    """Dense tables sampling the given coordinate-affine fields exactly.

    Trilinear interpolation reproduces affine functions, so the resulting
    encoder output is exactly [f(x) for f in fields] everywhere.
    """
    assert spec.levels == 1 and spec.features_per_level == len(fields)
    v = spec.verts_per_axis(0)
    s = spec.step(0)
    k = np.arange(v)
    pos = (k - 0.5) * s
    gx, gy, gz = np.meshgrid(pos, pos, pos, indexing="ij")
    pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    ix, iy, iz = np.meshgrid(k, k, k, indexing="ij")
    flat = (ix + v * (iy + v * iz)).reshape(-1)
    table = np.empty((v**3, len(fields)))
    for fi, f in enumerate(fields):
        table[flat, fi] = f(pts[:, 0], pts[:, 1], pts[:, 2])
    return FeatureTables(spec, [table], dense=[True])


def affine_encoder_net(fields, layers) -> SdfNetwork:
    """Network whose encoder emits exact affine fields of the coordinates."""
    spec = HashGridSpec(
        levels=1, features_per_level=len(fields), n_min=2, n_max=2, table_size=64
    )
    tables = linear_feature_tables(spec, fields)
    return SdfNetwork(spec, tables, NetworkWeights(layers))


@pytest.fixture(scope="session")
def sphere_net():
    from tricomplex.weightfile import sphere_identity_network

    spec, tables, weights = sphere_identity_network(intervals=16)
    return SdfNetwork(spec, tables, weights)


@pytest.fixture(scope="session")
def sphere_mesh(sphere_net):
    from tricomplex.extractor import ExtractionConfig, extract

    return extract(sphere_net, ExtractionConfig(boundary_faces=False))

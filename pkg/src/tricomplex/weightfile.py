"""Binary checkpoint format shared with the trainer.

Layout: magic ``PTNW``, then a little-endian uint32 byte length, then a UTF-8
JSON header, then float32 payload arrays in declared order: per-level feature
tables (entries x F, row-major), then per-layer W (out x in, row-major)
followed by b.  Values are widened to float64 on load.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .hashgrid import FeatureTables, HashGridSpec
from .network import NetworkWeights, SdfNetwork

MAGIC = b"PTNW"
VERSION = 1


class WeightFileError(ValueError):
    code = "weightfile"


class BadMagicError(WeightFileError):
    code = "bad-magic"


class BadVersionError(WeightFileError):
    code = "bad-version"


class SizeMismatchError(WeightFileError):
    code = "size-mismatch"


class NonFiniteValueError(WeightFileError):
    code = "non-finite"


@dataclass
class WeightFile:
    spec: HashGridSpec
    dense: list[bool]
    mlp_dims: list[int]  # [in, hidden..., 1]

    def header_dict(self) -> dict:
        return {
            "version": VERSION,
            "dims": 3,
            "encoder": {
                "levels": self.spec.levels,
                "features_per_level": self.spec.features_per_level,
                "n_min": self.spec.n_min,
                "n_max": self.spec.n_max,
                "table_size": self.spec.table_size,
                "dense": self.dense,
            },
            "mlp_dims": self.mlp_dims,
        }


def _payload_sizes(spec: HashGridSpec, dense: list[bool], mlp_dims: list[int]) -> list[int]:
    sizes = [spec.level_entries(l, dense[l]) * spec.features_per_level for l in range(spec.levels)]
    for i in range(len(mlp_dims) - 1):
        sizes.append(mlp_dims[i + 1] * mlp_dims[i])  # W
        sizes.append(mlp_dims[i + 1])  # b
    return sizes


def save_weights(path, spec: HashGridSpec, tables: FeatureTables, weights: NetworkWeights) -> None:
    mlp_dims = [weights.layers[0][0].shape[1]] + [w.shape[0] for w, _ in weights.layers]
    header = WeightFile(spec, list(tables.dense), mlp_dims).header_dict()
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    arrays = [t for t in tables.tables]
    for w, b in weights.layers:
        arrays.append(w)
        arrays.append(b)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f4").tobytes())


def load_weights(path) -> tuple[HashGridSpec, FeatureTables, NetworkWeights]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {raw[:4]!r}")
    (blob_len,) = struct.unpack("<I", raw[4:8])
    blob_end = 8 + blob_len
    if blob_end > len(raw):
        raise SizeMismatchError(f"{path}: header overruns the file")
    header = json.loads(raw[8:blob_end].decode("utf-8"))
    if header.get("version") != VERSION:
        raise BadVersionError(f"{path}: unsupported version {header.get('version')}")
    enc = header["encoder"]
    spec = HashGridSpec(
        levels=enc["levels"],
        features_per_level=enc["features_per_level"],
        n_min=enc["n_min"],
        n_max=enc["n_max"],
        table_size=enc["table_size"],
    )
    dense = [bool(d) for d in enc["dense"]]
    mlp_dims = [int(d) for d in header["mlp_dims"]]
    sizes = _payload_sizes(spec, dense, mlp_dims)
    expected = sum(sizes) * 4
    payload = raw[blob_end:]
    if len(payload) != expected:
        raise SizeMismatchError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    flat = np.frombuffer(payload, dtype="<f4")
    arrays = []
    off = 0
    for n in sizes:
        arrays.append(np.asarray(flat[off : off + n], dtype=np.float64))
        off += n
    cursor = 0
    tables = []
    for l in range(spec.levels):
        t = arrays[cursor].reshape(spec.level_entries(l, dense[l]), spec.features_per_level)
        if not np.all(np.isfinite(t)):
            raise NonFiniteValueError(f"{path}: non-finite value in level-{l} table")
        tables.append(t)
        cursor += 1
    layers = []
    for i in range(len(mlp_dims) - 1):
        w = arrays[cursor].reshape(mlp_dims[i + 1], mlp_dims[i])
        b = arrays[cursor + 1]
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise NonFiniteValueError(f"{path}: non-finite value in layer {i + 1}")
        layers.append((w, b))
        cursor += 2
    return spec, FeatureTables(spec, tables, dense), NetworkWeights(layers)


def load_network(path) -> SdfNetwork:
    spec, tables, weights = load_weights(path)
    return SdfNetwork(spec, tables, weights)


# ---------------------------------------------------------------------------
# deterministic builders used by tests and the CLI


def sphere_sdf(points: np.ndarray, radius: float = 0.3, center=(0.5, 0.5, 0.5)) -> np.ndarray:
    p = np.atleast_2d(points) - np.asarray(center)
    return np.linalg.norm(p, axis=1) - radius


def sphere_identity_network(
    intervals: int = 16, radius: float = 0.3, center=(0.5, 0.5, 0.5)
) -> tuple[HashGridSpec, FeatureTables, NetworkWeights]:
    """Single dense level sampling the exact sphere SDF, identity MLP.

    ``intervals`` cells per axis means resolution = intervals, so the lattice
    step is 1/(intervals - 1) and the corner samples are exact SDF values.
    """
    spec = HashGridSpec(
        levels=1,
        features_per_level=1,
        n_min=intervals,
        n_max=intervals,
        table_size=max(8, (intervals + 2) ** 3),
    )
    v = spec.verts_per_axis(0)
    s = spec.step(0)
    k = np.arange(v)
    pos = (k - 0.5) * s
    gx, gy, gz = np.meshgrid(pos, pos, pos, indexing="ij")
    pts = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    vals = sphere_sdf(pts, radius, center)
    # dense index is ix + v*(iy + v*iz)
    ix, iy, iz = np.meshgrid(k, k, k, indexing="ij")
    flat = (ix + v * (iy + v * iz)).reshape(-1)
    table = np.empty((v**3, 1))
    table[flat, 0] = vals
    tables = FeatureTables(spec, [table], dense=[True])
    weights = NetworkWeights([(np.array([[1.0]]), np.array([0.0]))])
    return spec, tables, weights


def random_network(
    seed: int,
    levels: int = 2,
    features_per_level: int = 2,
    n_min: int = 2,
    n_max: int = 4,
    hidden: int = 16,
    num_hidden_layers: int = 2,
    table_size: int = 2**14,
    table_scale: float = 0.6,
) -> tuple[HashGridSpec, FeatureTables, NetworkWeights]:
    """Seeded random checkpoint at the small desk-scale architecture."""
    rng = np.random.default_rng(seed)
    spec = HashGridSpec(levels, features_per_level, n_min, n_max, table_size)
    dense = [spec.level_is_dense(l) for l in range(spec.levels)]
    tables = [
        rng.normal(0.0, table_scale, size=(spec.level_entries(l, dense[l]), features_per_level))
        for l in range(spec.levels)
    ]
    dims = [spec.output_dim] + [hidden] * num_hidden_layers + [1]
    layers = []
    for i in range(len(dims) - 1):
        w = rng.normal(0.0, np.sqrt(2.0 / dims[i]), size=(dims[i + 1], dims[i]))
        b = rng.normal(0.0, 0.1, size=(dims[i + 1],))
        layers.append((w, b))
    return spec, FeatureTables(spec, [t.astype(np.float32).astype(np.float64) for t in tables], dense), NetworkWeights(
        [(w.astype(np.float32).astype(np.float64), b.astype(np.float32).astype(np.float64)) for w, b in layers]
    )

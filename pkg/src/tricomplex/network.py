"""ReLU MLP on top of the grid encoder: forward, preactivations, masked
regional evaluation, sign vectors, and gradients.

Surface indices phi enumerate candidate hypersurfaces: hidden neurons in
layer order then neuron order, with the single output neuron last.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hashgrid
from .hashgrid import CorruptWeightsError, FeatureTables, HashGridSpec


@dataclass
class NetworkWeights:
    """Ordered (W, b) pairs; layer 1 consumes the encoder output."""

    layers: list[tuple[np.ndarray, np.ndarray]]

    def __post_init__(self):
        for i, (w, b) in enumerate(self.layers):
            w = np.asarray(w, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {i}: W {w.shape} and b {b.shape} mismatch")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise CorruptWeightsError(f"non-finite weight in layer {i}")
            if i > 0 and w.shape[1] != self.layers[i - 1][0].shape[0]:
                raise ValueError(f"layer {i}: input dim {w.shape[1]} breaks the chain")
            self.layers[i] = (w, b)
        if self.layers[-1][0].shape[0] != 1:
            raise ValueError("final layer must have a single output")


class SdfNetwork:
    """Piecewise trilinear network: encoder followed by a ReLU MLP."""

    def __init__(self, spec: HashGridSpec, tables: FeatureTables, weights: NetworkWeights):
        if weights.layers[0][0].shape[1] != spec.output_dim:
            raise ValueError("layer 1 input dim must match the encoder output dim")
        self.spec = spec
        self.tables = tables
        self.weights = weights
        self.num_layers = len(weights.layers)
        self.hidden_sizes = [w.shape[0] for w, _ in weights.layers[:-1]]
        self._phi_offsets = np.concatenate(([0], np.cumsum(self.hidden_sizes)))
        self.num_surfaces = int(self._phi_offsets[-1]) + 1

    # phi bookkeeping -----------------------------------------------------
    def phi(self, layer: int, neuron: int) -> int:
        """Ascending surface index; ``layer`` is 1-based."""
        if layer == self.num_layers:
            if neuron != 0:
                raise ValueError("final layer exposes only neuron 0")
            return self.num_surfaces - 1
        if not (1 <= layer < self.num_layers) or not (0 <= neuron < self.hidden_sizes[layer - 1]):
            raise ValueError(f"invalid surface ({layer}, {neuron})")
        return int(self._phi_offsets[layer - 1]) + neuron

    def surface_of(self, phi: int) -> tuple[int, int]:
        if phi == self.num_surfaces - 1:
            return (self.num_layers, 0)
        layer = int(np.searchsorted(self._phi_offsets, phi, side="right"))
        return (layer, phi - int(self._phi_offsets[layer - 1]))

    def surfaces(self):
        """All (layer, neuron) pairs in processing order."""
        for layer in range(1, self.num_layers):
            for j in range(self.hidden_sizes[layer - 1]):
                yield (layer, j)
        yield (self.num_layers, 0)

    # forward passes ------------------------------------------------------
    def encode(self, x) -> np.ndarray:
        return hashgrid.encode(x, self.spec, self.tables)

    def preactivations(self, x) -> list[np.ndarray]:
        """Pre-ReLU values of every layer at x: list of (N, H_l)."""
        h = np.atleast_2d(hashgrid.encode(np.atleast_2d(np.asarray(x, float)), self.spec, self.tables))
        outs = []
        for li, (w, b) in enumerate(self.weights.layers):
            z = h @ w.T + b
            outs.append(z)
            if li < self.num_layers - 1:
                h = np.maximum(z, 0.0)
        return outs

    def forward(self, x) -> np.ndarray | float:
        z = self.preactivations(x)[-1][:, 0]
        if np.asarray(x).ndim == 1:
            return float(z[0])
        return z

    def preactivation(self, x, layer: int, neuron: int):
        self.phi(layer, neuron)  # validates
        z = self.preactivations(x)[layer - 1][:, neuron]
        if np.asarray(x).ndim == 1:
            return float(z[0])
        return z

    def surface_matrix(self, x) -> np.ndarray:
        """All surface preactivations at once: (N, num_surfaces)."""
        pre = self.preactivations(x)
        cols = [pre[l] for l in range(self.num_layers - 1)]
        cols.append(pre[-1])
        return np.concatenate(cols, axis=1)

    # masked regional evaluation -------------------------------------------
    def masks_from_endpoints(self, x0, x7, eps: float) -> list[np.ndarray]:
        """Frozen ReLU masks: active if the preactivation exceeds eps at
        either endpoint."""
        pre0 = self.preactivations(np.asarray(x0, float))
        pre1 = self.preactivations(np.asarray(x7, float))
        return [
            (pre0[l][0] > eps) | (pre1[l][0] > eps)
            for l in range(self.num_layers - 1)
        ]

    def masks_from_rows(self, row0: np.ndarray, row1: np.ndarray, eps: float) -> list[np.ndarray]:
        """Masks from two precomputed hidden-preactivation rows (surface
        matrix layout: hidden layers in order, output last)."""
        out = []
        for l in range(self.num_layers - 1):
            lo = int(self._phi_offsets[l])
            hi = int(self._phi_offsets[l + 1])
            out.append((row0[lo:hi] > eps) | (row1[lo:hi] > eps))
        return out

    def masked_surface_values(self, x, layer: int, neuron: int, masks: list[np.ndarray]) -> np.ndarray:
        """Preactivation of (layer, neuron) with ReLUs replaced by the fixed
        masks of all earlier layers, making the field trilinear per cell."""
        feats = np.atleast_2d(hashgrid.encode(np.atleast_2d(np.asarray(x, float)), self.spec, self.tables))
        return self.masked_values_from_features(feats, layer, neuron, masks)

    def masked_values_from_features(
        self, feats: np.ndarray, layer: int, neuron: int, masks: list[np.ndarray]
    ) -> np.ndarray:
        self.phi(layer, neuron)
        h = feats
        for li in range(layer):
            w, b = self.weights.layers[li]
            z = h @ w.T + b
            if li == layer - 1:
                return z[:, neuron]
            h = z * masks[li]
        raise AssertionError("unreachable")

    def masked_corner_values(self, x0, x7, corners, layer: int, neuron: int, eps: float) -> np.ndarray:
        """Masked field values at the 8 corners of the endpoints' cell box."""
        corners = np.asarray(corners, dtype=np.float64)
        if corners.shape != (8, 3):
            raise ValueError("expected 8 cube corners")
        masks = self.masks_from_endpoints(x0, x7, eps)
        return self.masked_surface_values(corners, layer, neuron, masks)

    # sign vectors ----------------------------------------------------------
    def sign_matrix(self, x, upto: int, eps: float) -> np.ndarray:
        """Ternary classification of surfaces phi <= upto: (N, upto+1) int8."""
        vals = self.surface_matrix(x)[:, : upto + 1]
        out = np.zeros(vals.shape, dtype=np.int8)
        out[vals > eps] = 1
        out[vals < -eps] = -1
        return out

    # gradient ---------------------------------------------------------------
    def gradient(self, x) -> np.ndarray:
        """d output / d x with the ReLU pattern frozen at x (ties active)."""
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        jac = hashgrid.encode_gradient(pts, self.spec, self.tables)  # (N, 3, F)
        h = hashgrid.encode(pts, self.spec, self.tables)
        g = np.einsum("of,njf->njo", self.weights.layers[0][0], jac)  # (N, 3, H1)
        z = h @ self.weights.layers[0][0].T + self.weights.layers[0][1]
        for li in range(1, self.num_layers):
            mask = (z >= 0.0).astype(np.float64)
            g = np.einsum("oh,njh->njo", self.weights.layers[li][0], g * mask[:, None, :])
            z = np.maximum(z, 0.0) @ self.weights.layers[li][0].T + self.weights.layers[li][1]
        out = g[:, :, 0]
        if np.asarray(x).ndim == 1:
            return out[0]
        return out


@dataclass
class SignVector:
    """Per-vertex surface membership: grid part plus ternary neuron part."""

    grid_interval: np.ndarray  # (3,) interval index per axis in the global marks
    grid_mark: np.ndarray  # (3,) mark index when on a plane, else -1
    neuron: np.ndarray  # (upto+1,) int8 in {-1, 0, +1}

    def zero_count(self) -> int:
        return int(np.sum(self.grid_mark >= 0) + np.sum(self.neuron == 0))


def sign_vector(net: SdfNetwork, x, upto: int, eps: float, marks: np.ndarray) -> SignVector:
    """Sign vector of one point: grid on-plane flags and neuron signs."""
    x = np.asarray(x, dtype=np.float64)
    idx = np.clip(np.searchsorted(marks, x, side="right") - 1, 0, len(marks) - 2)
    mark = np.full(3, -1, dtype=np.int64)
    for ax in range(3):
        j = int(np.argmin(np.abs(marks - x[ax])))
        if abs(marks[j] - x[ax]) <= eps:
            mark[ax] = j
    neuron = net.sign_matrix(x[None, :], upto, eps)[0]
    return SignVector(idx.astype(np.int64), mark, neuron)

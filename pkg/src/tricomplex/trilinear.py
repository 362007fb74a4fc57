"""Trilinear interpolation algebra on a cube and low-degree polynomial roots.

Everything here is pure and stateless: interpolation weights and their
derivatives for the 8 corners of a box, the cubic Bezier form of the field
along the main diagonal, and a real-root solver for polynomials up to
degree 4 (closed forms for degree <= 2, shifted-QR companion-matrix
eigenvalues for degrees 3 and 4).
"""

from __future__ import annotations

import numpy as np

# Corner i maps to offsets (bit_x, bit_y, bit_z) with bit_x the least
# significant bit: corner 1 = (1,0,0), corner 2 = (0,1,0), corner 4 = (0,0,1).
CORNER_OFFSETS = np.array(
    [[(i >> a) & 1 for a in range(3)] for i in range(8)], dtype=np.float64
)
CORNER_OFFSETS_INT = CORNER_OFFSETS.astype(np.int64)


class DegeneratePolynomialError(ValueError):
    """All coefficients vanish: every point of the interval is a solution."""


def _check_unit_point(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape[-1] != 3:
        raise ValueError(f"expected 3-d points, got shape {w.shape}")
    if np.any(w < -1e-12) or np.any(w > 1 + 1e-12):
        raise ValueError("point outside the unit cube")
    return w


def interp_weight(i: int, w) -> float:
    """Weight of corner ``i`` at ``w``: the volume of the opposite sub-box."""
    if not 0 <= i < 8:
        raise ValueError(f"corner index {i} out of range")
    w = _check_unit_point(w)
    b = CORNER_OFFSETS[i]
    return float(np.prod((1.0 - b) * (1.0 - w) + b * w))


def interp_weights(w: np.ndarray) -> np.ndarray:
    """All 8 corner weights, batched: (..., 3) -> (..., 8)."""
    w = np.asarray(w, dtype=np.float64)
    b = CORNER_OFFSETS  # (8, 3)
    # (..., 1, 3) against (8, 3)
    factors = (1.0 - b) * (1.0 - w[..., None, :]) + b * w[..., None, :]
    return np.prod(factors, axis=-1)


def trilinear(w, corners) -> np.ndarray | float:
    """Interpolate corner values at ``w``.

    ``corners`` has shape (8,) or (8, F); ``w`` is a single point or a batch
    (..., 3).  Scalar in, scalar out.
    """
    w = _check_unit_point(w)
    h = np.asarray(corners, dtype=np.float64)
    if h.shape[0] != 8:
        raise ValueError("corner values must have leading dimension 8")
    weights = interp_weights(w)
    out = np.tensordot(weights, h, axes=([-1], [0]))
    if w.ndim == 1 and h.ndim == 1:
        return float(out)
    return out


def trilinear_batch(w: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Per-point corner values: w (N, 3), corners (N, 8, F) -> (N, F)."""
    weights = interp_weights(w)  # (N, 8)
    return np.einsum("nc,ncf->nf", weights, corners)


def interp_weight_gradient(w: np.ndarray) -> np.ndarray:
    """d weight_i / d w_j, batched: (..., 3) -> (..., 8, 3)."""
    w = np.asarray(w, dtype=np.float64)
    b = CORNER_OFFSETS
    factors = (1.0 - b) * (1.0 - w[..., None, :]) + b * w[..., None, :]
    sign = 2.0 * b - 1.0  # d factor / d w_j for the j-th axis
    grad = np.empty(w.shape[:-1] + (8, 3), dtype=np.float64)
    for j in range(3):
        others = [k for k in range(3) if k != j]
        grad[..., :, j] = sign[:, j] * np.prod(factors[..., others], axis=-1)
    return grad


def trilinear_gradient(w, corners) -> np.ndarray:
    """Exact gradient of the trilinear form with respect to ``w``.

    Returns (3,) for scalar corners at one point, (..., 3) for batches, and
    (..., 3, F) for vector corner values.
    """
    w = _check_unit_point(w)
    h = np.asarray(corners, dtype=np.float64)
    g = interp_weight_gradient(w)  # (..., 8, 3)
    out = np.tensordot(np.swapaxes(g, -1, -2), h, axes=([-1], [0]))
    return out


def diagonal_bezier_control_points(corners) -> np.ndarray:
    """Control points of the cubic Bezier traced along the main diagonal.

    The field restricted to w = (t, t, t) equals the Bernstein cubic with
    P0 = H0, P1 = (H1+H2+H4)/3, P2 = (H3+H5+H6)/3, P3 = H7.
    """
    h = np.asarray(corners, dtype=np.float64)
    if h.shape[0] != 8:
        raise ValueError("corner values must have leading dimension 8")
    return np.stack(
        [h[0], (h[1] + h[2] + h[4]) / 3.0, (h[3] + h[5] + h[6]) / 3.0, h[7]]
    )


def bezier_eval(control: np.ndarray, t) -> np.ndarray | float:
    """Evaluate a cubic Bernstein polynomial at ``t`` (scalar or array)."""
    p = np.asarray(control, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    u = 1.0 - t
    out = (
        np.multiply.outer(u**3, p[0])
        + np.multiply.outer(3 * u**2 * t, p[1])
        + np.multiply.outer(3 * u * t**2, p[2])
        + np.multiply.outer(t**3, p[3])
    )
    if out.ndim == 0 or (t.ndim == 0 and p.ndim == 1):
        return float(out)
    return out


def bezier_power_coefficients(control: np.ndarray) -> np.ndarray:
    """Cubic Bernstein -> power-basis coefficients, low to high degree."""
    p0, p1, p2, p3 = np.asarray(control, dtype=np.float64)
    return np.array(
        [p0, 3.0 * (p1 - p0), 3.0 * (p2 - 2.0 * p1 + p0), p3 - 3.0 * p2 + 3.0 * p1 - p0]
    )


def polyval(coeffs: np.ndarray, x) :
    """Evaluate a low->high coefficient polynomial (Horner)."""
    c = np.asarray(coeffs, dtype=np.float64)
    out = np.zeros_like(np.asarray(x, dtype=np.float64))
    for ck in c[::-1]:
        out = out * x + ck
    return out


def _companion_eigenvalues(monic: np.ndarray, max_iter: int = 64, tol: float = 1e-12):
    """Eigenvalues of the companion matrix of a monic polynomial.

    Complex shifted-QR iteration with Givens rotations on the (Hessenberg)
    companion matrix; trailing-2x2 Wilkinson shifts; deflation when a
    subdiagonal entry falls below ``tol`` relative to its neighbours.
    """
    n = len(monic) - 1
    a = np.zeros((n, n), dtype=np.complex128)
    for k in range(n - 1):
        a[k + 1, k] = 1.0
    a[:, -1] = -np.asarray(monic[:n], dtype=np.complex128)

    eigs: list[complex] = []
    h = a
    budget = max_iter * n
    since_deflation = 0
    while h.shape[0] > 0:
        m = h.shape[0]
        if m == 1:
            eigs.append(complex(h[0, 0]))
            break
        if m == 2:
            eigs.extend(_eig2(h))
            break
        # deflate converged trailing entries
        sub = abs(h[m - 1, m - 2])
        if sub <= tol * (abs(h[m - 2, m - 2]) + abs(h[m - 1, m - 1]) + tol):
            eigs.append(complex(h[m - 1, m - 1]))
            h = h[: m - 1, : m - 1]
            since_deflation = 0
            continue
        if budget <= 0:
            raise ArithmeticError("companion QR iteration failed to converge")
        if since_deflation > 0 and since_deflation % 8 == 0:
            # exceptional shift breaks equal-modulus stalls
            mu = h[m - 1, m - 1] + (0.9 + 0.55j) * abs(h[m - 1, m - 2])
        else:
            mu = _wilkinson_shift(h)
        _qr_step(h, mu)
        budget -= 1
        since_deflation += 1
    return eigs


def _eig2(h: np.ndarray) -> list[complex]:
    tr = h[0, 0] + h[1, 1]
    det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    disc = np.sqrt(complex(tr * tr - 4.0 * det))
    return [complex((tr + disc) / 2.0), complex((tr - disc) / 2.0)]


def _wilkinson_shift(h: np.ndarray) -> complex:
    m = h.shape[0]
    l1, l2 = _eig2(h[m - 2 :, m - 2 :])
    d = h[m - 1, m - 1]
    return l1 if abs(l1 - d) <= abs(l2 - d) else l2


def _qr_step(h: np.ndarray, mu: complex) -> None:
    """One shifted QR sweep, in place, preserving Hessenberg form."""
    m = h.shape[0]
    for k in range(m):
        h[k, k] -= mu
    rotations = []
    for k in range(m - 1):
        x, y = h[k, k], h[k + 1, k]
        r = np.hypot(abs(x), abs(y))
        if r == 0.0:
            c, s = 1.0 + 0j, 0.0 + 0j
        else:
            c, s = x / r, y / r
        rotations.append((c, s))
        row_k = np.conj(c) * h[k, :] + np.conj(s) * h[k + 1, :]
        row_k1 = -s * h[k, :] + c * h[k + 1, :]
        h[k, :], h[k + 1, :] = row_k, row_k1
    for k, (c, s) in enumerate(rotations):
        col_k = h[:, k] * c + h[:, k + 1] * s
        col_k1 = -h[:, k] * np.conj(s) + h[:, k + 1] * np.conj(c)
        h[:, k], h[:, k + 1] = col_k, col_k1
    for k in range(m):
        h[k, k] += mu


def poly_real_roots(coeffs, tol_real: float = 1e-9) -> np.ndarray:
    """All real roots of a degree <= 4 polynomial, ascending.

    Coefficients are low -> high.  Leading coefficients that vanish relative
    to the largest one are deflated; degrees 1 and 2 use closed forms and
    degrees 3 and 4 the companion-matrix QR iteration plus Newton polish.
    Raises :class:`DegeneratePolynomialError` for the identically-zero input.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 1 or len(c) > 5:
        raise ValueError("expected at most quartic coefficients, low to high")
    if not np.all(np.isfinite(c)):
        raise ValueError("non-finite polynomial coefficients")
    scale = np.max(np.abs(c)) if len(c) else 0.0
    if scale == 0.0:
        raise DegeneratePolynomialError("identically-zero polynomial")
    deg = len(c) - 1
    while deg > 0 and abs(c[deg]) <= 1e-14 * scale:
        deg -= 1
    if deg == 0:
        return np.empty(0)
    if deg == 1:
        return np.array([-c[0] / c[1]])
    if deg == 2:
        a, b, cc = c[2], c[1], c[0]
        disc = b * b - 4.0 * a * cc
        if disc < 0.0:
            return np.empty(0)
        sq = np.sqrt(disc)
        # numerically stable pair
        q = -0.5 * (b + np.copysign(sq, b)) if b != 0.0 else 0.5 * sq
        if q == 0.0:
            roots = np.array([0.0, 0.0])
        else:
            roots = np.array([q / a, cc / q])
        return np.sort(roots)
    monic = c[: deg + 1] / c[deg]
    eigs = _companion_eigenvalues(monic)
    coeffs = c[: deg + 1]
    real = []
    for z in eigs:
        bound = max(1.0, abs(z.real))
        if abs(z.imag) <= tol_real * bound:
            real.append(_newton_polish(coeffs, z.real))
            continue
        if abs(z.imag) <= 1e-6 * bound:
            # near-double real roots perturb into conjugate pairs with tiny
            # imaginary noise; keep them when the polished point is a root
            x = _newton_polish(coeffs, z.real, iters=8)
            resid_scale = np.sum(np.abs(coeffs) * bound ** np.arange(deg + 1))
            if abs(polyval(coeffs, x)) <= 1e-9 * max(resid_scale, 1e-300):
                real.append(x)
    return np.sort(np.asarray(real))


def _newton_polish(coeffs: np.ndarray, x: float, iters: int = 3) -> float:
    dcoeffs = coeffs[1:] * np.arange(1, len(coeffs))
    for _ in range(iters):
        f = polyval(coeffs, x)
        df = polyval(dcoeffs, x)
        if df == 0.0:
            break
        step = f / df
        if not np.isfinite(step):
            break
        x -= step
    return float(x)


def solve_quartic_unit_interval(coeffs, tol_real: float = 1e-9) -> np.ndarray:
    """Real roots restricted to [0, 1], ascending.

    Roots within ``tol_real`` outside an endpoint are clamped onto it; roots
    further out are discarded.
    """
    roots = poly_real_roots(coeffs, tol_real=tol_real)
    kept = roots[(roots >= -tol_real) & (roots <= 1.0 + tol_real)]
    return np.clip(kept, 0.0, 1.0)

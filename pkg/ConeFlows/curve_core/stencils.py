"""Finite-difference stencils on nonuniform one-dimensional grids.

All stencils take node values `f` (shape (M,) or (M, 2)) and the M-1 spacings `h`
between consecutive nodes, and return values at the M-2 interior nodes.
"""

import numpy as np


def chords(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.diff(points, axis=0), axis=1)


def _broadcast(w: np.ndarray, f: np.ndarray) -> np.ndarray:
    return w if f.ndim == 1 else w[:, None]


def d1_weights(h: np.ndarray):
    hm, hp = h[:-1], h[1:]
    denom = hm * hp * (hm + hp)
    return -hp**2 / denom, (hp**2 - hm**2) / denom, hm**2 / denom


def d2_weights(h: np.ndarray):
    hm, hp = h[:-1], h[1:]
    return 2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))


def central_d1(f: np.ndarray, h: np.ndarray) -> np.ndarray:
    wm, w0, wp = d1_weights(h)
    return _broadcast(wm, f) * f[:-2] + _broadcast(w0, f) * f[1:-1] + _broadcast(wp, f) * f[2:]


def central_d2(f: np.ndarray, h: np.ndarray) -> np.ndarray:
    a, b, c = d2_weights(h)
    return _broadcast(a, f) * f[:-2] + _broadcast(b, f) * f[1:-1] + _broadcast(c, f) * f[2:]


def one_sided_d1(f: np.ndarray, h: np.ndarray, at_end: bool = False) -> np.ndarray:
    """Three-point second-order first derivative at the first node (or last, if at_end)."""
    if at_end:
        return -one_sided_d1(f[::-1], h[::-1])
    h1, h2 = h[0], h[1]
    total = h1 + h2
    return (
        -(2.0 * h1 + h2) / (h1 * total) * f[0]
        + total / (h1 * h2) * f[1]
        - h1 / (h2 * total) * f[2]
    )


def mirror_extend(values: np.ndarray, h: np.ndarray, pad: int):
    """Even reflection of a nodal field about both endpoints, spacings mirrored."""
    left = values[1 : pad + 1][::-1]
    right = values[-pad - 1 : -1][::-1]
    h_ext = np.concatenate((h[:pad][::-1], h, h[-pad:][::-1]))
    return np.concatenate((left, values, right)), h_ext


def menger_curvature(points: np.ndarray) -> np.ndarray:
    """Signed curvature of the circle through each consecutive node triple.

    Positive for clockwise turning. Exact on samples of any circle.
    """
    u = points[1:-1] - points[:-2]
    v = points[2:] - points[1:-1]
    w = points[2:] - points[:-2]
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    lengths = np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1) * np.linalg.norm(w, axis=1)
    return -2.0 * cross / lengths


def extrapolate_ends(interior: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Complete an interior-node field with linearly extrapolated endpoint values."""
    first = interior[0] + (interior[0] - interior[1]) * h[0] / h[1]
    last = interior[-1] + (interior[-1] - interior[-2]) * h[-1] / h[-2]
    return np.concatenate(([first], interior, [last]))

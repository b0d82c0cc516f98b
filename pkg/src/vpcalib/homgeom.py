"""Homogeneous 2D geometry: points, lines, structure tensors.

Points and lines are plain ``numpy`` arrays of shape ``(3,)`` (or ``(N, 3)``
for the batched helpers). Nothing here normalizes its output; comparisons go
through scale-invariant predicates such as :func:`cossim`.
"""

import math
import warnings

import numpy as np

from .errors import AmbiguousEigenspace, DegenerateInput

_REL_EPS = 1e-12


def as_hom(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise DegenerateInput(f"expected 3 homogeneous components, got shape {v.shape}")
    return v


def _check_nonzero(v, what="vector"):
    if not np.all(np.isfinite(v)) or not np.any(v):
        raise DegenerateInput(f"{what} must be finite and nonzero: {v}")


def line_from_endpoints(p0, p1):
    """Line through two homogeneous points (their cross product)."""
    p0, p1 = as_hom(p0), as_hom(p1)
    _check_nonzero(p0, "p0")
    _check_nonzero(p1, "p1")
    line = np.cross(p0, p1)
    if np.linalg.norm(line) <= _REL_EPS * np.linalg.norm(p0) * np.linalg.norm(p1):
        raise DegenerateInput("endpoints are the same point")
    return line


def intersect(l0, l1):
    """Intersection of two homogeneous lines; a point at infinity for parallel lines."""
    l0, l1 = as_hom(l0), as_hom(l1)
    _check_nonzero(l0, "l0")
    _check_nonzero(l1, "l1")
    p = np.cross(l0, l1)
    if np.linalg.norm(p) <= _REL_EPS * np.linalg.norm(l0) * np.linalg.norm(l1):
        raise DegenerateInput("lines coincide")
    return p


def lines_from_segments(xy0, xy1):
    """Batched line equations for segments given as ``(N, 2)`` endpoint arrays."""
    xy0 = np.asarray(xy0, dtype=float).reshape(-1, 2)
    xy1 = np.asarray(xy1, dtype=float).reshape(-1, 2)
    ones = np.ones((len(xy0), 1))
    return np.cross(np.hstack([xy0, ones]), np.hstack([xy1, ones]))


def cossim(u, v):
    """|u.v| / (|u||v|), batched over leading axes."""
    u, v = as_hom(u), as_hom(v)
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    if np.any(nu == 0) or np.any(nv == 0):
        raise DegenerateInput("cossim of a zero vector")
    c = np.abs(np.sum(u * v, axis=-1)) / (nu * nv)
    c = np.minimum(c, 1.0)
    return float(c) if np.ndim(c) == 0 else c


def closeness(line, point):
    """1 - |l.v| / (|l||v|): equals 1 when the point lies on the line."""
    line, point = as_hom(line), as_hom(point)
    nl = np.linalg.norm(line, axis=-1)
    npt = np.linalg.norm(point, axis=-1)
    if np.any(nl == 0) or np.any(npt == 0):
        raise DegenerateInput("closeness of a zero vector")
    c = 1.0 - np.abs(np.sum(line * point, axis=-1)) / (nl * npt)
    c = np.clip(c, 0.0, 1.0)
    return float(c) if np.ndim(c) == 0 else c


def closeness_matrix(lines, points):
    """Pairwise closeness, shape ``(len(lines), len(points))``."""
    lines = np.asarray(lines, dtype=float)
    points = np.asarray(points, dtype=float)
    ln = lines / np.linalg.norm(lines, axis=1, keepdims=True)
    pn = points / np.linalg.norm(points, axis=1, keepdims=True)
    return np.clip(1.0 - np.abs(ln @ pn.T), 0.0, 1.0)


def unit(v):
    v = as_hom(v)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise DegenerateInput("cannot normalize a zero vector")
    return v / n


def structure_tensor(v):
    """Outer product of the l2-normalized point; batched input gives ``(N, 3, 3)``."""
    v = as_hom(v)
    sq = np.sum(v * v, axis=-1)
    if np.any(sq == 0):
        raise DegenerateInput("structure tensor of a zero vector")
    return v[..., :, None] * v[..., None, :] / sq[..., None, None]


def canonical_sign(v):
    """Flip so the last nonzero component is nonnegative."""
    v = np.array(v, dtype=float)
    for x in v[::-1]:
        if x != 0:
            return v if x > 0 else -v
    return v


def jacobi_eigh3(a, tol=1e-15, max_sweeps=50):
    """Cyclic Jacobi eigen-decomposition of a symmetric 3x3 matrix.

    Returns ``(w, V)`` with eigenvalues in ascending order and the matching
    eigenvectors as columns of ``V``.
    """
    a = np.array(a, dtype=float)
    if a.shape != (3, 3):
        raise DegenerateInput(f"expected a 3x3 matrix, got {a.shape}")
    a = 0.5 * (a + a.T)
    v = np.eye(3)
    scale = np.abs(a).max()
    if scale == 0:
        return np.zeros(3), v
    for _ in range(max_sweeps):
        off = abs(a[0, 1]) + abs(a[0, 2]) + abs(a[1, 2])
        if off <= tol * scale:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p, q]
            if apq == 0.0:
                continue
            diff = a[q, q] - a[p, p]
            if abs(apq) < 1e-150 * abs(diff):
                # theta would overflow; t ~ 1/(2 theta)
                t = apq / diff
            else:
                theta = diff / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(3)
            rot[p, p] = rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            a[p, q] = a[q, p] = 0.0
            v = v @ rot
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def principal_eigenvector(t, ambiguity_tol=1e-9):
    """Unit eigenvector of the largest eigenvalue, last nonzero component >= 0."""
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)) or np.abs(t).max() < 1e-300:
        raise DegenerateInput("structure tensor is zero")
    w, vecs = jacobi_eigh3(t)
    if w[2] - w[1] <= ambiguity_tol * max(abs(w[2]), 1e-300):
        warnings.warn(
            f"top eigenvalues coincide ({w[2]!r}, {w[1]!r}); picking a deterministic vector",
            AmbiguousEigenspace,
            stacklevel=2,
        )
    vec = vecs[:, 2]
    vec = vec / np.linalg.norm(vec)
    return canonical_sign(vec)


def weighted_structure_tensor(points, weights):
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        raise DegenerateInput("weights must have a positive sum")
    st = structure_tensor(points)
    return np.tensordot(weights, st, axes=1) / total

"""Convex polytopes, their basic functionals and the Hausdorff-type metrics.

A :class:`ConvexBody` stores its extreme points as the source of truth and
derives the half-space description eagerly at construction.  Everything in
this module is a pure function of its arguments.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateInput, DimensionMismatch, NoConvergence, SingularMap, ZeroDirection
from .maps import AffineMap, Similarity

DEFAULT_DIRECTIONS = 2048


class ConvexBody:
    """Full-dimensional convex polytope in R^n.

    Parameters
    ----------
    points : array_like, shape (m, n)
        Any finite point set whose hull has non-empty interior.  Only the
        extreme points are kept, in their input order.

    Attributes
    ----------
    vertices : ndarray, shape (k, n)
    normals, offsets : ndarray
        Facet half-spaces ``normals @ x <= offsets`` with unit outward normals.
    simplices : ndarray of int, shape (f, n)
        Boundary simplices (indices into ``vertices``) used for the fan
        triangulation.
    """

    __slots__ = ("dim", "vertices", "normals", "offsets", "simplices", "volume", "centroid", "diameter", "_key")

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise DegenerateInput(f"expected an (m, n) point array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DegenerateInput("points contain non-finite coordinates")
        n = pts.shape[1]
        if pts.shape[0] < n + 1:
            raise DegenerateInput(f"need at least {n + 1} points in R^{n}, got {pts.shape[0]}")
        if n == 1:
            lo, hi = int(np.argmin(pts[:, 0])), int(np.argmax(pts[:, 0]))
            if pts[hi, 0] - pts[lo, 0] <= 0:
                raise DegenerateInput("segment has zero length")
            verts = pts[sorted((lo, hi))]
            normals = np.array([[-1.0], [1.0]])
            offsets = np.array([-verts[:, 0].min(), verts[:, 0].max()])
            simplices = np.array([[0], [1]])
        else:
            verts, normals, offsets, simplices = _hull_data(pts)

        self.dim = n
        self.vertices = _frozen(verts)
        self.normals = _frozen(normals)
        self.offsets = _frozen(offsets)
        self.simplices = _frozen(simplices)
        self.volume, self.centroid = _fan_moments(self.vertices, self.simplices)
        diffs = self.vertices[:, None, :] - self.vertices[None, :, :]
        self.diameter = float(np.sqrt((diffs**2).sum(-1)).max())
        if not self.volume > 1e-14 * self.diameter**n:
            raise DegenerateInput("body has empty interior (volume is zero)")
        self._key = (n, self.vertices.tobytes())

    def __repr__(self):
        return f"ConvexBody(dim={self.dim}, vertices={len(self.vertices)}, volume={self.volume:.6g})"

    def __eq__(self, other):
        return isinstance(other, ConvexBody) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def support(self, directions):
        """Support values for one direction (n,) or many (k, n)."""
        return (np.asarray(directions, dtype=float) @ self.vertices.T).max(axis=-1)


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float) if a.dtype.kind == "f" else np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _hull_data(pts):
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateInput(f"points are affinely dependent: {str(exc).splitlines()[0]}") from None
    keep = np.sort(hull.vertices)
    remap = -np.ones(len(pts), dtype=int)
    remap[keep] = np.arange(keep.size)
    simplices = remap[hull.simplices]
    eq = hull.equations
    normals, offsets = eq[:, :-1], -eq[:, -1]
    # qhull triangulates facets; merge coplanar pieces into one half-space each.
    scale = max(1.0, float(np.abs(pts).max()))
    uniq_n, uniq_b = [], []
    for a, b in zip(normals, offsets):
        if uniq_n:
            close = (np.abs(np.array(uniq_n) - a).max(axis=1) < 1e-9) & (np.abs(np.array(uniq_b) - b) < 1e-9 * scale)
            if close.any():
                continue
        uniq_n.append(a)
        uniq_b.append(b)
    return pts[keep], np.array(uniq_n), np.array(uniq_b), simplices


def _fan_moments(vertices, simplices):
    """Volume and centroid from the fan triangulation rooted at the vertex barycenter."""
    n = vertices.shape[1]
    apex = vertices.mean(axis=0)
    if n == 1:
        lo, hi = vertices[:, 0].min(), vertices[:, 0].max()
        return float(hi - lo), np.array([(lo + hi) / 2.0])
    faces = vertices[simplices]  # (f, n, n)
    vols = np.abs(np.linalg.det(faces - apex)) / math.factorial(n)
    cents = (faces.sum(axis=1) + apex) / (n + 1)
    total = float(vols.sum())
    centroid = (vols[:, None] * cents).sum(axis=0) / total
    return total, centroid


def convex_hull(points, dim=None):
    """Build the body spanned by ``points``; redundant points are dropped."""
    pts = np.asarray(points, dtype=float)
    if dim is not None and (pts.ndim != 2 or pts.shape[1] != dim):
        raise DimensionMismatch(f"points have shape {pts.shape}, expected dimension {dim}")
    return ConvexBody(pts)


def volume(body):
    return body.volume


def centroid(body):
    return body.centroid.copy()


def diameter(body):
    return body.diameter


def apply_map(body, amap):
    """Image of ``body`` under an affine map or similarity; vertex order is kept."""
    lin = np.asarray(amap.linear, dtype=float)
    if lin.shape != (body.dim, body.dim):
        raise DimensionMismatch(f"map of dimension {lin.shape[0]} applied to body of dimension {body.dim}")
    if abs(np.linalg.det(lin)) <= 1e-12:
        raise SingularMap("linear part of the map is singular")
    return ConvexBody(amap(body.vertices))


def support_function(body, direction):
    u = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise ZeroDirection("support direction must be non-zero")
    if abs(norm - 1.0) > 1e-9:
        raise ZeroDirection(f"support direction must be a unit vector (norm {norm:.6g})")
    return float(body.support(u))


def contains(body, x, tol=0.0):
    x = np.asarray(x, dtype=float)
    return bool(np.all(body.normals @ x <= body.offsets + tol))


def facet_margin(body, x):
    """Signed distance from ``x`` to the boundary; positive inside."""
    return float(np.min(body.offsets - body.normals @ np.asarray(x, dtype=float)))


@functools.lru_cache(maxsize=None)
def sphere_directions(n, count=DEFAULT_DIRECTIONS):
    """Deterministic quasi-uniform unit vectors in R^n.

    Uniform angles in 2D, a Fibonacci lattice in 3D, a fixed-seed Gaussian
    sample otherwise.  The returned array is read-only and shared.
    """
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif n == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    elif n == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * i
        dirs = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    else:
        g = np.random.default_rng(12345).standard_normal((count, n))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    dirs.setflags(write=False)
    return dirs


def _check_dims(a, b):
    if a.dim != b.dim:
        raise DimensionMismatch(f"bodies have dimensions {a.dim} and {b.dim}")


def pair_directions(a, b, directions=DEFAULT_DIRECTIONS):
    """Sphere sample plus the facet normals of both bodies.

    ``|h_a - h_b|`` has kinks where either support function switches
    vertex, i.e. at facet normals; including them removes the first-order
    sampling error there (in 2D the remaining error is second order).  The
    normals do not move under translation, so the set is the same for every
    shift of ``b``.
    """
    return np.vstack([sphere_directions(a.dim, directions), a.normals, b.normals])


def hausdorff_distance(a, b, directions=DEFAULT_DIRECTIONS):
    """Hausdorff distance as max |h_a(u) - h_b(u)| over a sampled direction set.

    The sampled maximum converges to the exact distance from below as the
    number of directions grows.
    """
    _check_dims(a, b)
    dirs = pair_directions(a, b, directions)
    return float(np.abs(a.support(dirs) - b.support(dirs)).max())


@dataclass(frozen=True, eq=False)
class TranslationClass:
    """A body modulo translations, represented by its centroid-centered copy."""

    representative: ConvexBody

    def __post_init__(self):
        rep = self.representative
        if np.abs(rep.centroid).max() > 1e-10 * rep.diameter:
            raise ValueError("class representative must have its centroid at the origin")

    @property
    def dim(self):
        return self.representative.dim


def translation_class(body):
    c = body.centroid
    return TranslationClass(ConvexBody(body.vertices - c))


def _as_body(k):
    return k.representative if isinstance(k, TranslationClass) else k


def class_distance(k1, k2, directions=DEFAULT_DIRECTIONS, max_iter=10_000):
    """Hausdorff distance between translation classes.

    Minimizes the convex function ``t -> max_u |h1(u) - h2(u) - <t, u>|``
    over shifts ``t`` starting from centroid alignment.  Accepts classes or
    plain bodies.
    """
    return align_translation(_as_body(k1), _as_body(k2), directions, max_iter)[0]


def align_translation(a, b, directions=DEFAULT_DIRECTIONS, max_iter=10_000):
    """Return ``(distance, t)`` with ``t`` minimizing hausdorff_distance(a, b + t)."""
    _check_dims(a, b)
    dirs = pair_directions(a, b, directions)
    diff = a.support(dirs) - b.support(dirs)
    t0 = a.centroid - b.centroid
    return _chebyshev_descent(diff, dirs, t0, max_iter)


def _chebyshev_descent(c, U, t0, max_iter):
    # epsilon-steepest descent: step against the min-norm element of the
    # hull of epsilon-active subgradients, exact line search on the envelope.
    t = np.array(t0, dtype=float)
    r = c - U @ t
    F = float(np.abs(r).max())
    scale = max(F, float(np.abs(c).max()), 1e-300)
    eps_min = 1e-14 * scale
    eps = 0.25 * F
    for _ in range(max_iter):
        if F <= eps_min:
            return F, t
        active = np.abs(r) >= F - eps
        g = -np.sign(r[active])[:, None] * U[active]
        d = _min_norm_point(g)
        step = 0.0
        if np.linalg.norm(d) > 1e-12:
            slope = U @ d
            step = _envelope_argmin(np.concatenate([r, -r]), np.concatenate([slope, -slope]))
        if step > 0:
            t_new = t - step * d
            r_new = c - U @ t_new
            F_new = float(np.abs(r_new).max())
            if F_new < F:
                t, r, F = t_new, r_new, F_new
                eps = min(eps, 0.25 * F)
                continue
        if eps <= eps_min:
            return F, t
        eps = max(0.01 * eps, eps_min)
    raise NoConvergence(f"translation alignment did not converge in {max_iter} iterations")


def _min_norm_point(g, tol=1e-12):
    """Minimum-norm point of the convex hull of the rows of ``g`` (Wolfe's method)."""
    if len(g) == 1:
        return g[0]
    sq = (g * g).sum(axis=1)
    scale = sq.max()
    support = [int(np.argmin(sq))]
    w = np.array([1.0])
    x = g[support[0]]
    for _ in range(10 * len(g) + 10):
        dots = g @ x
        j = int(np.argmin(dots))
        if x @ x - dots[j] <= tol * scale or j in support:
            break
        support.append(j)
        w = np.append(w, 0.0)
        while True:
            P = g[support]
            k = len(support)
            M = np.zeros((k + 1, k + 1))
            M[:k, :k] = P @ P.T
            M[:k, k] = M[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            v = np.linalg.lstsq(M, rhs, rcond=None)[0][:k]
            if np.all(v > tol):
                w = v
                break
            neg = v <= tol
            theta = np.min(w[neg] / (w[neg] - v[neg]))
            w = w + theta * (v - w)
            keep = w > tol
            support = [s for s, kp in zip(support, keep) if kp]
            w = w[keep]
            w = w / w.sum()
        x = w @ g[support]
    return x


def _envelope_argmin(a, b):
    """argmin over s >= 0 of max_k (a_k + b_k s), walking the upper envelope."""
    s = 0.0
    vals = a.copy()
    top = vals.max()
    ties = vals >= top - 1e-15 * max(1.0, abs(top))
    k = np.flatnonzero(ties)[np.argmax(b[ties])]
    for _ in range(len(a)):
        if b[k] >= 0:
            return s
        faster = b > b[k]
        gap = np.maximum(vals[k] - vals[faster], 0.0)
        dt = gap / (b[faster] - b[k])
        j = np.argmin(dt)
        ds = dt[j]
        cand = np.flatnonzero(faster)
        near = dt <= ds + 1e-15 * max(1.0, ds)
        k = cand[near][np.argmax(b[cand[near]])]
        s += ds
        vals = a + b * s
    return s


def normalize(body):
    """Unit-volume, centroid-centered copy of ``body`` plus the similarity back.

    Returns ``(TranslationClass, Similarity)`` such that applying the
    similarity to the representative reproduces ``body``.
    """
    n = body.dim
    lam = body.volume ** (1.0 / n)
    c = body.centroid
    rep = ConvexBody((body.vertices - c) / lam)
    # recenter the tiny residual offset left by rounding
    rep = ConvexBody(rep.vertices - rep.centroid)
    return TranslationClass(rep), Similarity(lam, np.eye(n), c)


def affine_image(body, linear, translation=None):
    """Shorthand for apply_map with a bare matrix."""
    t = np.zeros(body.dim) if translation is None else translation
    return apply_map(body, AffineMap(linear, t))

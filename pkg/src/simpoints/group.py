"""Orthogonal-group machinery: Haar sampling, symmetry groups, orbit alignment.

Bodies here are usually translation classes (centroid at the origin), so the
orthogonal group acts on them by plain matrix multiplication.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .body import (
    DEFAULT_DIRECTIONS,
    ConvexBody,
    TranslationClass,
    class_distance,
    sphere_directions,
)
from .errors import BudgetExhausted, ToleranceAmbiguity
from .maps import Similarity, orthonormalize

DEFAULT_BUDGET = 12
ANGLE_FLOOR = 1e-8
COARSE_FLOOR = 1e-3
ORBIT_THRESHOLD = 1e-5


@dataclass
class HaarSampler:
    """Seeded stream of Haar-distributed orthogonal matrices on O(n)."""

    dim: int
    seed: int = 0
    count: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        self._rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    def sample(self):
        g = self._rng.standard_normal((self.dim, self.dim))
        q, r = np.linalg.qr(g)
        # sign fix so that the distribution is Haar, not QR-biased
        d = np.sign(np.diag(r))
        d[d == 0] = 1.0
        self.count += 1
        return q * d

    def samples(self, m):
        return [self.sample() for _ in range(m)]

    def spawn(self, key):
        """Independent sampler whose stream is keyed by ``(seed, key)``."""
        seq = np.random.SeedSequence([self.seed, key])
        return HaarSampler(self.dim, int(seq.generate_state(1, dtype=np.uint64)[0]))


def haar_sample_orthogonal(sampler):
    return sampler.sample()


def rotate_class(k, q):
    """q applied to a translation class (rotation about the centroid)."""
    body = k.representative if isinstance(k, TranslationClass) else k
    return TranslationClass(ConvexBody(body.vertices @ np.asarray(q).T))


# ---------------------------------------------------------------------------
# symmetry groups


@dataclass(frozen=True, eq=False)
class SymmetryGroup:
    """Finite group of isometries mapping a body onto itself."""

    elements: tuple
    tol: float
    center: np.ndarray

    @property
    def order(self):
        return len(self.elements)

    @property
    def rotations(self):
        return np.array([g.rotation for g in self.elements])

    def contains_rotation(self, q, tol=1e-6):
        return any(np.abs(g.rotation - q).max() <= tol for g in self.elements)


def symmetry_group(body, tol=1e-8):
    """All isometries fixing the centroid that permute the vertices of ``body``.

    ``tol`` is relative to the diameter.  Candidate vertex correspondences
    are pruned by per-vertex distance signatures and pairwise distances on
    a frame of ``n`` independent vertices; each surviving correspondence
    gives a least-squares orthogonal map which is kept if it permutes all
    vertices within tolerance.
    """
    c = body.centroid
    X = body.vertices - c
    m, n = X.shape
    atol = tol * body.diameter
    D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    radii = np.linalg.norm(X, axis=1)
    sig = np.sort(D, axis=1)
    # prune loosely enough that near misses (up to 10 atol) still reach the
    # ambiguity check below
    slack = 20 * atol
    compat = (np.abs(radii[:, None] - radii[None, :]) <= slack) & (
        np.abs(sig[:, None, :] - sig[None, :, :]).max(-1) <= slack
    )
    frame = _independent_frame(X)
    B = X[frame]

    accepted, near_miss = [], []

    def extend(images):
        k = len(images)
        if k == n:
            yield list(images)
            return
        src = frame[k]
        for j in np.flatnonzero(compat[src]):
            if j in images:
                continue
            if all(abs(D[src, frame[l]] - D[j, images[l]]) <= slack for l in range(k)):
                yield from extend(images + [j])

    for images in extend([]):
        q = _procrustes(B, X[images])
        mapped = X @ q.T
        dist = np.sqrt(((mapped[:, None, :] - X[None, :, :]) ** 2).sum(-1))
        nearest = dist.argmin(axis=1)
        err = dist.min(axis=1).max()
        if len(set(nearest.tolist())) != m:
            continue
        if err <= atol:
            accepted.append(q)
        elif err <= 10 * atol:
            near_miss.append(err)

    if near_miss:
        raise ToleranceAmbiguity(
            f"a candidate isometry misses by {min(near_miss):.3e}, within 10x tolerance {atol:.3e}"
        )
    rotations = _dedupe_rotations(accepted, X, atol)
    rotations = _close(rotations, X, atol)
    elements = tuple(Similarity(1.0, q, c - q @ c) for q in rotations)
    group = SymmetryGroup(elements, tol, c.copy())
    assert all(g.scale == 1.0 for g in group.elements)
    assert any(np.abs(q - np.eye(n)).max() <= 1e-9 for q in rotations), "identity missing"
    return group


def _independent_frame(X):
    """n vertex indices whose centered positions are well-conditioned."""
    n = X.shape[1]
    chosen = []
    basis = np.zeros((0, n))
    for _ in range(n):
        resid = X - (X @ basis.T) @ basis if len(basis) else X
        norms = np.linalg.norm(resid, axis=1)
        norms[chosen] = -1.0
        i = int(np.argmax(norms))
        chosen.append(i)
        basis = np.vstack([basis, resid[i] / norms[i]])
    return chosen


def _procrustes(src, dst, keep_det=None):
    """Orthogonal Q minimizing sum ||Q src_i - dst_i||^2."""
    u, _, vt = np.linalg.svd(dst.T @ src)
    q = u @ vt
    if keep_det is not None and np.sign(np.linalg.det(q)) != np.sign(keep_det):
        u[:, -1] *= -1
        q = u @ vt
    return q


def _dedupe_rotations(rotations, X, atol):
    kept = []
    for q in rotations:
        for p in kept:
            gap = np.abs(X @ (q - p).T).max()
            if gap <= atol:
                break
            if gap < 10 * atol:
                raise ToleranceAmbiguity(f"two candidate isometries differ by only {gap:.3e}")
        else:
            kept.append(q)
    return kept


def _close(rotations, X, atol):
    rots = list(rotations)
    changed = True
    while changed:
        changed = False
        for a, b in itertools.product(list(rots), repeat=2):
            prod = a @ b
            if not any(np.abs(X @ (prod - r).T).max() <= 10 * atol for r in rots):
                rots.append(orthonormalize(prod))
                changed = True
    return rots


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """point + span(basis rows); basis rows are orthonormal."""

    point: np.ndarray
    basis: np.ndarray

    @property
    def dim(self):
        return len(self.basis)

    def project(self, x):
        d = np.asarray(x, dtype=float) - self.point
        return self.point + (d @ self.basis.T) @ self.basis

    def distance(self, x):
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.project(x)))


def fixed_point_set(group):
    """Affine subspace of points fixed by every element of ``group``."""
    n = group.center.size
    A = np.vstack([g.rotation - np.eye(n) for g in group.elements])
    b = np.concatenate([-g.translation for g in group.elements])
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    scale = max(1.0, float(np.abs(b).max()), float(np.abs(group.center).max()))
    # a finite isometry group always fixes the centroid
    assert np.abs(A @ x - b).max() <= 1e-8 * scale, "inconsistent fixed-point system"
    _, s, vt = np.linalg.svd(A)
    s = np.concatenate([s, np.zeros(n - s.size)]) if s.size < n else s
    basis = vt[s <= 1e-8]
    return AffineSubspace(x, basis)


# ---------------------------------------------------------------------------
# orbit alignment


class OrbitSearch(NamedTuple):
    best_q: np.ndarray
    residual: float
    minima: list  # (objective, Q) per distinct local minimum, ascending


class _AlignObjective:
    """Symmetrized centered Hausdorff residual between k and Q k0."""

    def __init__(self, vk, vk0, directions):
        self.vk, self.vk0 = vk, vk0
        self.dirs_t = sphere_directions(vk.shape[1], directions).T
        self.hk = (vk @ self.dirs_t).max(axis=0)
        self.hk0 = (vk0 @ self.dirs_t).max(axis=0)

    def __call__(self, q):
        h1 = (self.vk0 @ (q.T @ self.dirs_t)).max(axis=0)
        h2 = (self.vk @ (q @ self.dirs_t)).max(axis=0)
        return 0.5 * (np.abs(self.hk - h1).max() + np.abs(self.hk0 - h2).max())


def _pca_frames(vk, vk0):
    """Candidate alignments from matching principal axes, all sign choices."""
    n = vk.shape[1]
    _, ek = np.linalg.eigh(vk.T @ vk)
    _, ek0 = np.linalg.eigh(vk0.T @ vk0)
    out = []
    for signs in itertools.product((1.0, -1.0), repeat=n):
        out.append(ek @ np.diag(signs) @ ek0.T)
    return out


def _skew_basis(n):
    basis = []
    for i, j in itertools.combinations(range(n), 2):
        e = np.zeros((n, n))
        e[i, j], e[j, i] = -1.0, 1.0
        basis.append(e)
    return basis


def _descend(q, f, n, floor=ANGLE_FLOOR, step=0.25, rng=None, fq=None):
    """Pattern search on O(n) by right multiplication with exp(step * S).

    Each poll tries the coordinate generators and, in dimension >= 3, a
    random orthonormal basis of skew directions (both signs), which keeps
    the search from stalling on the kinks of the max-type objective.
    """
    fq = f(q) if fq is None else fq
    gens = _skew_basis(n)
    if not gens:
        return q, fq, step
    m = len(gens)
    while step >= floor:
        polls = [(g, None) for g in gens]
        if m > 1 and rng is not None:
            mix, _ = np.linalg.qr(rng.standard_normal((m, m)))
            polls += [(sum(c * g for c, g in zip(col, gens)), None) for col in mix.T]
        moved = False
        for gen, _ in polls:
            for sgn in (1.0, -1.0):
                cand = q @ expm_skew(sgn * step * gen)
                fc = f(cand)
                if fc < fq:
                    q, fq, moved = cand, fc, True
                    break
            if moved:
                break
        if not moved:
            step *= 0.5
    return orthonormalize(q), fq, step


def expm_skew(a):
    """Matrix exponential of a skew-symmetric matrix (Rodrigues in 2D/3D)."""
    n = a.shape[0]
    if n == 2:
        t = a[1, 0]
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, -s], [s, c]])
    if n == 3:
        w = np.array([a[2, 1], a[0, 2], a[1, 0]])
        th = float(np.linalg.norm(w))
        if th < 1e-300:
            return np.eye(3)
        k = a / th
        return np.eye(3) + math.sin(th) * k + (1.0 - math.cos(th)) * (k @ k)
    from scipy.linalg import expm

    return expm(a)


def _polish(q, fq, f, vk, vk0):
    # ICP-style refinement on nearest-vertex correspondences
    if len(vk) != len(vk0):
        return q, fq
    det = np.linalg.det(q)
    for _ in range(5):
        moved = vk0 @ q.T
        dist = ((moved[:, None, :] - vk[None, :, :]) ** 2).sum(-1)
        nn = dist.argmin(axis=1)
        if len(set(nn.tolist())) != len(nn):
            break
        cand = _procrustes(vk0, vk[nn], keep_det=det)
        fc = f(cand)
        if not fc < fq:
            break
        q, fq = cand, fc
    return q, fq


def orbit_search(k, k0, sampler, budget=DEFAULT_BUDGET, directions=DEFAULT_DIRECTIONS):
    """Multi-start search for Q minimizing the residual between k and Q k0.

    Starts are the principal-axis matchings followed by ``budget`` Haar
    samples.  Every start gets a coarse pattern search; the ones close to
    the best are refined with step halving down to ``ANGLE_FLOOR`` and then
    by nearest-vertex Procrustes.  The search runs in both directions (k
    against k0 and k0 against k, transposed back) so that swapping the
    arguments returns the transposed rotation and the same residual.  The
    reported residual is the symmetrized class distance at the best rotation.
    """
    vk = _centered(k)
    vk0 = _centered(k0)
    f = _AlignObjective(vk, vk0, directions)
    haar = [sampler.sample() for _ in range(budget)]
    found = _local_minima(vk, vk0, f, haar)
    if vk.shape != vk0.shape or not np.array_equal(vk, vk0):
        back = _local_minima(vk0, vk, _AlignObjective(vk0, vk, directions), haar)
        found += [(f(q.T), i + len(haar) + 2**vk.shape[1], q.T.copy()) for _, i, q in back]
    found.sort(key=lambda item: (item[0], item[1]))
    minima = []
    for fq, _, q in found:
        if not any(np.abs(q - p).max() < 1e-6 for _, p in minima):
            minima.append((fq, q))
    best_q = minima[0][1]
    return OrbitSearch(best_q, alignment_residual(vk, vk0, best_q, directions), minima)


def _local_minima(vk, vk0, f, haar):
    n = vk.shape[1]
    starts = _pca_frames(vk, vk0) + haar
    coarse = []
    for i, q in enumerate(starts):
        q, fq, step = _descend(q, f, n, floor=COARSE_FLOOR, rng=np.random.default_rng(i))
        coarse.append((fq, i, q, step))
    coarse.sort(key=lambda item: (item[0], item[1]))
    best = coarse[0][0]
    found = []
    for fq, i, q, step in coarse:
        if fq <= best + max(0.1 * best, 1e-3):
            q, fq, _ = _descend(q, f, n, step=step, rng=np.random.default_rng(10_000 + i), fq=fq)
            q, fq = _polish(q, fq, f, vk, vk0)
        found.append((fq, i, q))
    return found


def alignment_residual(vk, vk0, q, directions=DEFAULT_DIRECTIONS):
    """0.5 * (class_distance(k, Q k0) + class_distance(Q^T k, k0))."""
    a, a0 = ConvexBody(vk), ConvexBody(vk0)
    d1 = class_distance(a, ConvexBody(vk0 @ q.T), directions)
    d2 = class_distance(ConvexBody(vk @ q), a0, directions)
    return 0.5 * (d1 + d2)


def _centered(k):
    body = k.representative if isinstance(k, TranslationClass) else k
    return body.vertices - body.centroid


def orbit_align(k, k0, sampler, budget=DEFAULT_BUDGET, threshold=None, directions=DEFAULT_DIRECTIONS):
    """Best orthogonal Q aligning Q k0 with k, and its residual.

    Raises BudgetExhausted when ``threshold`` is given and the best residual
    stays above it.
    """
    res = orbit_search(k, k0, sampler, budget, directions)
    if threshold is not None and res.residual > threshold:
        raise BudgetExhausted(
            f"best residual {res.residual:.3e} above threshold {threshold:.3e}", res.best_q, res.residual
        )
    return res.best_q, res.residual


def group_average_scalar(f, k, sampler, m):
    """Monte Carlo Haar average of f over the orbit of k: mean of f(Q_j k)."""
    if m < 1:
        raise ValueError("need at least one sample")
    vals = [float(f(rotate_class(k, sampler.sample()))) for _ in range(m)]
    # shifted mean: exact for constant f
    base = vals[0]
    return base + math.fsum(v - base for v in vals) / m

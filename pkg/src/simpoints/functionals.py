"""Invariant-point functionals and the harness that checks their equivariance.

Built-ins are the centroid and the center of the minimum-volume enclosing
ellipsoid.  :func:`blend_functional` builds a similarity-equivariant point
that takes a prescribed value on one anchor body: near the anchor's orbit
it follows the rotated anchor point, far from it it is the centroid, and a
smooth cutoff of the orbit residual blends the two.
"""

import csv
import functools
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .body import (
    ConvexBody,
    apply_map,
    centroid,
    class_distance,
    contains,
    facet_margin,
    normalize,
)
from .errors import ClassMismatch, InteriorViolation, NoConvergence
from .group import (
    DEFAULT_BUDGET,
    HaarSampler,
    alignment_residual,
    orbit_search,
    rotate_class,
    symmetry_group,
)
from .maps import AffineMap, Similarity

AFFINE = "affine"
SIMILARITY = "similarity"
MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True)
class InvariantFunctional:
    """A named map body -> point with a declared equivariance class."""

    name: str
    equivariance: str
    evaluator: Callable = field(repr=False)
    of_body: bool = True
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.equivariance not in (AFFINE, SIMILARITY):
            raise ValueError(f"unknown equivariance class {self.equivariance!r}")

    def __call__(self, body):
        return np.asarray(self.evaluator(body), dtype=float)


@functools.lru_cache(maxsize=128)
def cached_symmetry_group(body, tol=1e-8):
    return symmetry_group(body, tol)


def centroid_functional():
    return InvariantFunctional("centroid", AFFINE, centroid)


# ---------------------------------------------------------------------------
# minimum-volume enclosing ellipsoid


def mvee(points, eps=1e-7, max_iter=100_000):
    """Minimum-volume enclosing ellipsoid of a point cloud.

    Khachiyan's barycentric ascent with Wolfe-Atwood away steps, started
    from uniform weights.  Every step depends only on the affine-invariant
    quantities ``q_i^T M^{-1} q_i`` so the iterates are affinely equivariant.

    Returns
    -------
    center : ndarray, shape (n,)
    shape : ndarray, shape (n, n)
        The ellipsoid is ``{x : (x - center)^T shape (x - center) <= 1}``.
    """
    X = np.asarray(points, dtype=float)
    m, n = X.shape
    d = n + 1
    Q = np.column_stack([X, np.ones(m)])
    u = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        M = (Q.T * u) @ Q
        g = np.einsum("ij,ji->i", Q, np.linalg.solve(M, Q.T))
        j = int(np.argmax(g))
        support = np.flatnonzero(u > 0)
        k = support[int(np.argmin(g[support]))]
        up = g[j] / d - 1.0
        down = 1.0 - g[k] / d
        if max(up, down) <= eps:
            break
        if up >= down:
            tau = (g[j] - d) / (d * (g[j] - 1.0))
            u *= 1.0 - tau
            u[j] += tau
        else:
            tau = min((d - g[k]) / (d * (g[k] - 1.0)), u[k] / (1.0 - u[k]))
            u *= 1.0 + tau
            u[k] -= tau
            if u[k] < 1e-15:
                u[k] = 0.0
    else:
        raise NoConvergence(f"MVEE did not reach gap {eps} in {max_iter} iterations")
    center = u @ X
    cov = (X.T * u) @ X - np.outer(center, center)
    return center, np.linalg.inv(cov) / n


def mvee_center():
    return InvariantFunctional("mvee", AFFINE, lambda body: mvee(body.vertices)[0])


BUILTINS = {"centroid": centroid_functional, "mvee": mvee_center}


# ---------------------------------------------------------------------------
# blend construction


def bump(d, eps_in, eps_out):
    """1 on [0, eps_in], 0 on [eps_out, inf), quintic smoothstep in between."""
    if d <= eps_in:
        return 1.0
    if d >= eps_out:
        return 0.0
    x = (d - eps_in) / (eps_out - eps_in)
    return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


@dataclass(frozen=True, eq=False)
class BlendSpec:
    """Parameters of the anchored blend functional.

    ``eps_in``/``eps_out`` are orbit-residual radii measured on unit-volume
    classes.  ``haar_budget`` is the number of Haar samples in soft mode;
    ``align_budget`` the number of random starts for the orbit search.
    """

    anchor: ConvexBody
    target: np.ndarray
    eps_in: float
    eps_out: float
    kernel_width: float = 0.05
    haar_budget: int = 256
    seed: int = 0
    mode: str = "hard"
    align_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        x0 = np.asarray(self.target, dtype=float).reshape(-1)
        object.__setattr__(self, "target", x0)
        K0 = self.anchor
        if x0.size != K0.dim:
            raise ValueError(f"target has dimension {x0.size}, anchor {K0.dim}")
        if self.mode not in ("hard", "soft"):
            raise ValueError(f"mode must be 'hard' or 'soft', got {self.mode!r}")
        if not 0 < self.eps_in < self.eps_out:
            raise ValueError("need 0 < eps_in < eps_out")
        if self.kernel_width <= 0 or self.haar_budget < 1 or self.align_budget < 0:
            raise ValueError("kernel width and budgets must be positive")
        margin = facet_margin(K0, x0)
        if margin < 1e-6 * K0.diameter:
            raise ValueError(f"target must lie in the interior of the anchor (margin {margin:.3e})")
        group = cached_symmetry_group(K0)
        moved = max(float(np.linalg.norm(g(x0) - x0)) for g in group.elements)
        if moved > 1e-8 * K0.diameter:
            raise ValueError(f"target is not fixed by the anchor's symmetry group (moves by {moved:.3e})")

    def to_dict(self):
        return {
            "anchor": {"dim": self.anchor.dim, "vertices": self.anchor.vertices.tolist()},
            "target": self.target.tolist(),
            "eps_in": self.eps_in,
            "eps_out": self.eps_out,
            "kernel_width": self.kernel_width,
            "haar_budget": self.haar_budget,
            "seed": self.seed,
            "mode": self.mode,
            "align_budget": self.align_budget,
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["anchor"] = ConvexBody(np.array(data["anchor"]["vertices"], dtype=float))
        data["target"] = np.array(data["target"], dtype=float)
        return cls(**data)


def default_radii(anchor, target, seed=0, align_budget=DEFAULT_BUDGET):
    """Cutoff radii from the anchor's self-alignment gap and the target's margin.

    ``eps_out`` is the smaller of a tenth of the lowest non-trivial
    self-alignment residual and a quarter of the target's distance to the
    boundary (both on the unit-volume class); ``eps_in = eps_out / 2``.
    """
    k0, S0 = normalize(anchor)
    x0 = S0.inverse()(np.asarray(target, dtype=float))
    margin = facet_margin(k0.representative, x0)
    gap = _self_alignment_gap(k0.representative, seed, align_budget)
    eps_out = min(0.1 * gap, 0.25 * margin)
    return 0.5 * eps_out, eps_out


@functools.lru_cache(maxsize=32)
def _self_alignment_gap(k0body, seed, budget):
    group = cached_symmetry_group(k0body)
    search = orbit_search(k0body, k0body, HaarSampler(k0body.dim, seed), budget)
    for fq, q in search.minima:
        if not group.contains_rotation(q, tol=1e-4):
            return float(fq)
    return math.inf


def make_blend_spec(anchor, target, mode="hard", seed=0, **overrides):
    """BlendSpec with default cutoff radii filled in."""
    budget = overrides.get("align_budget", DEFAULT_BUDGET)
    if "eps_in" not in overrides or "eps_out" not in overrides:
        eps_in, eps_out = default_radii(anchor, target, seed, budget)
        overrides.setdefault("eps_in", eps_in)
        overrides.setdefault("eps_out", eps_out)
    return BlendSpec(anchor, np.asarray(target, dtype=float), mode=mode, seed=seed, **overrides)


@functools.lru_cache(maxsize=256)
def _cached_search(khat, k0, seed, budget):
    return orbit_search(khat, k0, HaarSampler(khat.dim, seed), budget)


class _UnitBlend:
    """The blend on unit-volume centered bodies; the centroid term vanishes there."""

    def __init__(self, spec):
        self.spec = spec
        k0, S0 = normalize(spec.anchor)
        self.k0 = k0.representative
        self.x0 = S0.inverse()(spec.target)
        self.group0 = cached_symmetry_group(self.k0)

    def __call__(self, khat):
        return self.evaluate(khat)[0]

    def evaluate(self, khat):
        """Return ``(point, info)`` with the orbit residual and cutoff weight."""
        spec = self.spec
        n = khat.dim
        search = _cached_search(khat, self.k0, spec.seed, spec.align_budget)
        d = search.residual
        phi = bump(d, spec.eps_in, spec.eps_out)
        info = {"residual": d, "phi": phi}
        if phi == 0.0:
            return np.zeros(n), info
        if spec.mode == "hard":
            delta = self._hard_section(khat, search)
        else:
            delta = self._soft_section(khat)
        return phi * delta, info

    def _hard_section(self, khat, search):
        vk = khat.vertices - khat.centroid
        vk0 = self.k0.vertices - self.k0.centroid
        cands = [search.best_q @ g.rotation for g in self.group0.elements]
        resid = [alignment_residual(vk, vk0, q) for q in cands]
        cutoff = search.residual + 1e-7
        images = [q @ self.x0 for q, r in zip(cands, resid) if r <= cutoff]
        if not images:
            images = [search.best_q @ self.x0]
        best_f = search.minima[0][0]
        for fq, q in search.minima[1:]:
            if fq <= best_f + 1e-7 and not any(np.abs(q - c).max() <= 1e-4 for c in cands):
                warnings.warn(
                    f"orbit alignment tie: distinct rotations reach residual {fq:.3e}", RuntimeWarning, stacklevel=4
                )
                break
        return np.mean(images, axis=0)

    def _soft_section(self, khat):
        spec = self.spec
        sampler = HaarSampler(khat.dim, spec.seed).spawn(1)
        qs = sampler.samples(spec.haar_budget)
        r = np.array([class_distance(khat, rotate_class(self.k0, q)) for q in qs])
        logw = -((r / spec.kernel_width) ** 2)
        w = np.exp(logw - logw.max())
        pts = np.array([q @ self.x0 for q in qs])
        return (w @ pts) / w.sum()


def unit_functional(fn, name, equivariance=SIMILARITY):
    """Wrap ``fn`` defined on unit-volume centered bodies as a restricted functional."""

    def evaluator(body):
        if abs(body.volume - 1.0) > 1e-9 or np.abs(body.centroid).max() > 1e-9 * body.diameter:
            raise ValueError(f"{name} is defined only on unit-volume centered bodies")
        return fn(body)

    return InvariantFunctional(name, equivariance, evaluator, of_body=False, metadata={"unit_volume": True})


def unit_blend(spec):
    core = _UnitBlend(spec)
    return unit_functional(core, f"unit-blend-{spec.mode}"), core


def _extend_point(body, fn):
    khat, S = normalize(body)
    return body.centroid + S.scale * fn(khat.representative)


def similarity_extend(p_unit, name=None):
    """Extend a functional on unit-volume centered bodies to all bodies.

    p(F) = c(F) + V^(1/n) p_unit(V^(-1/n) (F - c(F))), equivariant under
    similarities whenever ``p_unit`` is O(n)-equivariant.
    """

    def evaluator(body):
        return _extend_point(body, p_unit)

    return InvariantFunctional(name or f"extend({p_unit.name})", SIMILARITY, evaluator, of_body=p_unit.of_body)


def blend_functional(spec):
    """Similarity-equivariant point equal to ``spec.target`` on ``spec.anchor``.

    Raises InteriorViolation at evaluation time when the blended point
    leaves the body, which means ``eps_out`` reaches beyond the
    neighbourhood of the orbit where the rotated target stays inside.
    """
    core = _UnitBlend(spec)

    def evaluator(body):
        info = {}

        def unit_point(khat):
            point, info_ = core.evaluate(khat)
            info.update(info_)
            return point

        p = _extend_point(body, unit_point)
        phi = info["phi"]
        if phi > 0.0 and not contains(body, p, MEMBERSHIP_TOL * body.diameter):
            raise InteriorViolation(f"blended point left the body (phi={phi:.3f}); decrease eps_out")
        return p

    meta = {k: v for k, v in spec.to_dict().items() if k not in ("anchor",)}
    return InvariantFunctional(f"blend-{spec.mode}", SIMILARITY, evaluator, of_body=True, metadata=meta)


def blend_diagnostics(spec, body):
    """Orbit residual and cutoff weight of a BlendSpec at ``body``."""
    khat, _ = normalize(body)
    return _UnitBlend(spec).evaluate(khat.representative)[1]


# ---------------------------------------------------------------------------
# equivariance harness


@dataclass
class ReportRow:
    body_id: int
    map_id: int
    residual: float
    membership: bool


@dataclass
class EquivarianceReport:
    functional: str
    tol: float
    rows: list

    @property
    def max_residual(self):
        return max((r.residual for r in self.rows), default=0.0)

    @property
    def membership_ok(self):
        return all(r.membership for r in self.rows)

    @property
    def passed(self):
        return self.max_residual <= self.tol and self.membership_ok

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["body_id", "map_id", "residual", "membership"])
        for r in self.rows:
            w.writerow([r.body_id, r.map_id, repr(r.residual), str(r.membership).lower()])
        return buf.getvalue()

    def summary(self):
        return {
            "functional": self.functional,
            "tol": self.tol,
            "count": len(self.rows),
            "max_residual": self.max_residual,
            "membership_ok": self.membership_ok,
            "passed": self.passed,
        }

    def to_json(self):
        return json.dumps(self.summary(), sort_keys=True, indent=2)


def _check_map_class(p, amap):
    if p.equivariance == SIMILARITY and amap.as_similarity() is None:
        raise ClassMismatch(f"{p.name} is similarity-equivariant; got a non-similarity affine map")


def equivariance_report(p, bodies, maps, tol):
    """Residuals ||p(A K) - A p(K)|| / diam(K) over all bodies and maps.

    Membership ``p(.) in .`` is checked on every evaluated body when ``p``
    is flagged as a point of the body.
    """
    for amap in maps:
        _check_map_class(p, amap)
    rows = []
    for bi, K in enumerate(bodies):
        pK = p(K)
        base_in = not p.of_body or contains(K, pK, MEMBERSHIP_TOL * K.diameter)
        for mi, amap in enumerate(maps):
            AK = apply_map(K, amap)
            pAK = p(AK)
            resid = float(np.linalg.norm(pAK - amap(pK))) / K.diameter
            member = base_in and (not p.of_body or contains(AK, pAK, MEMBERSHIP_TOL * AK.diameter))
            rows.append(ReportRow(bi, mi, resid, member))
    return EquivarianceReport(p.name, tol, rows)


def random_affine(n, rng, max_cond=10.0, shift=5.0):
    """Random invertible affine map with condition number <= max_cond."""
    u, _ = np.linalg.qr(rng.standard_normal((n, n)))
    v, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = np.exp(rng.uniform(0.0, np.log(max_cond), n))
    s[0], s[-1] = 1.0, max_cond if n > 1 else 1.0
    scale = rng.uniform(0.5, 2.0)
    return AffineMap(scale * (u * s) @ v.T / math.sqrt(max_cond), rng.uniform(-shift, shift, n))


def random_similarity(n, rng, scale_range=(0.1, 10.0), shift=5.0):
    """Random similarity with log-uniform scale and Haar rotation."""
    lo, hi = scale_range
    lam = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    q = HaarSampler(n, int(rng.integers(2**63))).sample()
    return Similarity(lam, q, rng.uniform(-shift, shift, n))

"""Suspensions over lower-dimensional bodies and the fixed-slice verification.

The suspension of a base K' (recentered at its centroid and placed in the
hyperplane x_1 = 0) is the hull of K' and the apexes +-e_1, so the slice at
height x_1 = s is (1 - |s|) K'.  When K' has no symmetry but the identity,
the only non-trivial symmetry of the suspension is the reflection
x_1 -> -x_1 and every similarity-invariant point lands in the slice x_1 = 0.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection

from .body import ConvexBody, contains
from .errors import DegenerateBase, DegenerateInput, ResampleExhausted, VerificationFailure
from .functionals import blend_functional, cached_symmetry_group, make_blend_spec
from .group import fixed_point_set

CONFINEMENT_TOL = 1e-6
ACHIEVABILITY_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class SuspensionBody:
    base: ConvexBody  # recentered so its centroid is the origin
    body: ConvexBody
    offset: np.ndarray  # centroid of the base as supplied

    @property
    def dim(self):
        return self.body.dim

    @property
    def apexes(self):
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        return np.array([e1, -e1])

    def embed(self, y):
        """Point of the base (recentered coordinates) as a point of the body."""
        return np.concatenate([[0.0], np.asarray(y, dtype=float)])


def suspend(base):
    """Hull of the recentered base at x_1 = 0 and the apexes +-e_1."""
    try:
        base = base if isinstance(base, ConvexBody) else ConvexBody(base)
    except DegenerateInput as exc:
        raise DegenerateBase(str(exc)) from None
    offset = base.centroid.copy()
    centered = ConvexBody(base.vertices - offset)
    n = base.dim + 1
    embedded = np.column_stack([np.zeros(len(centered.vertices)), centered.vertices])
    apex = np.zeros((2, n))
    apex[0, 0], apex[1, 0] = 1.0, -1.0
    return SuspensionBody(centered, ConvexBody(np.vstack([embedded, apex])), offset)


def cross_section(body, height):
    """Slice {y : (height, y) in body} computed from the half-space description."""
    a1 = body.normals[:, 0]
    A = body.normals[:, 1:]
    b = body.offsets - a1 * height
    if A.shape[1] == 1:
        a = A[:, 0]
        lo = max((bi / ai for ai, bi in zip(a, b) if ai < -1e-14), default=-np.inf)
        hi = min((bi / ai for ai, bi in zip(a, b) if ai > 1e-14), default=np.inf)
        return ConvexBody([[lo], [hi]])
    # Chebyshev center gives a strictly interior point for qhull
    norms = np.linalg.norm(A, axis=1)
    m = A.shape[1]
    res = linprog(
        np.r_[np.zeros(m), -1.0],
        A_ub=np.column_stack([A, norms]),
        b_ub=b,
        bounds=[(None, None)] * m + [(0, None)],
        method="highs",
    )
    if res.status != 0 or res.x[-1] <= 0:
        raise DegenerateInput(f"slice at height {height} is empty or flat")
    hs = HalfspaceIntersection(np.column_stack([A, -b]), res.x[:m])
    return ConvexBody(hs.intersections)


def _strictly_convex(pts):
    e = np.roll(pts, -1, axis=0) - pts
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    return bool(np.all(cross > 0) or np.all(cross < 0))


def asymmetric_profile(m=64, seed=0, max_tries=100):
    """Convex m-gon sampled from a smooth radial profile with trivial symmetry.

    r(theta) = 1 + 0.3 * sum_{j=2..4} a_j cos(j theta + b_j), with seeded
    a_j ~ U(-1, 1) / j^2 and b_j ~ U(0, 2 pi).  Draws that are not strictly
    convex or that have a non-trivial isometry are rejected.
    """
    if m < 12:
        raise ValueError("profile needs at least 12 vertices")
    rng = np.random.default_rng(seed)
    theta = 2.0 * np.pi * np.arange(m) / m
    j = np.arange(2, 5)
    for _ in range(max_tries):
        a = rng.uniform(-1.0, 1.0, 3) / j**2
        b = rng.uniform(0.0, 2.0 * np.pi, 3)
        r = 1.0 + 0.3 * (a[:, None] * np.cos(j[:, None] * theta + b[:, None])).sum(axis=0)
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        if not _strictly_convex(pts):
            continue
        body = ConvexBody(pts)
        if len(body.vertices) == m and cached_symmetry_group(body).order == 1:
            return body
    raise ResampleExhausted(f"no asymmetric convex profile found in {max_tries} draws")


def interior_grid(base, k=5, shrink=0.8):
    """k^(n) interior points: a square lattice mapped radially into the body."""
    c = base.centroid
    n = base.dim
    ticks = np.linspace(-1.0, 1.0, k) if k > 1 else np.zeros(1)
    out = []
    for g in np.array(np.meshgrid(*[ticks] * n, indexing="ij")).reshape(n, -1).T:
        level = np.abs(g).max()
        if level == 0:
            out.append(c.copy())
            continue
        u = g / np.linalg.norm(g)
        proj = base.normals @ u
        rho = np.min((base.offsets - base.normals @ c)[proj > 0] / proj[proj > 0])
        out.append(c + shrink * level * rho * u)
    return np.array(out)


def verify_fixed_slice(susp, functionals, grid, tol=1e-8):
    """Check the fixed-slice claims for a suspension.

    (i) the symmetry group has order 2 with the reflection x_1 -> -x_1;
    (ii) its fixed set is the hyperplane x_1 = 0;
    (iii) every supplied similarity-class functional lands in the base slice;
    (iv) every grid point of the base is reproduced by a hard-mode blend
    anchored at the suspension.

    Returns the report dict; raises VerificationFailure naming the first
    failing clause (the partial report is attached).
    """
    body = susp.body
    n = body.dim
    diam = body.diameter
    report = {"clauses": {}}

    def fail(clause, msg):
        report["clauses"][clause] = False
        report["passed"] = False
        raise VerificationFailure(clause, msg, report)

    group = cached_symmetry_group(body, tol)
    report["group_order"] = group.order
    reflection = np.eye(n)
    reflection[0, 0] = -1.0
    if group.order != 2:
        fail("i", f"symmetry group has order {group.order}, expected 2")
    other = next(g for g in group.elements if np.abs(g.rotation - np.eye(n)).max() > 1e-6)
    if np.abs(other.rotation - reflection).max() > 1e-6 or np.abs(other.translation).max() > 1e-6 * diam:
        fail("i", "non-trivial symmetry is not the reflection x_1 -> -x_1")
    report["clauses"]["i"] = True

    fixed = fixed_point_set(group)
    report["fixed_dim"] = fixed.dim
    if fixed.dim != n - 1 or np.abs(fixed.basis[:, 0]).max() > 1e-8 or abs(fixed.point[0]) > 1e-8 * diam:
        fail("ii", f"fixed set of dimension {fixed.dim} is not the hyperplane x_1 = 0")
    report["clauses"]["ii"] = True

    rows = []
    for p in functionals:
        if p.equivariance not in ("similarity", "affine"):
            fail("iii", f"{p.name} has no usable equivariance class")
        v = p(body)
        inside = contains(susp.base, v[1:], 1e-8 * diam)
        rows.append({"functional": p.name, "point": v.tolist(), "x1": float(v[0]), "in_base": inside})
    report["functionals"] = rows
    report["confinement_max"] = max((abs(r["x1"]) for r in rows), default=0.0)
    for r in rows:
        if abs(r["x1"]) > CONFINEMENT_TOL or not r["in_base"]:
            fail("iii", f"{r['functional']} value {r['point']} is not in the base slice")
    report["clauses"]["iii"] = True

    achieved = []
    report["achievability"] = achieved
    for y in np.atleast_2d(np.asarray(grid, dtype=float)):
        x0 = susp.embed(y)
        p = blend_functional(make_blend_spec(body, x0, mode="hard"))
        resid = float(np.linalg.norm(p(body) - x0)) / diam
        achieved.append({"anchor": x0.tolist(), "residual": resid})
        if resid > ACHIEVABILITY_TOL:
            fail("iv", f"blend anchored at {x0.tolist()} returns residual {resid:.3e}")
    report["clauses"]["iv"] = True
    report["passed"] = True
    return report

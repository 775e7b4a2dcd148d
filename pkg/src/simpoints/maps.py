"""Affine maps and similarities acting on points of R^n."""

from dataclasses import dataclass

import numpy as np

from .errors import SingularMap

ORTHO_TOL = 1e-10


def orthonormalize(q):
    """Nearest orthogonal matrix (polar factor) to ``q``."""
    u, _, vt = np.linalg.svd(np.asarray(q, dtype=float))
    return u @ vt


def _apply(linear, translation, x):
    x = np.asarray(x, dtype=float)
    return x @ linear.T + translation


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> linear @ x + translation."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = np.atleast_2d(np.asarray(self.linear, dtype=float))
        t = np.asarray(self.translation, dtype=float).reshape(-1)
        if lin.shape != (t.size, t.size):
            raise ValueError(f"linear part {lin.shape} does not match translation of size {t.size}")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", t)

    @property
    def dim(self):
        return self.translation.size

    @property
    def det(self):
        return float(np.linalg.det(self.linear))

    def __call__(self, x):
        return _apply(self.linear, self.translation, x)

    def compose(self, other):
        """self o other."""
        return AffineMap(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def inverse(self):
        if abs(self.det) <= 1e-12:
            raise SingularMap(f"determinant {self.det:.3e} is not invertible")
        inv = np.linalg.inv(self.linear)
        return AffineMap(inv, -inv @ self.translation)

    def as_similarity(self, tol=1e-9):
        """Return the equivalent Similarity, or None if the linear part is not lambda*Q."""
        gram = self.linear.T @ self.linear
        lam2 = np.trace(gram) / self.dim
        if lam2 <= 0 or np.abs(gram - lam2 * np.eye(self.dim)).max() > tol * lam2:
            return None
        lam = float(np.sqrt(lam2))
        return Similarity(lam, orthonormalize(self.linear / lam), self.translation)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n), np.zeros(n))


@dataclass(frozen=True, eq=False)
class Similarity:
    """x -> scale * rotation @ x + translation with rotation orthogonal.

    ``rotation`` may have determinant -1; the name follows common usage.
    """

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.rotation, dtype=float))
        t = np.asarray(self.translation, dtype=float).reshape(-1)
        scale = float(self.scale)
        if not scale > 0:
            raise ValueError(f"similarity scale must be positive, got {scale}")
        if q.shape != (t.size, t.size):
            raise ValueError(f"rotation {q.shape} does not match translation of size {t.size}")
        resid = np.abs(q.T @ q - np.eye(t.size)).max()
        if resid > ORTHO_TOL:
            raise ValueError(f"rotation is not orthogonal (residual {resid:.2e})")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @property
    def dim(self):
        return self.translation.size

    @property
    def linear(self):
        return self.scale * self.rotation

    @property
    def det(self):
        return float(np.linalg.det(self.linear))

    def __call__(self, x):
        return _apply(self.linear, self.translation, x)

    def compose(self, other):
        """self o other, with the rotation re-orthonormalized."""
        return Similarity(
            self.scale * other.scale,
            orthonormalize(self.rotation @ other.rotation),
            self.scale * (self.rotation @ other.translation) + self.translation,
        )

    def inverse(self):
        qt = self.rotation.T
        return Similarity(1.0 / self.scale, qt, -(qt @ self.translation) / self.scale)

    def as_affine(self):
        return AffineMap(self.linear, self.translation)

    def as_similarity(self, tol=None):
        return self

    @classmethod
    def identity(cls, n):
        return cls(1.0, np.eye(n), np.zeros(n))

    def to_dict(self):
        return {
            "scale": self.scale,
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["scale"], np.array(data["rotation"], dtype=float), np.array(data["translation"], dtype=float))

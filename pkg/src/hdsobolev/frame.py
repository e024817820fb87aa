"""Orthonormal complement of a direction, applied as a Householder operator."""
from __future__ import annotations

import numpy as np


class TangentFrame:
    """Complement ``Gamma`` of a unit vector ``theta`` in R^D.

    ``Gamma`` is ``D x (D-1)`` with ``Gamma' Gamma = I`` and
    ``Gamma Gamma' = I - theta theta'``. It is never stored: a reflection
    ``H`` sends ``theta`` to ``-s e_1`` (``s`` the sign of ``theta_1``, which
    keeps the reflection vector away from zero) and the complement is
    spanned by ``H e_2, ..., H e_D``.
    """

    def __init__(self, theta):
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size < 2:
            raise ValueError("theta needs dimension >= 2")
        norm = np.linalg.norm(theta)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"theta must be a unit vector (norm {norm:.12g})")
        self.theta = theta / norm
        self.sign = 1.0 if self.theta[0] >= 0 else -1.0
        w = self.theta.copy()
        w[0] += self.sign
        self._w = w / np.linalg.norm(w)

    @property
    def dim(self) -> int:
        return self.theta.size

    def _reflect(self, x: np.ndarray) -> np.ndarray:
        return x - 2.0 * np.outer(x @ self._w, self._w)

    def to_tangent(self, x) -> np.ndarray:
        """``Gamma' x`` for each row of ``x`` (shape ``n x (D-1)``)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self._reflect(x)[:, 1:]

    def from_tangent(self, u) -> np.ndarray:
        """``Gamma u`` for each row of ``u`` (shape ``n x D``)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        padded = np.zeros((u.shape[0], self.dim))
        padded[:, 1:] = u
        return self._reflect(padded)

    def compose(self, v, u) -> np.ndarray:
        """Tangent-normal composition ``v theta + sqrt(1 - v^2) Gamma u``."""
        v = np.asarray(v, dtype=float).reshape(-1, 1)
        return v * self.theta + np.sqrt(np.clip(1.0 - v * v, 0.0, None)) * self.from_tangent(u)

"""Energy functional of the forced biharmonic problem and its first variation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import dual_norm, lambda1
from .operators import BiharmonicForm


@dataclass(frozen=True, eq=False)
class ProblemParams:
    """Data ``(lambda, p, eps, f)`` of ``Delta^2 u = lam u + |u|^{p-2} u + eps f``.

    When ``lambda1`` is given, ``0 < lam < lambda1`` is enforced.
    """

    lam: float
    p: float
    eps: float
    f: np.ndarray
    lambda1: float | None = None

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float).copy()
        f.setflags(write=False)
        object.__setattr__(self, "f", f)
        if not self.p > 2:
            raise ValueError(f"p must exceed 2, got {self.p!r}")
        if not self.eps >= 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps!r}")
        if not np.all(np.isfinite(f)):
            raise ValueError("forcing f has non-finite values")
        if self.lambda1 is not None and not 0 < self.lam < self.lambda1:
            raise ValueError(f"lambda={self.lam!r} must lie in (0, lambda1={self.lambda1!r})")

    @classmethod
    def on(cls, form: BiharmonicForm, lam: float, p: float, eps: float, f) -> "ProblemParams":
        """Build params validated against the form's first eigenvalue."""
        f = np.asarray(f, dtype=float)
        if f.shape != (form.n,):
            raise ValueError(f"forcing must have length {form.n}")
        return cls(float(lam), float(p), float(eps), f, lambda1=lambda1(form))

    def with_eps(self, eps: float) -> "ProblemParams":
        return ProblemParams(self.lam, self.p, eps, self.f, self.lambda1)


def _check(form: BiharmonicForm, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (form.n,):
        raise ValueError(f"expected a vector of length {form.n}, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("non-finite values in u")
    return u


def power_term(u: np.ndarray, p: float) -> np.ndarray:
    """``|u|^{p-2} u`` with value 0 at ``u = 0``."""
    a = np.abs(u)
    out = np.zeros_like(u)
    nz = a > 0
    out[nz] = a[nz] ** (p - 2) * u[nz]
    return out


def energy(form: BiharmonicForm, params: ProblemParams, u) -> float:
    u = _check(form, u)
    M = form.M_int
    return float(
        0.5 * (u @ form.B @ u)
        - 0.5 * params.lam * (M @ (u * u))
        - (M @ np.abs(u) ** params.p) / params.p
        - params.eps * (M @ (params.f * u))
    )


def gradient(form: BiharmonicForm, params: ProblemParams, u) -> np.ndarray:
    """Euclidean gradient of :func:`energy`; entry ``x`` is the variation along the indicator of ``x``."""
    u = _check(form, u)
    M = form.M_int
    return form.B @ u - params.lam * M * u - M * power_term(u, params.p) - params.eps * M * params.f


def hessian(form: BiharmonicForm, params: ProblemParams, u) -> np.ndarray:
    u = _check(form, u)
    d = (params.p - 1) * np.abs(u) ** (params.p - 2)
    d[u == 0] = 0.0
    return form.B - np.diag(form.M_int * (params.lam + d))


def energy_linear(form: BiharmonicForm, lam: float, f, u) -> float:
    """Energy of the linear problem ``Delta^2 u = lam u + f``."""
    u = _check(form, u)
    M = form.M_int
    return float(0.5 * (u @ form.B @ u) - 0.5 * lam * (M @ (u * u)) - M @ (np.asarray(f, dtype=float) * u))


def residual_norm(form: BiharmonicForm, params: ProblemParams, u) -> float:
    """H'-norm of the first variation; zero exactly at weak solutions."""
    return dual_norm(form, gradient(form, params, u))


def critical_point_identity_gap(form: BiharmonicForm, params: ProblemParams, u) -> float:
    """``|J(u) - ((1/2 - 1/p) int |u|^p - (eps/2) int f u)|``, zero at critical points."""
    u = _check(form, u)
    M = form.M_int
    p = params.p
    rhs = (0.5 - 1.0 / p) * (M @ np.abs(u) ** p) - 0.5 * params.eps * (M @ (params.f * u))
    return abs(energy(form, params, u) - rhs)


def a_priori_slack(form: BiharmonicForm, params: ProblemParams, u, tau: float, f_dual: float) -> float:
    """Right minus left side of the a priori bound at a critical point.

    ``2p J/(p-2) + (2p-2) eps ||f||_{H'} ||u||_H / (p-2) - tau ||u||_H^2``;
    nonnegative at every exact critical point.
    """
    u = _check(form, u)
    p = params.p
    nh = float(np.sqrt(max(u @ form.B @ u, 0.0)))
    J = energy(form, params, u)
    return 2 * p * J / (p - 2) + (2 * p - 2) * params.eps * f_dual * nh / (p - 2) - tau * nh * nh

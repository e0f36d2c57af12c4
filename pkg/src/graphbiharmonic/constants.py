"""Spectral gap, embedding constants, dual norms and the small-forcing threshold."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from .operators import BiharmonicForm, norm_H

N_RANDOM_STARTS = 32


def first_eigenpair(form: BiharmonicForm) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of ``B v = lam M_int v``.

    The eigenvector is normalised to unit H-norm with a nonnegative sum.
    """
    s = 1.0 / np.sqrt(form.M_int)
    A = s[:, None] * form.B * s[None, :]
    A = 0.5 * (A + A.T)
    w, V = scipy.linalg.eigh(A, subset_by_index=[0, 0])
    lam = float(w[0])
    if not lam > 0:
        raise ValueError("biharmonic form is not positive definite")
    v = s * V[:, 0]
    v /= norm_H(form, v)
    if v.sum() < 0:
        v = -v
    return lam, v


def lambda1(form: BiharmonicForm) -> float:
    return first_eigenpair(form)[0]


def dual_norm(form: BiharmonicForm, functional: np.ndarray) -> float:
    """H'-norm of ``u -> functional @ u``, i.e. ``sqrt(r^T B^{-1} r)``."""
    r = np.asarray(functional, dtype=float)
    if not r.any():
        return 0.0
    return float(np.sqrt(max(r @ form.solve(r), 0.0)))


def dual_norm_f(form: BiharmonicForm, f) -> float:
    """H'-norm of ``u -> sum_Omega mu f u``."""
    return dual_norm(form, form.M_int * np.asarray(f, dtype=float))


def sup_embedding_constant(form: BiharmonicForm) -> float:
    """Exact constant of ``max|u| <= C ||u||_H``: ``max_x sqrt((B^{-1})_xx)``."""
    return float(np.sqrt(form.inverse_diagonal.max()))


def embedding_upper(form: BiharmonicForm, q: float) -> float:
    if q == 2:
        return 1.0 / math.sqrt(lambda1(form))
    return sup_embedding_constant(form) * float(form.M_int.sum()) ** (1.0 / q)


def _ascent(form: BiharmonicForm, u: np.ndarray, q: float, iters: int) -> float:
    """Projected gradient ascent of ``sum mu |u|^q`` on the unit H-sphere."""
    M = form.M_int

    def obj(v):
        return float(M @ np.abs(v) ** q)

    u = u / norm_H(form, u)
    val = obj(u)
    step = 1.0
    for _ in range(iters):
        g = form.solve(q * M * np.abs(u) ** (q - 1) * np.sign(u))
        g = g - (u @ form.B @ g) * u
        gn = norm_H(form, g)
        if gn < 1e-15 * max(val, 1e-300):
            break
        improved = False
        while step > 1e-12:
            cand = u + step * g / gn
            cn = norm_H(form, cand)
            cv = obj(cand / cn) if cn > 0 else -1.0
            if cv > val:
                cand /= cn
                u, improved = cand, cv - val > 1e-15 * val
                val = cv
                step = min(2 * step, 1.0)
                break
            step *= 0.5
        if not improved:
            break
    return val ** (1.0 / q)


def embedding_constant(form: BiharmonicForm, q: float, seed: int = 0, iters: int = 300) -> tuple[float, float]:
    """Lower and certified upper bound on the best ``L^q`` <- H embedding constant.

    The lower bound is the best ratio ``||u||_q / ||u||_H`` reached by
    multi-start projected ascent: 32 seeded random starts plus the first
    eigenvector and the peak function ``B^{-1} e_x`` at the vertex where
    ``(B^{-1})_xx`` is largest.
    """
    if q < 1:
        raise ValueError("embedding exponent q must be >= 1")
    upper = embedding_upper(form, q)
    rng = np.random.default_rng(seed)
    starts = [first_eigenpair(form)[1]]
    x = int(np.argmax(form.inverse_diagonal))
    e = np.zeros(form.n)
    e[x] = 1.0
    starts.append(form.solve(e))
    starts.extend(rng.standard_normal((N_RANDOM_STARTS, form.n)))
    lower = max(_ascent(form, np.asarray(s, dtype=float), q, iters) for s in starts)
    # The ascent value is an attained ratio, so it cannot truly exceed the bound.
    return min(lower, upper), upper


def epsilon_gap(eps: float, tau: float, C: float, f_dual: float, p: float) -> float:
    """``(tau/2)sqrt(eps) - 2^(p-2) C eps^((p-1)/2) - eps ||f|| - (tau/4)sqrt(eps)``."""
    se = math.sqrt(eps)
    return 0.5 * tau * se - 2.0 ** (p - 2) * C * eps ** ((p - 1) / 2) - eps * f_dual - 0.25 * tau * se


def _scaled_gap(eps, tau, C, f_dual, p):
    # epsilon_gap / sqrt(eps); strictly decreasing in eps for p > 2
    return 0.25 * tau - 2.0 ** (p - 2) * C * eps ** ((p - 2) / 2) - f_dual * math.sqrt(eps)


def epsilon1_hat(tau: float, C: float, f_dual: float, p: float, rel_width: float = 1e-10) -> float:
    """Largest eps with ``epsilon_gap >= 0`` on all of ``(0, eps]``, by bisection."""
    if p <= 2:
        raise ValueError("p must exceed 2")
    if not tau > 0:
        raise ValueError("tau must be positive (lambda >= lambda1)")
    lo = 1e-16
    if _scaled_gap(lo, tau, C, f_dual, p) < 0:
        raise ValueError("threshold below 1e-16; constants are degenerate")
    hi = 1.0
    while _scaled_gap(hi, tau, C, f_dual, p) >= 0:
        lo, hi = hi, 2 * hi
        if hi > 1e300:
            raise ValueError("threshold bracket diverged")
    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        if _scaled_gap(mid, tau, C, f_dual, p) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class ConstantsReport:
    lambda1: float
    lam: float
    tau: float
    p: float
    C_lower: float
    C_upper: float
    f_dual_norm: float
    eps1_hat: float

    def r_eps(self, eps: float) -> float:
        return math.sqrt(eps)

    def delta_eps(self, eps: float) -> float:
        return self.tau * eps / 4.0

    def to_dict(self) -> dict:
        return asdict(self)


def compute_constants(form: BiharmonicForm, lam: float, p: float, f, seed: int = 0) -> ConstantsReport:
    """Every constant of the small-forcing argument for ``(lam, p, f)``.

    Raises ValueError if ``lam`` is not in ``(0, lambda1)``.
    """
    lam1 = lambda1(form)
    tau = (lam1 - lam) / lam1
    if not 0 < lam < lam1:
        raise ValueError(f"lambda={lam!r} must lie in (0, lambda1={lam1!r}); tau={tau!r}")
    lower, upper = embedding_constant(form, p, seed=seed)
    fd = dual_norm_f(form, f)
    return ConstantsReport(
        lambda1=lam1,
        lam=float(lam),
        tau=tau,
        p=float(p),
        C_lower=lower,
        C_upper=upper,
        f_dual_norm=fd,
        eps1_hat=epsilon1_hat(tau, upper, fd, p),
    )


def rayleigh_quotient(form: BiharmonicForm, u) -> float:
    u = np.asarray(u, dtype=float)
    return float(u @ form.B @ u / (form.M_int @ (u * u)))


"""Critical points of the energy: ball minimiser, mountain pass and Newton polish.

All descent directions are Sobolev gradients ``-B^{-1} J'(u)``, i.e. steepest
descent in the H inner product, so step lengths are mesh independent.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from .constants import ConstantsReport, compute_constants, dual_norm, first_eigenpair
from .functional import (
    ProblemParams,
    energy,
    energy_linear,
    gradient,
    hessian,
    residual_norm,
)
from .operators import BiharmonicForm, norm_H

log = logging.getLogger(__name__)

LOCAL_MIN = "local_min"
MOUNTAIN_PASS = "mountain_pass"
LINEAR_AUX = "linear_aux"


class SolverError(RuntimeError):
    """A solver stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 100_000
    path_nodes: int = 64
    descent_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    seed: int = 0
    newton_max: int = 50
    trust_factor: float = 10.0
    stagnation_sweeps: int = 500
    max_restarts: int = 20

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.path_nodes < 8:
            raise ValueError("path_nodes must be at least 8")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class CriticalPoint:
    u: np.ndarray
    energy: float
    norm_H: float
    residual: float
    kind: str
    iterations: int = 0
    converged: bool = True
    morse_index: int | None = None
    flags: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)


def _point(form, params, u, kind, iterations=0, tol=None, **kw) -> CriticalPoint:
    res = residual_norm(form, params, u)
    return CriticalPoint(
        u=np.asarray(u, dtype=float),
        energy=energy(form, params, u),
        norm_H=norm_H(form, u),
        residual=res,
        kind=kind,
        iterations=iterations,
        converged=True if tol is None else res <= tol,
        **kw,
    )


def morse_index(form: BiharmonicForm, params: ProblemParams, u, rtol: float = 1e-10) -> int | None:
    """Number of negative eigenvalues of the Hessian relative to ``B``.

    ``None`` when the Hessian is numerically singular.
    """
    w = scipy.linalg.eigh(hessian(form, params, u), form.B, eigvals_only=True)
    scale = max(1.0, float(np.abs(w).max()))
    if np.any(np.abs(w) <= rtol * scale):
        return None
    return int(np.sum(w < 0))


def solve_linear(form: BiharmonicForm, lam: float, f) -> CriticalPoint:
    """Global minimiser of the linear energy: ``(B - lam M) u = M f``."""
    f = np.asarray(f, dtype=float)
    A = form.B - np.diag(lam * form.M_int)
    rhs = form.M_int * f
    try:
        c = scipy.linalg.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"B - lambda M is not positive definite (lambda={lam!r} >= lambda1?)") from exc
    ubar = scipy.linalg.cho_solve(c, rhs)
    scale = max(np.linalg.norm(rhs), np.linalg.norm(A, 1) * np.linalg.norm(ubar), 1e-300)
    if np.linalg.norm(A @ ubar - rhs) > 1e-12 * scale:
        # one step of iterative refinement
        ubar = ubar + scipy.linalg.cho_solve(c, rhs - A @ ubar)
    return CriticalPoint(
        u=ubar,
        energy=energy_linear(form, lam, f, ubar),
        norm_H=norm_H(form, ubar),
        residual=dual_norm(form, A @ ubar - rhs),
        kind=LINEAR_AUX,
    )


def descent_start(form: BiharmonicForm, params: ProblemParams) -> np.ndarray:
    """Unit H-norm direction along which the energy initially decreases.

    The normalised solution of the linear problem; for ``f = 0`` the first
    eigenfunction instead.
    """
    if not params.f.any():
        return first_eigenpair(form)[1]
    ubar = solve_linear(form, params.lam, params.f).u
    return ubar / norm_H(form, ubar)


def _sobolev_step(form, params, u):
    g = gradient(form, params, u)
    d = -form.solve(g)
    res = math.sqrt(max(-(g @ d), 0.0))
    return g, d, res


def newton_refine(
    form: BiharmonicForm,
    params: ProblemParams,
    u,
    cfg: SolverConfig = SolverConfig(),
    kind: str = LOCAL_MIN,
) -> CriticalPoint:
    """Damped Newton on the gradient, merit = H'-norm of the residual.

    Total movement is capped at ``trust_factor`` times the initial residual
    (H-norm); exceeding it, or a singular Hessian, returns the input unchanged
    with a flag.
    """
    u0 = np.asarray(u, dtype=float).copy()
    target = min(cfg.tol, 1e-12)
    res = residual_norm(form, params, u0)
    radius = cfg.trust_factor * res
    x = u0.copy()
    it = 0
    while res > target and it < cfg.newton_max:
        g = gradient(form, params, x)
        H = hessian(form, params, x)
        try:
            dx = -scipy.linalg.solve(H, g, assume_a="sym")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
            dx = None
        if dx is None or not np.all(np.isfinite(dx)):
            return _point(form, params, u0, kind, 0, cfg.tol, flags=["singular_jacobian"])
        alpha = 1.0
        while alpha > 1e-10:
            cand = x + alpha * dx
            rc = residual_norm(form, params, cand)
            if rc < res:
                break
            alpha *= 0.5
        else:
            break  # no decrease possible: round-off floor
        it += 1
        x, res = cand, rc
        if norm_H(form, x - u0) > radius:
            return _point(form, params, u0, kind, 0, cfg.tol, flags=["trust_region_exceeded"])
    return _point(form, params, x, kind, it, cfg.tol)


def minimize_in_ball(
    form: BiharmonicForm, params: ProblemParams, cfg: SolverConfig = SolverConfig()
) -> CriticalPoint:
    """Minimise the energy over ``||u||_H <= 2 sqrt(eps)`` by projected descent."""
    if params.eps == 0 or not params.f.any():
        z = np.zeros(form.n)
        return _point(form, params, z, LOCAL_MIN, 0, cfg.tol, flags=["trivial"])

    r = math.sqrt(params.eps)
    radius = 2 * r
    ustar = descent_start(form, params)
    ts = r * np.arange(1, 17) / 16
    scan = [energy(form, params, t * ustar) for t in ts]
    best = int(np.argmin(scan))
    u = ts[best] * ustar
    E = scan[best]

    step = cfg.descent_step
    it = 0
    for it in range(cfg.max_iter):
        g, d, res = _sobolev_step(form, params, u)
        if res <= cfg.tol:
            break
        s = min(step * 2, cfg.descent_step)
        while True:
            cand = u + s * d
            nc = norm_H(form, cand)
            if nc > radius:
                cand *= radius / nc
            Ec = energy(form, params, cand)
            if Ec <= E + cfg.armijo * (g @ (cand - u)) or s < 1e-14:
                break
            s *= cfg.backtrack
        step = s
        u, E = cand, Ec
    else:
        raise SolverError("minimize_in_ball", f"no convergence in {cfg.max_iter} iterations")

    polished = newton_refine(form, params, u, cfg, kind=LOCAL_MIN)
    # Accept the polish only if it stays a minimiser inside the ball.
    if polished.flags or polished.norm_H > radius or polished.energy > E + cfg.tol:
        out = _point(form, params, u, LOCAL_MIN, it, cfg.tol)
    else:
        out = polished
        out.iterations += it
    out.info["scan_min_energy"] = float(min(scan))
    out.morse_index = morse_index(form, params, out.u)
    return out


def find_endpoint(
    form: BiharmonicForm, params: ProblemParams, direction, cfg: SolverConfig = SolverConfig()
) -> np.ndarray:
    """``t * direction`` with negative energy and H-norm above ``2 sqrt(eps)``."""
    direction = np.asarray(direction, dtype=float)
    radius = 2 * math.sqrt(params.eps)
    t = 1.0
    for _ in range(200):
        v = t * direction
        if energy(form, params, v) < 0 and norm_H(form, v) > radius:
            return v
        t *= 2
    raise SolverError("find_endpoint", "energy did not become negative within 200 doublings")


def _arc_resample(form, nodes: np.ndarray, count: int) -> np.ndarray:
    """``count`` points equally spaced in H-arc length along a polyline."""
    seg = np.array([norm_H(form, b - a) for a, b in zip(nodes[:-1], nodes[1:])])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return np.repeat(nodes[:1], count, axis=0)
    targets = np.linspace(0.0, s[-1], count)
    out = np.empty((count, nodes.shape[1]))
    j = 0
    for i, t in enumerate(targets):
        while j < len(seg) - 1 and s[j + 1] < t:
            j += 1
        w = 0.0 if seg[j] == 0 else (t - s[j]) / seg[j]
        out[i] = (1 - w) * nodes[j] + w * nodes[j + 1]
    out[0], out[-1] = nodes[0], nodes[-1]
    return out


def _reequidistribute(form, P: np.ndarray, k: int) -> tuple[np.ndarray, int]:
    """Respace both sub-paths around the maximiser ``k``, keeping it as a node."""
    N = len(P)
    left = sum(norm_H(form, P[j + 1] - P[j]) for j in range(k))
    right = sum(norm_H(form, P[j + 1] - P[j]) for j in range(k, N - 1))
    total = left + right
    if total == 0:
        return P, k
    kn = int(round((N - 1) * left / total))
    kn = min(max(kn, 1), N - 2)
    new = np.empty_like(P)
    new[: kn + 1] = _arc_resample(form, P[: k + 1], kn + 1)
    new[kn:] = _arc_resample(form, P[k:], N - kn)
    return new, kn


def _polyline_top(form, params, P: np.ndarray, E: np.ndarray, k: int) -> float:
    """Max of the energy on the polyline segments adjacent to node ``k``."""
    top = float(E.max())
    for a, b in ((P[k - 1], P[k]), (P[k], P[k + 1])):
        r = minimize_scalar(
            lambda t: -energy(form, params, a + t * (b - a)),
            bounds=(0.0, 1.0),
            method="bounded",
            options={"xatol": 1e-12},
        )
        top = max(top, -float(r.fun))
    return top


def mountain_pass(
    form: BiharmonicForm,
    params: ProblemParams,
    endpoint,
    cfg: SolverConfig = SolverConfig(),
    floor: float = 0.0,
) -> CriticalPoint:
    """Path-deformation mountain-pass search from ``0`` to ``endpoint``.

    The highest interior node of a discrete path is pushed down along the
    Sobolev gradient with Armijo backtracking; the path is respaced in H-arc
    length when segments become uneven.  Whenever the maximiser residual has
    dropped tenfold (or stalls) a Newton polish is attempted and accepted if
    it converges to a point of Morse index one whose energy lies in
    ``[floor, max over path]``.
    """
    endpoint = np.asarray(endpoint, dtype=float)
    N = cfg.path_nodes
    rng = np.random.default_rng(cfg.seed)
    s = np.linspace(0.0, 1.0, N)
    P = s[:, None] * endpoint[None, :]
    E = np.array([energy(form, params, v) for v in P])
    initial_max = _polyline_top(form, params, P, E, 1 + int(np.argmax(E[1:-1])))
    steps = np.full(N, cfg.descent_step)
    floor_ok = max(floor, cfg.tol)

    best_res = math.inf
    last_improve = 0
    attempt_at = math.inf
    restarts = 0
    for it in range(cfg.max_iter):
        k = 1 + int(np.argmax(E[1:-1]))
        g, d, res = _sobolev_step(form, params, P[k])
        stalled = it - last_improve > cfg.stagnation_sweeps
        if res < best_res * (1 - 1e-3):
            best_res, last_improve = res, it
        if res <= attempt_at or stalled:
            attempt_at = res / 10
            cand = newton_refine(form, params, P[k], cfg, kind=MOUNTAIN_PASS)
            c_est = _polyline_top(form, params, P, E, k)
            if not cand.flags and cand.converged:
                mi = morse_index(form, params, cand.u)
                slack = cfg.tol * (1 + abs(c_est))
                if mi == 1 and floor_ok <= cand.energy <= c_est + slack:
                    cand.iterations += it
                    cand.morse_index = mi
                    cand.info.update(
                        c_est=c_est, initial_path_max=initial_max, restarts=restarts
                    )
                    return cand
            if stalled:
                restarts += 1
                if restarts > cfg.max_restarts:
                    break
                log.debug("mountain pass stalled at residual %.3e; restarting", res)
                bump = rng.standard_normal(form.n)
                bump *= 0.05 * norm_H(form, endpoint) / max(norm_H(form, bump), 1e-300)
                P = P + np.sin(np.pi * s)[:, None] * bump[None, :]
                E = np.array([energy(form, params, v) for v in P])
                best_res, last_improve, attempt_at = math.inf, it, math.inf
                continue

        step = min(2 * steps[k], cfg.descent_step)
        while step > 1e-14:
            cand_u = P[k] + step * d
            Ec = energy(form, params, cand_u)
            if Ec <= E[k] - cfg.armijo * step * res * res:
                break
            step *= cfg.backtrack
        steps[k] = step
        P[k] = cand_u
        E[k] = Ec

        seg = np.array([norm_H(form, P[j + 1] - P[j]) for j in (k - 1, k)])
        if seg.max() > 2.0 * max(seg.min(), 1e-300):
            P, _ = _reequidistribute(form, P, k)
            E = np.array([energy(form, params, v) for v in P])
            steps[:] = cfg.descent_step

    raise SolverError("mountain_pass", f"no certified saddle after {cfg.max_iter} sweeps, {restarts} restarts")


def two_solutions(
    form: BiharmonicForm,
    params: ProblemParams,
    cfg: SolverConfig = SolverConfig(),
    constants: ConstantsReport | None = None,
) -> tuple[CriticalPoint, CriticalPoint, ConstantsReport]:
    """Ball minimiser ``u0`` and mountain-pass point ``uc`` with all constants."""
    try:
        consts = constants or compute_constants(form, params.lam, params.p, params.f, seed=cfg.seed)
    except ValueError as exc:
        raise SolverError("constants", str(exc)) from exc

    u0 = minimize_in_ball(form, params, cfg)
    try:
        direction = descent_start(form, params)
    except ValueError as exc:
        raise SolverError("descent_start", str(exc)) from exc
    tilde = find_endpoint(form, params, direction, cfg)
    uc = mountain_pass(form, params, tilde, cfg, floor=consts.delta_eps(params.eps))
    if params.eps == 0:
        u0.flags.append("trivial at eps=0")
    if not params.f.any():
        u0.flags.append("zero forcing; eigenfunction direction used")
    return u0, uc, consts

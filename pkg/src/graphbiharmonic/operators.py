"""Discrete calculus on a graph domain with zero Dirichlet extension.

A vertex function is a 1-D float array over the interior indices of a
:class:`~graphbiharmonic.graph.Domain`; it is taken to vanish on the boundary
and everywhere outside the effective set.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse

from .graph import Domain, WeightedGraph


def _extended_value(d: Domain, u: np.ndarray, idx: Mapping[str, int], y: str) -> float:
    i = idx.get(y)
    return 0.0 if i is None else float(u[i])


def _check_vertex(d: Domain, x: str) -> None:
    if x not in d.effective_index:
        raise ValueError(f"vertex {x!r} is outside the effective set")


def _as_vector(d: Domain, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (d.n,):
        raise ValueError(f"expected a vector of length {d.n}, got shape {u.shape}")
    return u


def laplacian_at(g: WeightedGraph, d: Domain, u, x: str) -> float:
    """mu-Laplacian of the zero-extended ``u`` at vertex ``x``."""
    _check_vertex(d, x)
    u = _as_vector(d, u)
    idx = d.interior_index
    ux = _extended_value(d, u, idx, x)
    s = sum(w * (_extended_value(d, u, idx, y) - ux) for y, w in g.neighbors(x).items())
    return s / g.mu[x]


def gradient_form_at(g: WeightedGraph, d: Domain, u, v, x: str) -> float:
    """Gradient form of ``u`` and ``v`` at ``x``."""
    _check_vertex(d, x)
    u = _as_vector(d, u)
    v = _as_vector(d, v)
    idx = d.interior_index
    ux = _extended_value(d, u, idx, x)
    vx = _extended_value(d, v, idx, x)
    s = sum(
        w * (_extended_value(d, u, idx, y) - ux) * (_extended_value(d, v, idx, y) - vx)
        for y, w in g.neighbors(x).items()
    )
    return s / (2.0 * g.mu[x])


def grad_norm_at(g: WeightedGraph, d: Domain, u, x: str) -> float:
    return float(np.sqrt(max(gradient_form_at(g, d, u, u, x), 0.0)))


def integral(g: WeightedGraph, values, region: Sequence[str]) -> float:
    """Sum of ``mu(x) * value(x)`` over ``region``.

    ``values`` is either a mapping keyed by vertex id or a sequence aligned
    with ``region``.
    """
    region = list(region)
    for x in region:
        if x not in g.mu:
            raise ValueError(f"unknown vertex {x!r} in region")
    if isinstance(values, Mapping):
        vals = [float(values[x]) for x in region]
    else:
        vals = [float(t) for t in values]
        if len(vals) != len(region):
            raise ValueError("values and region differ in length")
    return float(sum(g.mu[x] * t for x, t in zip(region, vals)))


@dataclass(frozen=True, eq=False)
class BiharmonicForm:
    """Assembled quadratic forms of a Dirichlet domain.

    ``L`` maps interior values to Laplacian values on the effective set,
    ``B = L.T @ diag(M_eff) @ L`` is the squared H-norm, ``K`` the Dirichlet
    energy ``sum mu |grad u|^2`` over the effective set.  ``M_int`` and
    ``M_eff`` hold the vertex measures as 1-D arrays.
    """

    domain: Domain
    L: scipy.sparse.csr_matrix
    M_int: np.ndarray
    M_eff: np.ndarray
    B: np.ndarray
    K: np.ndarray

    @property
    def n(self) -> int:
        return self.domain.n

    @cached_property
    def cho(self):
        """Cholesky factor of ``B``; raises LinAlgError if ``B`` is not SPD."""
        return scipy.linalg.cho_factor(self.B, lower=True)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self.cho, rhs)

    @cached_property
    def inverse_diagonal(self) -> np.ndarray:
        """Diagonal of ``B^{-1}``."""
        return np.diag(self.solve(np.eye(self.n))).copy()


def assemble_form(g: WeightedGraph, d: Domain) -> BiharmonicForm:
    n, m = d.n, d.m
    eff = d.effective
    idx = d.interior_index
    mu_eff = np.array([g.mu[x] for x in eff])

    rows, cols, vals = [], [], []
    for r, x in enumerate(eff):
        for y, w in g.neighbors(x).items():
            j = idx.get(y)
            if j is not None:
                rows.append(r)
                cols.append(j)
                vals.append(w / g.mu[x])
        if r < n:
            rows.append(r)
            cols.append(r)
            vals.append(-sum(g.neighbors(x).values()) / g.mu[x])
    L = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(m, n))

    Ld = L.toarray()
    B = Ld.T @ (mu_eff[:, None] * Ld)
    B = 0.5 * (B + B.T)

    # Dirichlet energy: each edge inside the effective set counted once.
    K = np.zeros((n, n))
    eff_set = set(eff)
    for a, b, w in g.edges:
        if a not in eff_set or b not in eff_set:
            continue
        ia, ib = idx.get(a), idx.get(b)
        if ia is not None:
            K[ia, ia] += w
        if ib is not None:
            K[ib, ib] += w
        if ia is not None and ib is not None:
            K[ia, ib] -= w
            K[ib, ia] -= w

    return BiharmonicForm(
        domain=d, L=L, M_int=mu_eff[:n].copy(), M_eff=mu_eff, B=B, K=K
    )


def _check_len(form: BiharmonicForm, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (form.n,):
        raise ValueError(f"expected a vector of length {form.n}, got shape {u.shape}")
    return u


def norm_H(form: BiharmonicForm, u) -> float:
    u = _check_len(form, u)
    return float(np.sqrt(max(u @ form.B @ u, 0.0)))


def inner_H(form: BiharmonicForm, u, v) -> float:
    return float(_check_len(form, u) @ form.B @ _check_len(form, v))


def norm_W22(form: BiharmonicForm, u) -> float:
    u = _check_len(form, u)
    q = u @ form.B @ u + u @ form.K @ u + form.M_int @ (u * u)
    return float(np.sqrt(max(q, 0.0)))


def norm_W012(form: BiharmonicForm, u) -> float:
    u = _check_len(form, u)
    q = u @ form.K @ u + form.M_int @ (u * u)
    return float(np.sqrt(max(q, 0.0)))


def lp_norm(form: BiharmonicForm, u, q: float) -> float:
    """``(sum_Omega mu |u|^q)^(1/q)``."""
    u = _check_len(form, u)
    return float((form.M_int @ np.abs(u) ** q) ** (1.0 / q))


def to_vertex_dict(d: Domain, u: Iterable[float]) -> dict[str, float]:
    return {x: float(t) for x, t in zip(d.interior, u)}

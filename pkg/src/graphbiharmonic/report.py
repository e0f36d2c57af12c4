"""Run configuration parsing, certificates, JSON reports and epsilon sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .constants import ConstantsReport
from .functional import ProblemParams, a_priori_slack, critical_point_identity_gap, energy, residual_norm
from .graph import Domain
from .operators import BiharmonicForm, norm_H
from .solvers import CriticalPoint, SolverConfig, SolverError, two_solutions

SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "eps",
    "energy_u0",
    "energy_uc",
    "norm_u0",
    "norm_uc",
    "residual_u0",
    "residual_uc",
    "in_regime",
    "certified",
    "error",
)

_LAMBDA_RE = re.compile(
    r"^\s*(?:(?P<a>[0-9.eE+-]+)\s*\*\s*lambda1|lambda1\s*\*\s*(?P<b>[0-9.eE+-]+)|(?P<c>lambda1))\s*$"
)


def parse_lambda(spec: str | float, lambda1: float) -> float:
    """Resolve ``"0.5*lambda1"``, ``"lambda1*0.5"`` or a plain number."""
    if isinstance(spec, (int, float)):
        return float(spec)
    m = _LAMBDA_RE.match(spec)
    if m is None:
        try:
            return float(spec)
        except ValueError:
            raise ValueError(f"cannot parse lambda spec {spec!r}") from None
    if m["c"]:
        return lambda1
    return float(m["a"] or m["b"]) * lambda1


def parse_forcing(spec: str, domain: Domain) -> np.ndarray:
    """``const:c``, ``vertex:id:c`` or a JSON file mapping vertex id to value."""
    idx = domain.interior_index
    f = np.zeros(domain.n)
    if spec.startswith("const:"):
        f[:] = float(spec.split(":", 1)[1])
        return f
    if spec.startswith("vertex:"):
        vid, sep, val = spec[len("vertex:") :].rpartition(":")
        if not sep:
            raise ValueError(f"bad forcing spec {spec!r}")
        if vid not in idx:
            raise ValueError(f"forcing vertex {vid!r} is not interior")
        f[idx[vid]] = float(val)
        return f
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"forcing spec {spec!r} is neither const:, vertex: nor a file")
    data = json.loads(path.read_text())
    if not isinstance(data, dict):
        raise ValueError("forcing file must map vertex ids to numbers")
    for vid, val in data.items():
        if vid not in idx:
            raise ValueError(f"forcing vertex {vid!r} is not interior")
        f[idx[vid]] = float(val)
    return f


def parse_eps_grid(spec: str) -> np.ndarray:
    """``MIN:MAX:COUNT:log|lin``."""
    parts = spec.split(":")
    if len(parts) != 4 or parts[3] not in ("log", "lin"):
        raise ValueError(f"eps grid must be MIN:MAX:COUNT:log|lin, got {spec!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1 or lo < 0 or hi < lo:
        raise ValueError(f"invalid eps grid {spec!r}")
    if parts[3] == "log":
        if lo <= 0:
            raise ValueError("log grid needs MIN > 0")
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


def in_regime(eps: float, consts: ConstantsReport) -> bool:
    return 0 < eps <= consts.eps1_hat


def certify(
    form: BiharmonicForm,
    params: ProblemParams,
    consts: ConstantsReport,
    u0: np.ndarray,
    uc: np.ndarray,
    tol: float,
) -> dict:
    """Certificate flags recomputed from the raw solution vectors."""
    eps = params.eps
    r_eps = math.sqrt(eps)
    delta = consts.delta_eps(eps)
    flags = {}
    for name, u in (("u0", u0), ("uc", uc)):
        J = energy(form, params, u)
        slack = tol * (1 + abs(J))
        scale = 1 + abs(J) + consts.tau * norm_H(form, u) ** 2
        flags[name] = {
            "residual_ok": bool(residual_norm(form, params, u) <= tol),
            "identity_ok": bool(critical_point_identity_gap(form, params, u) <= slack),
            "a_priori_ok": bool(a_priori_slack(form, params, u, consts.tau, consts.f_dual_norm) >= -tol * scale),
        }
    E0, Ec = energy(form, params, u0), energy(form, params, uc)
    flags["u0"]["energy_negative"] = bool(E0 < 0)
    flags["u0"]["inside_ball"] = bool(norm_H(form, u0) < r_eps)
    flags["uc"]["above_floor"] = bool(Ec >= delta)
    flags["distinct"] = bool(Ec - E0 > delta)
    flags["in_regime"] = in_regime(eps, consts)
    flags["nontrivial_forcing"] = bool(eps > 0 and params.f.any())
    flags["certified"] = bool(solutions_certified(flags) and flags["in_regime"])
    flags["status"] = (
        "certified" if flags["certified"] else ("out of guaranteed regime" if not flags["in_regime"] else "uncertified")
    )
    return flags


@dataclass
class SolutionReport:
    schema_version: int
    problem: dict
    constants: dict
    solutions: dict
    distinctness: dict
    certificate: dict
    provenance: dict

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SolutionReport":
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SolutionReport":
        return cls.from_dict(json.loads(text))

    def vector(self, which: str, domain: Domain) -> np.ndarray:
        vals = self.solutions[which]["values"]
        return np.array([vals[x] for x in domain.interior])


def _solution_block(form, params, cp: CriticalPoint) -> dict:
    d = form.domain
    u = cp.u
    return {
        "kind": cp.kind,
        "values": {x: float(t) for x, t in zip(d.interior, u)},
        "energy": energy(form, params, u),
        "norm_H": norm_H(form, u),
        "residual": residual_norm(form, params, u),
        "iterations": int(cp.iterations),
        "morse_index": cp.morse_index,
        "flags": list(cp.flags),
    }


def build_report(
    form: BiharmonicForm,
    params: ProblemParams,
    consts: ConstantsReport,
    u0: CriticalPoint,
    uc: CriticalPoint,
    cfg: SolverConfig,
) -> SolutionReport:
    d = form.domain
    eps = params.eps
    cert = certify(form, params, consts, u0.u, uc.u, cfg.tol)
    cblock = consts.to_dict()
    cblock.update(r_eps=math.sqrt(eps), delta_eps=consts.delta_eps(eps))
    if "c_est" in uc.info:
        cblock["c_est"] = float(uc.info["c_est"])
    return SolutionReport(
        schema_version=SCHEMA_VERSION,
        problem={
            "lambda": params.lam,
            "p": params.p,
            "eps": eps,
            "f": {x: float(t) for x, t in zip(d.interior, params.f)},
            "interior": list(d.interior),
            "boundary": list(d.boundary),
        },
        constants=cblock,
        solutions={"u0": _solution_block(form, params, u0), "uc": _solution_block(form, params, uc)},
        distinctness={
            "energy_gap": energy(form, params, uc.u) - energy(form, params, u0.u),
            "norm_H_distance": norm_H(form, uc.u - u0.u),
        },
        certificate=cert,
        provenance={
            "seed": cfg.seed,
            "tol": cfg.tol,
            "max_iter": cfg.max_iter,
            "path_nodes": cfg.path_nodes,
            "version": __version__,
        },
    )


def verify_report(report: SolutionReport, form: BiharmonicForm, params: ProblemParams, consts: ConstantsReport) -> bool:
    """True iff the stored certificate is exactly what the stored vectors give."""
    u0 = report.vector("u0", form.domain)
    uc = report.vector("uc", form.domain)
    tol = report.provenance["tol"]
    return certify(form, params, consts, u0, uc, tol) == report.certificate


def solve_one(form, params, cfg, consts) -> dict:
    """One sweep row; solver failures are recorded, never raised.

    ``certified`` means both solutions verified, whatever the regime; the
    ``in_regime`` column says whether the threshold guarantee applies.
    """
    row = {c: "" for c in CSV_COLUMNS}
    row["eps"] = params.eps
    row["in_regime"] = in_regime(params.eps, consts)
    row["certified"] = False
    try:
        u0, uc, _ = two_solutions(form, params, cfg, constants=consts)
    except SolverError as exc:
        row["error"] = str(exc)
        return row
    cert = certify(form, params, consts, u0.u, uc.u, cfg.tol)
    row.update(
        energy_u0=energy(form, params, u0.u),
        energy_uc=energy(form, params, uc.u),
        norm_u0=norm_H(form, u0.u),
        norm_uc=norm_H(form, uc.u),
        residual_u0=residual_norm(form, params, u0.u),
        residual_uc=residual_norm(form, params, uc.u),
        certified=solutions_certified(cert),
    )
    return row


def solutions_certified(cert: dict) -> bool:
    """Both solutions pass every check; the eps regime is not consulted."""
    return (
        all(cert["u0"].values())
        and all(cert["uc"].values())
        and cert["distinct"]
        and cert["nontrivial_forcing"]
    )


def run_sweep(
    form: BiharmonicForm,
    params: ProblemParams,
    eps_values,
    cfg: SolverConfig,
    consts: ConstantsReport,
) -> tuple[list[dict], dict]:
    """Solve for each eps (row ``i`` seeded with ``seed + i``)."""
    rows = []
    for i, eps in enumerate(eps_values):
        row_cfg = SolverConfig(**{**asdict(cfg), "seed": cfg.seed + i})
        rows.append(solve_one(form, params.with_eps(float(eps)), row_cfg, consts))
    certified = [r["eps"] for r in rows if r["certified"]]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "rows": len(rows),
        "certified_rows": len(certified),
        "largest_certified_eps": max(certified) if certified else None,
        "eps1_hat": consts.eps1_hat,
        "constants": consts.to_dict(),
        "provenance": {"seed": cfg.seed, "tol": cfg.tol, "version": __version__},
    }
    return rows, summary


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()

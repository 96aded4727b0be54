"""Configuration, the end-to-end pipeline and parameter sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .exceptions import ParameterError
from .matchers import evaluate, match_by_threshold, seeded_gamma, seeded_match
from .model import RNG_ALGORITHM, derive_seed, sample_pair
from .score import phi_approx, phi_exact, threshold_data_driven, threshold_fixed
from .trees import build_family

SCHEMA_VERSION = 1

# key -> default; the default's type is the key's type (None means "optional int")
DEFAULTS = {
    "n": 300,
    "q": 0.1,
    "rho": 1.0,
    "pi_mode": "uniform",
    "seed": 0,
    "K": 2,
    "L": 2,
    "M": 1,
    "R": None,
    "t": 2000,
    "t_cap": 10_000,
    "exact": False,
    "c": 0.5,
    "auto_tau": True,
    "seeded": True,
    "epsilon": 0.1,
    "deterministic": False,
    "trials": 1,
    "jobs": 1,
}

# sweep axes accept comma-separated lists
GRID_KEYS = ("n", "q", "rho")

SWEEP_COLUMNS = ["n", "q", "rho", "K", "L", "M", "R", "N", "t", "c", "trial", "seed",
                 "acc", "coverage", "exact", "ms_score", "ms_match", "ms_seeded"]


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"not a boolean: {s!r}")


def _parse_opt_int(s: str):
    return None if s.strip().lower() in ("none", "inf", "") else int(s)


def coerce(key: str, value, grid: bool = False):
    """Parse ``value`` (usually a string) to the type of ``key``."""
    if key not in DEFAULTS:
        raise ParameterError(f"unknown config key {key!r}")
    if not isinstance(value, str):
        return value
    if grid and key in GRID_KEYS and "," in value:
        return [coerce(key, v) for v in value.split(",")]
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            return _parse_bool(value)
        if default is None or key == "t":
            return _parse_opt_int(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError as exc:
        raise ParameterError(f"bad value for {key}: {value!r}") from exc
    return value.strip()


def read_config(path, grid: bool = False) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; ``schema_version`` is required."""
    cfg = {}
    version = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "schema_version":
            version = int(value)
            continue
        cfg[key] = coerce(key, value, grid)
    if version != SCHEMA_VERSION:
        raise ParameterError(f"{path}: schema_version must be {SCHEMA_VERSION}, got {version}")
    return cfg


def format_config(cfg: dict) -> str:
    lines = [f"schema_version = {SCHEMA_VERSION}"]
    for key in DEFAULTS:
        v = cfg.get(key, DEFAULTS[key])
        if isinstance(v, list):
            v = ",".join(map(str, v))
        lines.append(f"{key} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


def resolve(cfg: dict | None = None, **overrides) -> dict:
    out = dict(DEFAULTS)
    for src in (cfg or {}, overrides):
        for key, value in src.items():
            out[key] = coerce(key, value)
    return out


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    return x


def exact_recovery_condition(n: int, q: float, rho: float, epsilon: float) -> dict:
    lhs = n * q * (q + rho * (1.0 - q))
    rhs = (1.0 + epsilon) * math.log(n)
    return {"holds": bool(lhs >= rhs), "lhs": lhs, "rhs": rhs}


def run_pipeline(cfg: dict) -> dict:
    """generate -> score -> threshold match -> seeded completion -> evaluate."""
    cfg = resolve(cfg)
    seeds = {"master": cfg["seed"], "pair": derive_seed(cfg["seed"], 0),
             "colorings": derive_seed(cfg["seed"], 1)}
    ms = {}

    tic = time.perf_counter()
    pair = sample_pair(cfg["n"], cfg["q"], cfg["rho"], cfg["pi_mode"], seeds["pair"])
    family = build_family(cfg["K"], cfg["L"], cfg["M"], cfg["R"])
    ms["generate"] = 1e3 * (time.perf_counter() - tic)

    tic = time.perf_counter()
    if cfg["exact"]:
        S = phi_exact(pair, family)
    else:
        S = phi_approx(pair, family, t=cfg["t"], seed=seeds["colorings"], t_cap=cfg["t_cap"])
        seeds["coloring_A"], seeds["coloring_B"] = S.seeds["A"], S.seeds["B"]
    ms["score"] = 1e3 * (time.perf_counter() - tic)

    tic = time.perf_counter()
    tau = threshold_data_driven(S) if cfg["auto_tau"] else threshold_fixed(S.mu, cfg["c"])
    first = match_by_threshold(S, tau)
    ms["match"] = 1e3 * (time.perf_counter() - tic)

    tic = time.perf_counter()
    n, q = pair.n, pair.q
    gamma = seeded_gamma(n, q) if n >= 3 else None
    final = seeded_match(pair.A, pair.B, first, q=q, gamma=gamma) if cfg["seeded"] else first
    ms["seeded"] = 1e3 * (time.perf_counter() - tic)

    report = {
        "schema_version": SCHEMA_VERSION,
        "rng": RNG_ALGORITHM,
        "config": cfg,
        "seeds": seeds,
        "family": {**family.fingerprint(), "catalog_fraction": family.catalog.fraction_of_all()},
        "scalars": {
            "mu": S.mu, "tau": tau, "gamma": gamma, "r": S.r, "t": S.t,
            "seeded_threshold": None if gamma is None else gamma * (n - 2) * q * q,
        },
        "metrics": {"threshold": evaluate(first, pair.pi), "final": evaluate(final, pair.pi)},
        "advisory": {"exact_recovery_condition": exact_recovery_condition(n, q, pair.rho, cfg["epsilon"])},
    }
    if not cfg["deterministic"]:
        report["timings_ms"] = ms
    return _clean(report)


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- sweeps -----------------------------------------------------------------

def sweep_cells(cfg: dict) -> list[dict]:
    axes = [v if isinstance(v, list) else [v] for v in (cfg["rho"], cfg["q"], cfg["n"])]
    return [{**cfg, "rho": rho, "q": q, "n": n} for rho in axes[0] for q in axes[1] for n in axes[2]]


def _sweep_row(job) -> dict:
    index, trial, cell = job
    seed = derive_seed(cell["seed"], index, trial)
    rep = run_pipeline({**cell, "seed": seed, "deterministic": False})
    fam, met, ms = rep["family"], rep["metrics"]["final"], rep["timings_ms"]
    zero = cell["deterministic"]
    return {
        "n": cell["n"], "q": cell["q"], "rho": cell["rho"], "K": fam["K"], "L": fam["L"],
        "M": fam["M"], "R": "none" if fam["R"] is None else fam["R"], "N": fam["N"],
        "t": rep["scalars"]["t"] if rep["scalars"]["t"] is not None else 0, "c": cell["c"],
        "trial": trial, "seed": seed, "acc": met["accuracy"], "coverage": met["coverage"],
        "exact": int(met["exact"]),
        "ms_score": 0.0 if zero else round(ms["score"], 3),
        "ms_match": 0.0 if zero else round(ms["match"], 3),
        "ms_seeded": 0.0 if zero else round(ms["seeded"], 3),
    }


def run_sweep(cfg: dict) -> list[dict]:
    """One row per (cell, trial); cells vary over rho x q x n."""
    base = dict(DEFAULTS)
    base.update({k: v for k, v in cfg.items()})
    cells = sweep_cells(base)
    jobs = [(i, trial, cell) for i, cell in enumerate(cells) for trial in range(base["trials"])]
    if base["jobs"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=base["jobs"]) as pool:
            return list(pool.map(_sweep_row, jobs))
    return [_sweep_row(job) for job in jobs]


def format_sweep(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()

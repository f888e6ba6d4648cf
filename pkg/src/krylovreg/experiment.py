"""Batch experiments: JSON configuration, realization runner and output files."""

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from .krylov_solvers import DiscrepancyRule, lsqr
from .preconditioners import build_preconditioner, select_kp
from .problems import PROBLEMS, build_problem, motion_psf
from .regularization import REGULARIZERS, hybrid_solve
from .svg import semilog_svg

__all__ = [
    "ConfigError",
    "SolverFailure",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "run_experiment",
    "HISTORY_COLUMNS",
]

HISTORY_COLUMNS = ("run", "iter", "relerr", "relres_projected", "relres_true", "param")
PRECONDITIONERS = ("none", "c1", "c2", "c3", "m1", "m2", "m3", "m4")
KP_RULES = ("auto_stop1", "auto_stop2")


class ConfigError(ValueError):
    """Malformed experiment configuration; the message names the field."""


class SolverFailure(RuntimeError):
    """A solve or preconditioner construction failed during a run."""


@dataclass
class ExperimentConfig:
    name: str
    m: int
    noise_level: float = 1e-2
    seed: int = 1
    runs: int = 1
    psf_size: int = 7
    regularizers: List[str] = field(default_factory=lambda: ["none"])
    preconditioners: List[str] = field(default_factory=lambda: ["none"])
    kp: Union[str, int] = "auto_stop2"
    kmax: Optional[int] = None
    tau: float = 1.01
    tau1_prime: float = 1e-4
    tau1_double_prime: float = 0.9
    tau2: float = 1e-10
    reorth: bool = True
    lsqr_baseline: bool = False
    out_dir: str = "krylovreg-out"
    emit_svg: bool = False

    @property
    def kmax_effective(self):
        if self.kmax is not None:
            return self.kmax
        return 100 if self.name == "blur2d" else 60


_SECTIONS = {
    "problem": {"name", "m", "n", "noise_level", "seed", "runs", "psf"},
    "solver": {"regularizer", "preconditioner", "kp", "kmax", "tau", "tau1_prime",
               "tau1_double_prime", "tau2", "reorth", "lsqr_baseline"},
    "output": {"dir", "emit_svg"},
}


def _num(section, key, value, kind, minimum=None, strict=False):
    path = f"{section}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number")
    if kind is int and (not float(value).is_integer()):
        raise ConfigError(f"{path} must be an integer")
    value = kind(value)
    if minimum is not None and (value < minimum or (strict and value == minimum)):
        cmp = ">" if strict else ">="
        raise ConfigError(f"{path} must be {cmp} {minimum}")
    return value


def _choices(section, key, value, allowed):
    path = f"{section}.{key}"
    items = value if isinstance(value, list) else [value]
    if not items:
        raise ConfigError(f"{path} must not be empty")
    out = []
    for v in items:
        if not isinstance(v, str) or v.lower() not in allowed:
            raise ConfigError(f"{path}: {v!r} is not one of {', '.join(allowed)}")
        if v.lower() in out:
            raise ConfigError(f"{path}: {v!r} listed twice")
        out.append(v.lower())
    return out


def parse_config(data, out_override=None):
    """Validate a configuration mapping and return an :class:`ExperimentConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    for key in data:
        if key not in _SECTIONS:
            raise ConfigError(f"{key}: unknown section")
    for sec, keys in _SECTIONS.items():
        body = data.get(sec, {})
        if not isinstance(body, dict):
            raise ConfigError(f"{sec} must be an object")
        for key in body:
            if key not in keys:
                raise ConfigError(f"{sec}.{key}: unknown key")
    prob = data.get("problem")
    if prob is None:
        raise ConfigError("problem: section is required")
    name = prob.get("name")
    if not isinstance(name, str) or name not in PROBLEMS:
        raise ConfigError(f"problem.name: {name!r} is not one of {', '.join(PROBLEMS)}")
    if "m" in prob and "n" in prob:
        raise ConfigError("problem.n: give either m or n, not both")
    size_key = "n" if "n" in prob else "m"
    if size_key not in prob:
        raise ConfigError("problem.m: required")
    cfg = ExperimentConfig(name=name, m=_num("problem", size_key, prob[size_key], int, 2))
    if "noise_level" in prob:
        cfg.noise_level = _num("problem", "noise_level", prob["noise_level"], float, 0.0)
    if "seed" in prob:
        cfg.seed = _num("problem", "seed", prob["seed"], int, 0)
    if "runs" in prob:
        cfg.runs = _num("problem", "runs", prob["runs"], int, 1)
    if "psf" in prob:
        if name != "blur2d":
            raise ConfigError("problem.psf: only valid for blur2d")
        cfg.psf_size = _num("problem", "psf", prob["psf"], int, 3)
        if cfg.psf_size % 2 == 0:
            raise ConfigError("problem.psf: size must be odd")

    sol = data.get("solver", {})
    if "regularizer" in sol:
        cfg.regularizers = _choices("solver", "regularizer", sol["regularizer"], REGULARIZERS)
    if "preconditioner" in sol:
        cfg.preconditioners = _choices("solver", "preconditioner", sol["preconditioner"], PRECONDITIONERS)
    if "kp" in sol:
        kp = sol["kp"]
        if isinstance(kp, str):
            if kp not in KP_RULES:
                raise ConfigError(f"solver.kp: {kp!r} is not one of {', '.join(KP_RULES)} or an integer")
            cfg.kp = kp
        else:
            cfg.kp = _num("solver", "kp", kp, int, 1)
    if "kmax" in sol:
        cfg.kmax = _num("solver", "kmax", sol["kmax"], int, 1)
    for key in ("tau", "tau1_prime", "tau1_double_prime", "tau2"):
        if key in sol:
            setattr(cfg, key, _num("solver", key, sol[key], float, 0.0, strict=True))
    if cfg.tau < 1:
        raise ConfigError("solver.tau must be >= 1")
    for key in ("reorth", "lsqr_baseline"):
        if key in sol:
            if not isinstance(sol[key], bool):
                raise ConfigError(f"solver.{key} must be true or false")
            setattr(cfg, key, sol[key])

    outp = data.get("output", {})
    if "dir" in outp:
        if not isinstance(outp["dir"], str) or not outp["dir"]:
            raise ConfigError("output.dir must be a nonempty string")
        cfg.out_dir = outp["dir"]
    if "emit_svg" in outp:
        if not isinstance(outp["emit_svg"], bool):
            raise ConfigError("output.emit_svg must be true or false")
        cfg.emit_svg = outp["emit_svg"]
    if out_override:
        cfg.out_dir = out_override
    if name == "blur2d" and not 8 <= cfg.m <= 64:
        raise ConfigError(f"problem.{size_key}: blur2d image side must lie in [8, 64]")
    if name == "baart" and (cfg.m % 2 or cfg.m < 4):
        raise ConfigError("problem.m: baart needs an even size >= 4")
    if name == "heat" and cfg.m < 10:
        raise ConfigError("problem.m: heat needs m >= 10")
    if name in ("downshift", "circshift") and any(r != "none" for r in cfg.regularizers):
        raise ConfigError(f"solver.regularizer: {name} is noise free; only 'none' applies")
    return cfg


def load_config(path, out_override=None):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(data, out_override)


def _fmt(v):
    if v is None:
        return ""
    return "%.12e" % v


@dataclass
class _RunResult:
    run: int
    kp: Optional[int]
    kp_rule: Optional[str]
    histories: dict
    lsqr_history: Optional[object]
    error: Optional[str] = None


def _solve_realization(cfg, r):
    seed = cfg.seed + r
    psf = motion_psf(cfg.psf_size) if cfg.name == "blur2d" else None
    prob = build_problem(cfg.name, cfg.m, cfg.noise_level, seed, psf=psf)
    m = prob.m
    kmax = min(cfg.kmax_effective, m)
    rule = DiscrepancyRule(prob.delta, cfg.tau)
    needs_kp = any(p.startswith("m") for p in cfg.preconditioners)
    kp, kp_rule = None, None
    res = _RunResult(r, None, None, {}, None)
    try:
        if needs_kp:
            if isinstance(cfg.kp, int):
                kp, kp_rule = cfg.kp, "fixed"
            else:
                sel = select_kp(prob.A, prob.b, min(kmax, m - 2),
                                (cfg.tau1_prime, cfg.tau1_double_prime, cfg.tau2),
                                rule=cfg.kp.split("_", 1)[1], reorth=cfg.reorth)
                kp, kp_rule = sel.kp, sel.rule
        res.kp, res.kp_rule = kp, kp_rule
        for pname in cfg.preconditioners:
            P = build_preconditioner(prob.A, prob.b, pname, kp=kp, rng=prob.rng, reorth=cfg.reorth)
            for reg in cfg.regularizers:
                res.histories[(reg, pname)] = hybrid_solve(
                    prob.A, prob.b, reg, P, rule, kmax=kmax, x_exact=prob.x_exact,
                    reorth=cfg.reorth)
        if cfg.lsqr_baseline:
            res.lsqr_history = lsqr(prob.A, prob.b, rule, kmax=kmax, x_exact=prob.x_exact,
                                    stop_on_discrepancy=False, true_residual=True)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        res.error = f"run {r}: {exc}"
    return res


def _history_csv(r, hist):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_COLUMNS)
    for i in range(len(hist.relres)):
        rt = hist.relres_true[i] if i < len(hist.relres_true) else None
        w.writerow([r, i + 1, _fmt(hist.relerr[i]), _fmt(hist.relres[i]), _fmt(rt),
                    _fmt(hist.params[i])])
    return buf.getvalue()


def _workers():
    env = os.environ.get("KRYLOVREG_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError("KRYLOVREG_THREADS must be a positive integer") from None
        if n < 1:
            raise ConfigError("KRYLOVREG_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


def run_experiment(cfg, log=None):
    """Run every realization, write outputs and return the summary rows.

    Raises :class:`SolverFailure` after writing the outputs of all
    realizations that succeeded.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=min(_workers(), cfg.runs)) as pool:
        results = list(pool.map(lambda r: _solve_realization(cfg, r), range(cfg.runs)))

    errors = [res.error for res in results if res.error]
    configs = [(reg, p) for p in cfg.preconditioners for reg in cfg.regularizers]
    summary = []
    curves = {}
    for reg, p in configs:
        sub = out / f"{reg}-{p}"
        sub.mkdir(exist_ok=True)
        best, best_it, kps, disc = [], [], [], []
        for res in results:
            hist = res.histories.get((reg, p))
            if hist is None:
                continue
            (sub / f"history_r{res.run}.csv").write_text(_history_csv(res.run, hist))
            best.append(hist.best_relerr)
            best_it.append(hist.best_index)
            if res.kp is not None and p.startswith("m"):
                kps.append(res.kp)
            disc.append(hist.discrepancy_index)
        if best:
            curves[f"{reg}-{p}"] = _mean_curve([res.histories[(reg, p)] for res in results
                                                if (reg, p) in res.histories])
        summary.append({
            "regularizer": reg,
            "preconditioner": p,
            "kp": _fmt(float(np.mean(kps))) if kps else "",
            "runs": len(best),
            "avg_best_relerr": _fmt(float(np.mean(best))) if best else "",
            "avg_best_iter": _fmt(float(np.mean(best_it))) if best else "",
            "discrepancy_reached": sum(d is not None for d in disc),
        })
    _write_rows(out / "summary.csv", summary)

    if cfg.lsqr_baseline:
        rows = []
        sub = out / "lsqr"
        sub.mkdir(exist_ok=True)
        hs = []
        for res in results:
            if res.lsqr_history is None:
                continue
            h = res.lsqr_history
            hs.append(h)
            (sub / f"history_r{res.run}.csv").write_text(_history_csv(res.run, h))
            rows.append({"run": res.run, "best_relerr": _fmt(h.best_relerr),
                         "best_iter": h.best_index})
        if hs:
            rows.append({"run": "mean", "best_relerr": _fmt(float(np.mean([h.best_relerr for h in hs]))),
                         "best_iter": _fmt(float(np.mean([h.best_index for h in hs])))})
            curves["lsqr"] = _mean_curve(hs)
        _write_rows(out / "baseline.csv", rows)

    if any(res.kp is not None for res in results):
        _write_rows(out / "kp.csv", [{"run": res.run, "kp": res.kp, "rule": res.kp_rule}
                                     for res in results if res.kp is not None])

    if cfg.emit_svg and curves:
        (out / "history.svg").write_text(semilog_svg(
            curves, title=f"{cfg.name}, m={cfg.m}, noise {cfg.noise_level:g}",
            ylabel="mean relative error"))
    if errors:
        raise SolverFailure("; ".join(errors))
    return summary


def _mean_curve(hists):
    n = min(len(h.relerr) for h in hists)
    xs = list(range(1, n + 1))
    ys = [float(np.mean([h.relerr[i] for h in hists])) for i in range(n)]
    return xs, ys


def _write_rows(path, rows):
    if not rows:
        path.write_text("")
        return
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    path.write_text(buf.getvalue())

"""Command-line entry point: ``parisi <command> --config run.json [--out DIR]``.

Exit codes: 0 success, 1 a numerical check failed, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import ConfigError, NotAParisiMeasure, ParisiError
from .minimize import MinimizeOptions

CONFIG_KEYS = ("mixture", "order_parameter", "k", "gamma", "gamma_grid", "grid", "seed",
               "threads", "minimize", "n_paths", "n_steps", "rem_mc", "tolerance", "transform")
MINIMIZE_KEYS = {f.name for f in fields(MinimizeOptions)} - {"grid", "seed", "threads"}
REM_MC_KEYS = {"n", "samples", "gamma"}


@dataclass
class RunConfig:
    mixture: object = None
    order_parameter: object = None
    k: int = 3
    gamma: Optional[float] = None
    gamma_grid: tuple = ()
    grid: object = None
    seed: int = 0
    threads: int = 1
    minimize: dict = field(default_factory=dict)
    n_paths: int = 100_000
    n_steps: int = 1000
    rem_mc: Optional[dict] = None
    tolerance: float = 1e-4
    transform: str = "gamma_hat"

    def need_gamma(self) -> float:
        if self.gamma is None:
            raise ConfigError("this command needs 'gamma'")
        return self.gamma

    def need_op(self):
        if self.order_parameter is None:
            raise ConfigError("this command needs 'order_parameter'")
        return self.order_parameter

    def minimize_options(self) -> MinimizeOptions:
        return MinimizeOptions(seed=self.seed, threads=self.threads, grid=self.grid, **self.minimize)


def _number(name, v, positive=False, allow_zero=True):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"'{name}' must be a finite number, got {v!r}")
    if positive and (v < 0 or (v == 0 and not allow_zero)):
        raise ConfigError(f"'{name}' must be {'nonnegative' if allow_zero else 'positive'}, got {v!r}")
    return float(v)


def _integer(name, v, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"'{name}' must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"'{name}' must be at least {lo}, got {v}")
    return v


def parse_config(raw: dict) -> RunConfig:
    """Validate everything up front; unknown keys are errors."""
    from .cascade import GridSpec
    from .model import mixture_from_config, order_parameter_from_config, sk

    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    cfg = RunConfig()
    cfg.mixture = mixture_from_config(raw["mixture"]) if "mixture" in raw else sk()
    if "order_parameter" in raw:
        cfg.order_parameter = order_parameter_from_config(raw["order_parameter"])
    if "k" in raw:
        cfg.k = _integer("k", raw["k"], 0)
    if "gamma" in raw:
        cfg.gamma = _number("gamma", raw["gamma"], positive=True)
    if "gamma_grid" in raw:
        grid = raw["gamma_grid"]
        if not isinstance(grid, list) or not grid:
            raise ConfigError("'gamma_grid' must be a nonempty list")
        cfg.gamma_grid = tuple(_number(f"gamma_grid[{i}]", g, positive=True) for i, g in enumerate(grid))
    if "grid" in raw:
        g = raw["grid"]
        extra = sorted(set(g) - {"half_width", "spacing", "order"}) if isinstance(g, dict) else None
        if extra is None or extra:
            raise ConfigError(f"'grid' takes half_width, spacing, order; got {g!r}")
        cfg.grid = GridSpec(**g)
    for key in ("seed", "threads", "n_paths", "n_steps"):
        if key in raw:
            setattr(cfg, key, _integer(key, raw[key], 0 if key == "seed" else 1))
    if "minimize" in raw:
        m = raw["minimize"]
        extra = sorted(set(m) - MINIMIZE_KEYS) if isinstance(m, dict) else None
        if extra is None or extra:
            raise ConfigError(f"'minimize' accepts {sorted(MINIMIZE_KEYS)}; got {m!r}")
        cfg.minimize = dict(m)
    if "rem_mc" in raw:
        r = raw["rem_mc"]
        if not isinstance(r, dict) or set(r) != REM_MC_KEYS:
            raise ConfigError(f"'rem_mc' needs exactly {sorted(REM_MC_KEYS)}; got {r!r}")
        cfg.rem_mc = {"n": _integer("rem_mc.n", r["n"], 1),
                      "samples": _integer("rem_mc.samples", r["samples"], 16),
                      "gamma": _number("rem_mc.gamma", r["gamma"], positive=True)}
    if "tolerance" in raw:
        cfg.tolerance = _number("tolerance", raw["tolerance"], positive=True, allow_zero=False)
    if "transform" in raw:
        if raw["transform"] not in ("gamma_hat", "l_hat"):
            raise ConfigError(f"'transform' must be 'gamma_hat' or 'l_hat', got {raw['transform']!r}")
        cfg.transform = raw["transform"]
    return cfg


# -- output --------------------------------------------------------------------

def _float(v: float) -> str:
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return format(v, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "item") and not hasattr(obj, "__len__"):   # numpy scalars
        return dumps(obj.item(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)) or hasattr(obj, "tolist"):
        seq = obj.tolist() if hasattr(obj, "tolist") else obj
        if not seq:
            return "[]"
        return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


class Emitter:
    def __init__(self, out: Optional[Path]):
        self.out = out
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)

    def emit(self, name: str, text: str, primary: bool = True):
        if not text.endswith("\n"):
            text += "\n"
        if self.out is not None:
            (self.out / name).write_text(text)
        if primary:
            sys.stdout.write(text)


# -- commands --------------------------------------------------------------------

def _measure_dict(meas) -> dict:
    return {"gamma": meas.gamma, "value": meas.value, "order_parameter": meas.op.to_config(),
            "residuals": list(meas.residuals), "max_residual": meas.max_residual,
            "overlap_moment": meas.overlap_moment, "int_alpha_xiprime": meas.int_alpha_xi_prime,
            "converged": meas.converged, "evaluations": meas.evaluations}


def cmd_eval(cfg: RunConfig, em: Emitter) -> int:
    from .cascade import default_grid
    from .functional import evaluate
    gamma = cfg.need_gamma()
    grid = cfg.grid or default_grid(cfg.mixture, gamma)
    ev = evaluate(cfg.mixture, cfg.need_op(), gamma, grid)
    em.emit("eval.json", dumps(ev.to_dict(grid)))
    return 0


def cmd_minimize(cfg: RunConfig, em: Emitter) -> int:
    from .minimize import minimize
    meas = minimize(cfg.mixture, cfg.need_gamma(), cfg.k, cfg.minimize_options())
    em.emit("minimize.json", dumps(_measure_dict(meas)))
    return 0


def cmd_scan(cfg: RunConfig, em: Emitter) -> int:
    from .minimize import scan_csv, temperature_scan
    if not cfg.gamma_grid:
        raise ConfigError("'scan' needs 'gamma_grid'")
    try:
        rows = temperature_scan(cfg.mixture, cfg.gamma_grid, cfg.k, cfg.minimize_options())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    em.emit("scan.csv", scan_csv(rows))
    return 0


def cmd_legendre(cfg: RunConfig, em: Emitter) -> int:
    from .legendre import gamma_hat, l_hat
    from .minimize import MinimizedCurve
    op = cfg.need_op()
    if cfg.transform == "l_hat":
        res = l_hat(cfg.mixture, op, cfg.k, MinimizedCurve(cfg.mixture, cfg.k, cfg.minimize_options()))
        out = {"transform": "l_hat", "value": res.value, "argmax_gamma": res.argmax_gamma,
               "divergent": res.divergent}
    else:
        res = gamma_hat(cfg.mixture, op)
        out = {"transform": "gamma_hat", "value": res.value, "argmax_gamma": res.argmax_gamma,
               "argmax_interval": res.argmax_interval, "slope_at_argmax": res.slope_at_argmax,
               "divergent": res.divergent}
    em.emit("legendre.json", dumps(out))
    return 0


def cmd_dual_check(cfg: RunConfig, em: Emitter) -> int:
    from .legendre import default_panel, duality_forward, duality_inverse, lhat_nonuniqueness
    from .minimize import MinimizedCurve
    gamma = cfg.need_gamma()
    curve = MinimizedCurve(cfg.mixture, cfg.k, cfg.minimize_options())
    fwd = duality_forward(cfg.mixture, gamma, cfg.k, panel=default_panel(), curve=curve,
                          tol=cfg.tolerance)
    inv = duality_inverse(cfg.mixture, fwd.measure.op, gamma, k=cfg.k, curve=curve, tol=cfg.tolerance)
    report = {"forward": fwd.to_dict(), "inverse": inv.to_dict()}
    ok = fwd.passed and inv.passed
    if fwd.measure.int_alpha_xi_prime < float(cfg.mixture.xi(1.0)) - 1e-9:
        nu = lhat_nonuniqueness(cfg.mixture, gamma, cfg.k, curve, tol=cfg.tolerance)
        report["l_hat_nonuniqueness"] = nu.to_dict()
        ok = ok and nu.passed
    report["passed"] = ok
    em.emit("dual_check.json", dumps(report))
    return 0 if ok else 1


def cmd_rem(cfg: RunConfig, em: Emitter) -> int:
    from .rem import p_rem, rem_csv, rem_finite_n_mc
    if not cfg.gamma_grid and cfg.rem_mc is None:
        raise ConfigError("'rem' needs 'gamma_grid' and/or 'rem_mc'")
    if cfg.gamma_grid:
        em.emit("rem.csv", rem_csv(cfg.gamma_grid))
    if cfg.rem_mc is not None:
        mc = cfg.rem_mc
        est, se = rem_finite_n_mc(mc["n"], mc["samples"], mc["gamma"], cfg.seed)
        em.emit("rem_mc.json", dumps({**mc, "seed": cfg.seed, "estimate": est, "std_error": se,
                                      "limit": p_rem(mc["gamma"]).p_hat}),
                primary=not cfg.gamma_grid)
    return 0


def cmd_sde_check(cfg: RunConfig, em: Emitter) -> int:
    from .cascade import expected_u_squared, solve_cascade
    from .sde import martingale_check, simulate, variational_objective
    gamma = cfg.need_gamma()
    sol = solve_cascade(cfg.mixture, cfg.need_op(), gamma, cfg.grid)
    eu2 = expected_u_squared(sol).eu2
    opt = simulate(sol, cfg.n_paths, cfg.n_steps, seed=cfg.seed, threads=cfg.threads)
    zero = simulate(sol, cfg.n_paths, cfg.n_steps, seed=cfg.seed + 1, control="zero",
                    threads=cfg.threads)
    mean, se = variational_objective(opt)
    zmean, zse = variational_objective(zero)
    mart = martingale_check(opt, eu2)
    ok = abs(mean - sol.phi00) <= 3 * se and mart.passed
    report = {"gamma": gamma, "phi00": sol.phi00, "n_paths": cfg.n_paths, "n_steps": opt.n_steps,
              "seed": cfg.seed, "optimal": {"mean": mean, "se": se},
              "zero": {"mean": zmean, "se": zse}, "martingale": mart.to_dict(), "passed": ok}
    em.emit("sde_check.json", dumps(report))
    return 0 if ok else 1


def cmd_selftest(cfg: RunConfig, em: Emitter) -> int:
    from .acceptance import run_all
    lines = []
    results = run_all(printer=lambda s: (lines.append(s), print(s, flush=True)))
    if em.out is not None:
        (em.out / "selftest.txt").write_text("\n".join(lines) + "\n")
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "eval": cmd_eval,
    "minimize": cmd_minimize,
    "scan": cmd_scan,
    "legendre": cmd_legendre,
    "dual-check": cmd_dual_check,
    "rem": cmd_rem,
    "sde-check": cmd_sde_check,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parisi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, help="directory for output files")
    p.add_argument("--threads", type=int, help="worker threads (overrides the config)")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    return p


def load_config(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(load_config(args.config))
        if args.threads is not None:
            cfg = replace(cfg, threads=_integer("--threads", args.threads, 1))
        if args.seed is not None:
            cfg = replace(cfg, seed=_integer("--seed", args.seed, 0))
        return COMMANDS[args.command](cfg, Emitter(args.out))
    except NotAParisiMeasure as exc:
        print(f"parisi {args.command}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError, ParisiError) as exc:
        print(f"parisi {args.command}: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

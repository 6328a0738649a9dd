"""Scenario runner: ``pslab run <config.json>`` and ``pslab oracle <config.json>``.

Exit status: 0 when every bound holds, 1 on a violation or failed oracle,
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger("pslab")

SCENARIOS = ("rearrange-grid", "verify-bounds", "sweep", "oracle-suite")
ORACLES = ("kn_identity", "symdiff_bound", "layer_cake", "psi1", "psi2")
ORACLE_TOLERANCES = {"kn_identity": 1e-10, "symdiff_bound": 1e-12, "layer_cake": 5e-3, "psi1": 1e-2, "psi2": 1e-9}
P_BOUNDS = ("theorem_finite", "cianchi_fusco", "theorem_morrey")
Q_BOUNDS = ("theorem_main", "density_ratio", "coarea_form")
FAMILY_DEFAULTS = {
    "cone": {"n": 2},
    "cone_frustrum": {"n": 2, "a": 0.5, "rho": 0.5, "rho_inner": 0.3, "e": 0.2},
    "staircase": {"n": 2, "levels": [[0.3, 1.0], [0.6, 0.7], [1.0, 0.4]]},
    "devils_staircase": {"n": 2, "cantor_depth": 8},
}
OUT_ENV = "PSLAB_OUT"


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field '{field_name}': {message}")
        self.field_name = field_name


@dataclass
class ScenarioConfig:
    scenario: str
    family: dict | None = None
    sweep: dict = field(default_factory=dict)
    bounds: list = field(default_factory=list)
    p: list = field(default_factory=lambda: [2.0])
    q: list = field(default_factory=lambda: [1.0])
    morrey_p: list = field(default_factory=lambda: [4.0])
    M: float | None = None
    phi: dict = field(default_factory=lambda: {"power": 2})
    psi: dict = field(default_factory=lambda: {"power": 1})
    resolution: int = 256
    thresholds: int = 512
    tolerance: float = 1e-3
    seed: int = 0
    fields: int = 4
    n: int = 2
    suite: list | None = None
    oracle_tolerance: float | None = None
    pairs: int = 4
    input: str | None = None

    @classmethod
    def from_dict(cls, data: dict, force_scenario: str | None = None) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "expected a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        scenario = force_scenario or data.get("scenario")
        if scenario is None:
            raise ConfigError("scenario", "missing")
        if scenario not in SCENARIOS:
            raise ConfigError("scenario", f"must be one of {', '.join(SCENARIOS)}")
        cfg = cls(**{**data, "scenario": scenario})
        cfg._validate()
        return cfg

    def _validate(self):
        for name in ("p", "q", "morrey_p"):
            val = getattr(self, name)
            if not isinstance(val, list):
                val = [val]
                setattr(self, name, val)
            if not val:
                raise ConfigError(name, "must be a nonempty list")
            if not all(isinstance(x, (int, float)) and x >= 1 for x in val):
                raise ConfigError(name, "exponents must be numbers >= 1")
        if not (isinstance(self.tolerance, (int, float)) and self.tolerance > 0):
            raise ConfigError("tolerance", "must be positive")
        if not (isinstance(self.resolution, int) and self.resolution >= 8):
            raise ConfigError("resolution", "must be an integer >= 8")
        if not isinstance(self.seed, int):
            raise ConfigError("seed", "must be an integer")
        if self.scenario in ("verify-bounds", "sweep"):
            if self.family is None:
                raise ConfigError("family", "missing")
            if not isinstance(self.family, dict) or "tag" not in self.family:
                raise ConfigError("family", "needs a 'tag'")
            from .extremal import FAMILIES

            if self.family["tag"] not in FAMILIES:
                raise ConfigError("family.tag", f"unknown family {self.family['tag']!r}")
            if not isinstance(self.family.get("params", {}), dict):
                raise ConfigError("family.params", "must be an object")
        if self.scenario == "verify-bounds" and self.M is None:
            raise ConfigError("M", "the Morrey constant is required (no default)")
        if self.scenario == "sweep":
            if not self.sweep or not isinstance(self.sweep, dict):
                raise ConfigError("sweep", "must map parameter names to nonempty value lists")
            for k, v in self.sweep.items():
                if not isinstance(v, list) or not v:
                    raise ConfigError(f"sweep.{k}", "must be a nonempty list")
            if not self.bounds:
                raise ConfigError("bounds", "must list at least one bound")
            from .verify import BOUNDS

            for b in self.bounds:
                if b not in BOUNDS and b != "theorem_morrey":
                    raise ConfigError("bounds", f"unknown bound {b!r}")
            if "theorem_morrey" in self.bounds and self.M is None:
                raise ConfigError("M", "the Morrey constant is required (no default)")
        if self.scenario == "oracle-suite" and self.suite is not None:
            if not isinstance(self.suite, list):
                raise ConfigError("suite", "must be a list")
            for s in self.suite:
                if s not in ORACLES:
                    raise ConfigError("suite", f"unknown oracle {s!r}")
        if self.oracle_tolerance is not None and not (isinstance(self.oracle_tolerance, (int, float)) and self.oracle_tolerance >= 0):
            raise ConfigError("oracle_tolerance", "must be a nonnegative number")
        from .functionals import young_validate

        for name in ("phi", "psi"):
            try:
                young_validate(getattr(self, name))
            except (ValueError, TypeError) as exc:
                raise ConfigError(name, str(exc)) from None


def load_config(path: str, force_scenario: str | None = None) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return ScenarioConfig.from_dict(data, force_scenario)


# -- formatting ---------------------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (list, tuple)):
        return "[" + " ".join(fmt(v) for v in x) + "]"
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "inf" if math.isinf(x) else f"{float(x):.12g}"
    return str(x)


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_plain) + "\n")


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def write_columns(path: Path, header: str, rows) -> None:
    lines = [f"# {header}"] + [f"{fmt(a)} {fmt(b)}" for a, b in rows]
    path.write_text("\n".join(lines) + "\n")


# -- scenarios ----------------------------------------------------------------------------------


def _family(cfg: ScenarioConfig, overrides: dict | None = None):
    from .extremal import make_family

    tag = cfg.family["tag"]
    params = {**FAMILY_DEFAULTS.get(tag, {}), **cfg.family.get("params", {}), **(overrides or {})}
    try:
        return make_family(tag, **params), params
    except (TypeError, ValueError) as exc:
        raise ConfigError("family.params", str(exc)) from None


def run_verify_bounds(cfg: ScenarioConfig, out: Path) -> int:
    from .functionals import level_symdiff, young_validate
    from .verify import (
        verify_cf_bound,
        verify_corollary_finite,
        verify_corollary_young,
        verify_density_bound,
        verify_theorem_finite,
        verify_theorem_main,
        verify_theorem_morrey,
    )

    spec, _ = _family(cfg)
    p, q, mp, tol = cfg.p[0], cfg.q[0], cfg.morrey_p[0], cfg.tolerance
    phi, psi = young_validate(cfg.phi), young_validate(cfg.psi)
    reports = [
        verify_theorem_main(spec, q, tol),
        verify_theorem_finite(spec, p, tol),
        verify_theorem_morrey(spec, mp, cfg.M, tol),
        verify_cf_bound(spec, p, tol),
        verify_density_bound(spec, q, tol),
        verify_corollary_young(spec, phi, psi, tol),
        verify_corollary_finite(spec, phi, tol),
    ]
    for r in reports:
        log.info("%-18s lhs=%.6g rhs=%.6g ratio=%.4g %s", r.bound_id, r.lhs, r.rhs, r.ratio, r.verdict)
    write_json(out / "reports.json", {"spec": spec.to_dict(), "seed": cfg.seed, "reports": [r.to_dict() for r in reports]})
    ts = np.linspace(0.0, spec.top_height, 201)
    sd = level_symdiff(spec, spec.aligned_rearrangement(), ts)
    write_columns(out / "level_symdiff.dat", "level symdiff", zip(ts, sd))
    write_columns(out / "ratios.dat", "report_index ratio", ((i, r.ratio) for i, r in enumerate(reports)))
    return 0 if all(r.ok for r in reports) else 1


def _sweep_task(args):
    cfg_dict, overrides, bound_id, exponent = args
    from .verify import run_bound

    cfg = ScenarioConfig.from_dict(cfg_dict)
    spec, _ = _family(cfg, overrides)
    kw = {"tolerance": cfg.tolerance}
    if bound_id == "theorem_morrey":
        kw["M"] = cfg.M
    rep = run_bound(bound_id, spec, exponent, **kw)
    return {"lhs": rep.lhs, "rhs": rep.rhs, "ratio": rep.ratio, "verdict": rep.verdict, "n": spec.n, "extra": rep.extra}


def sweep_tasks(cfg: ScenarioConfig) -> tuple[list[str], list[tuple]]:
    keys = list(cfg.sweep)
    tasks = []
    for values in itertools.product(*(cfg.sweep[k] for k in keys)):
        overrides = dict(zip(keys, values))
        for bound_id in cfg.bounds:
            exps = cfg.morrey_p if bound_id == "theorem_morrey" else cfg.p if bound_id in P_BOUNDS else cfg.q
            for x in exps:
                tasks.append((overrides, bound_id, float(x)))
    return keys, tasks


def run_sweep(cfg: ScenarioConfig, out: Path, jobs: int = 1) -> int:
    keys, tasks = sweep_tasks(cfg)
    cfg_dict = cfg.__dict__.copy()
    payload = [(cfg_dict, o, b, x) for o, b, x in tasks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, payload))
    else:
        results = [_sweep_task(t) for t in payload]
    base = {**FAMILY_DEFAULTS.get(cfg.family["tag"], {}), **cfg.family.get("params", {})}
    param_cols = sorted(k for k in set(base) | set(keys) if k != "n")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bound_id", "n", "p_or_q", *param_cols, "lhs", "rhs", "ratio", "verdict"])
    plots: dict[tuple, list] = {}
    for (overrides, bound_id, x), res in zip(tasks, results):
        params = {**base, **overrides}
        writer.writerow([bound_id, res["n"], fmt(x), *(fmt(params.get(k, "")) for k in param_cols), fmt(res["lhs"]), fmt(res["rhs"]), fmt(res["ratio"]), res["verdict"]])
        plots.setdefault((bound_id, x), []).append((overrides[keys[0]], res["ratio"]))
        log.info("%s %s=%s %s ratio=%.4g %s", bound_id, "p/q", fmt(x), overrides, res["ratio"], res["verdict"])
    (out / "sweep.csv").write_text(buf.getvalue())
    for (bound_id, x), rows in plots.items():
        write_columns(out / f"ratio_{bound_id}_{fmt(x)}.dat", f"{keys[0]} ratio", rows)
    violated = any(r["verdict"] == "violated" for r in results)
    write_json(out / "summary.json", {"rows": len(results), "violated": violated, "seed": cfg.seed})
    return 1 if violated else 0


def run_rearrange_grid(cfg: ScenarioConfig, out: Path) -> int:
    from .field import distribution_function, gradient_norm_lp, load_field, random_bumps
    from .functionals import dirichlet_functional, young_validate
    from .rearrangement import rearrange

    rng = np.random.default_rng(cfg.seed)
    if cfg.input:
        try:
            fields = [load_field(cfg.input)]
        except (OSError, ValueError) as exc:
            raise ConfigError("input", str(exc)) from None
    else:
        fields = [random_bumps(rng, cfg.resolution, cfg.n) for _ in range(cfg.fields)]
    phi = young_validate(cfg.phi)
    slack = 0.02
    rows = []
    violated = False
    for k, f in enumerate(fields):
        star = rearrange(f)
        equi = bool(np.array_equal(np.sort(f.values, axis=None), np.sort(star.values, axis=None)))
        entry = {"field": k, "equimeasurable": equi, "gradient": {}, "dirichlet": {}}
        for p in cfg.p:
            a, b = gradient_norm_lp(star, p), gradient_norm_lp(f, p)
            entry["gradient"][fmt(p)] = {"star": a, "original": b, "ratio": a / b if b else 0.0}
            violated |= a > b * (1 + slack)
        a, b = dirichlet_functional(star, phi), dirichlet_functional(f, phi)
        entry["dirichlet"] = {"star": a, "original": b, "ratio": a / b if b else 0.0}
        violated |= a > b * (1 + slack) or not equi
        rows.append(entry)
        log.info("field %d: equimeasurable=%s", k, equi)
    write_json(out / "rearrange.json", {"seed": cfg.seed, "slack": slack, "fields": rows})
    if fields:
        dist = distribution_function(fields[0], count=cfg.thresholds)
        r = (dist.values / math.pi) ** 0.5 if fields[0].n == 2 else dist.values
        write_columns(out / "profile.dat", "level radius", zip(dist.thresholds, r))
    return 1 if violated else 0


def run_oracle_suite(cfg: ScenarioConfig, out: Path) -> int:
    names = list(ORACLES) if cfg.suite is None else list(cfg.suite)
    rng = np.random.default_rng(cfg.seed)
    results = {}
    for name in names:
        disc, detail = ORACLE_RUNNERS[name](rng, cfg)
        tol = ORACLE_TOLERANCES[name] if cfg.oracle_tolerance is None else cfg.oracle_tolerance
        results[name] = {"max_discrepancy": disc, "tolerance": tol, "passed": bool(disc <= tol), "detail": detail}
        log.info("%-14s discrepancy=%.3g tolerance=%.3g %s", name, disc, tol, "ok" if disc <= tol else "FAILED")
    passed = all(r["passed"] for r in results.values())
    write_json(out / "oracles.json", {"seed": cfg.seed, "passed": passed, "oracles": results})
    return 0 if passed else 1


def _oracle_kn(rng, cfg):
    from .geometry import kn_constant, kn_quadrature

    errs = [abs(kn_constant(n) - kn_quadrature(n)) / kn_constant(n) for n in range(1, 11)]
    return max(errs), {"per_n": errs}


def _oracle_symdiff(rng, cfg):
    from .geometry import ball_symdiff_volume, ball_volume, symdiff_bound

    worst_excess, worst_1d = 0.0, 0.0
    for n in (1, 2, 3):
        for r in np.linspace(0.1, 2.0, 20):
            d = np.linspace(0.0, 2 * r, 20)
            exact = ball_symdiff_volume(n, r, d)
            bound = symdiff_bound(n, ball_volume(n, r), d)
            worst_excess = max(worst_excess, float(np.max(np.maximum(exact - bound, 0.0) / np.maximum(bound, 1e-300))))
            if n == 1:
                worst_1d = max(worst_1d, float(np.max(np.abs(exact - bound))))
    return max(worst_excess, worst_1d), {"excess": worst_excess, "one_dimensional_gap": worst_1d}


def _oracle_layer_cake(rng, cfg):
    from .field import psi_integral, random_bumps
    from .functionals import YoungFunction

    worst = 0.0
    for _ in range(cfg.pairs):
        f = random_bumps(rng, cfg.resolution, cfg.n)
        for q in (1, 2, 3):
            res = psi_integral(f, YoungFunction.power(q), count=cfg.thresholds, tolerance=math.inf)
            worst = max(worst, res.discrepancy)
    return worst, {}


def _young_trio():
    from .functionals import YoungFunction, young_validate

    smooth = young_validate({"breakpoints": [[0, 0], [0.2, 0], [0.5, 0.15], [1, 0.9]], "smooth": 0.05})
    return [YoungFunction.power(2), YoungFunction.power(3), smooth]


def _oracle_psi1(rng, cfg):
    from .field import random_bumps
    from .functionals import psi1_oracle, psi_distance

    worst = 0.0
    for _ in range(cfg.pairs):
        f, g = random_bumps(rng, cfg.resolution, cfg.n), random_bumps(rng, cfg.resolution, cfg.n)
        for psi in _young_trio():
            d = psi_distance(f, g, psi)
            o = psi1_oracle(f, g, psi)
            worst = max(worst, abs(o.value - d) / d)
    return worst, {}


def _oracle_psi2(rng, cfg):
    from .field import random_bumps
    from .functionals import YoungFunction, psi2_bound, psi_distance

    worst = 0.0
    for _ in range(cfg.pairs):
        f, g = random_bumps(rng, cfg.resolution, cfg.n), random_bumps(rng, cfg.resolution, cfg.n)
        for psi in _young_trio():
            d, b = psi_distance(f, g, psi), psi2_bound(f, g, psi)
            worst = max(worst, max(d - b, 0.0) / b)
        lin = YoungFunction.power(1)
        d, b = psi_distance(f, g, lin), psi2_bound(f, g, lin)
        worst = max(worst, abs(d - b) / b)
    return worst, {}


ORACLE_RUNNERS = {
    "kn_identity": _oracle_kn,
    "symdiff_bound": _oracle_symdiff,
    "layer_cake": _oracle_layer_cake,
    "psi1": _oracle_psi1,
    "psi2": _oracle_psi2,
}

RUNNERS = {
    "verify-bounds": lambda cfg, out, jobs: run_verify_bounds(cfg, out),
    "sweep": run_sweep,
    "rearrange-grid": lambda cfg, out, jobs: run_rearrange_grid(cfg, out),
    "oracle-suite": lambda cfg, out, jobs: run_oracle_suite(cfg, out),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pslab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the scenario described by a JSON config")
    run.add_argument("config")
    run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./pslab-out)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    run.add_argument("--seed", type=int, help="override the config seed")
    oracle = sub.add_parser("oracle", help="run the oracle cross-checks")
    oracle.add_argument("config")
    oracle.add_argument("--out")
    oracle.add_argument("--seed", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config, "oracle-suite" if args.command == "oracle" else None)
        if args.seed is not None:
            cfg.seed = args.seed
        jobs = getattr(args, "jobs", 1)
        if jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        out = Path(args.out or os.environ.get(OUT_ENV) or "pslab-out")
        out.mkdir(parents=True, exist_ok=True)
        status = RUNNERS[cfg.scenario](cfg, out, jobs)
    except ConfigError as exc:
        print(f"pslab: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pslab: I/O error: {exc}", file=sys.stderr)
        return 2
    print(f"pslab: {cfg.scenario} {'ok' if status == 0 else 'VIOLATION'}; outputs in {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())

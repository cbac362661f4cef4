"""Command-line workbench: generators, curvature audits, corona, beta, transport, capacity."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, errors
from .capacity import CapacityParams, estimate_alpha, estimate_gamma, verify_feasibility
from .corona.build import build_top, density_audit, packing_audit, verify_structure
from .corona.classify import CoronaParams
from .curvature import c2_auto, mv_identity_report, operator_norm_estimate
from .generators import GeneratorSpec, generate
from .jones import beta_criterion
from .measure import WeightedPlanarMeasure, dumps_csv, growth_constant, loads_csv, normalize
from .squares import DyadicSquare
from .svg import corona_svg, measure_svg
from .transport import BilipschitzMapSpec, capacity_ratio_experiment, pushforward, teocurv_experiment

SCHEMA = 1
PIPELINES = ("curvature", "mv-check", "corona", "beta", "transport", "capacity", "audit")

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_INTERNAL = 0, 2, 3, 4

_INPUT_ERRORS = (
    errors.MeasureFormatError,
    errors.BadSpecError,
    errors.DimensionMismatchError,
    errors.IndexOutOfRangeError,
    FileNotFoundError,
    json.JSONDecodeError,
)
_PRECONDITION_ERRORS = (
    errors.PreconditionViolated,
    errors.EpsTooLargeError,
    errors.InapplicableError,
    errors.EmptyMeasureError,
    errors.EmptySupportError,
    errors.TooFewAtomsError,
    errors.CurveMissesSquareError,
    errors.DegenerateCurveError,
    errors.MapUndefinedError,
    errors.NotNestedError,
    errors.ZeroSideLengthError,
    errors.EmptySquareError,
    errors.CenterNotInHalfError,
)


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.exc = exc


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def load_input(source: str) -> tuple[WeightedPlanarMeasure, str]:
    """A CSV path or ``gen:SPEC``; returns the measure and the sha256 of its CSV form."""
    if source.startswith("gen:"):
        m = generate(GeneratorSpec.parse(source[4:]))
        data = dumps_csv(m).encode()
    else:
        data = Path(source).read_bytes()
        try:
            text = data.decode()
        except UnicodeDecodeError as exc:
            raise errors.MeasureFormatError(f"{source}: not UTF-8 text") from exc
        m = loads_csv(text, name=Path(source).stem)
    return m, hashlib.sha256(data).hexdigest()


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (StageError, KeyboardInterrupt):
        raise
    except Exception as exc:  # noqa: BLE001 - every failure is reported with its stage
        raise StageError(name, exc) from exc


# ------------------------------------------------------------------ pipelines

def run_curvature(m, cfg) -> dict:
    eps = float(cfg.get("eps", 0.0))
    res = _stage("c2", c2_auto, m, eps, int(cfg.get("mc_cutoff", 400)), int(cfg.get("samples", 10**6)), int(cfg["seed"]))
    out = {"c2": res.to_json(), "monte_carlo": res.method != "exact"}
    if cfg.get("norm"):
        out["operator_norm"] = _stage("norm", operator_norm_estimate, m, eps, seed=int(cfg["seed"])).to_json()
    return out


def run_mv(m, cfg) -> dict:
    rep = _stage("mv-check", mv_identity_report, m, float(cfg.get("eps", 0.0)))
    out = rep.to_json()
    out["relative_residual"] = abs(rep.residual) / max(rep.lhs, 1.0)
    return out


def run_corona(m, cfg) -> tuple[dict, str | None]:
    p = CoronaParams(**cfg.get("corona", {}))
    if cfg.get("normalize", True):
        m, tr = _stage("normalize", normalize, m)
    else:
        tr = None
    d = _stage("build_top", build_top, m, p)
    audit = _stage("packing_audit", packing_audit, d, m)
    out = {
        "decomposition": d.to_json(tr),
        "audit": audit.to_json(),
        "structure": _stage("verify", verify_structure, d, m).to_json(),
        "density_constant": _stage("density", density_audit, d, m),
        "transform": tr.to_json() if tr else None,
    }
    return out, corona_svg(d, m)


def _default_square(pts: np.ndarray) -> DyadicSquare:
    from .corona.build import root_square

    r = root_square(WeightedPlanarMeasure(pts[:, 0], pts[:, 1], np.ones(len(pts))))
    return DyadicSquare(r.level, r.i + 1, r.j + 1)


def run_beta(m, cfg) -> tuple[dict, str]:
    pts = np.stack([m.xs, m.ys], axis=1)
    if "square" in cfg:
        q = DyadicSquare.from_json(cfg["square"])
    else:
        q = _default_square(pts)
    depth = int(cfg.get("max_depth", q.level + 8))
    prof = _stage("beta", beta_criterion, pts, q, depth)
    return prof.to_json(), prof.to_csv()


def run_transport(m, cfg) -> dict:
    phi = _stage("map", BilipschitzMapSpec.parse, cfg["map"])
    rep = _stage(
        "teocurv", teocurv_experiment, phi, m,
        int(cfg.get("mc_cutoff", 400)), int(cfg.get("samples", 10**6)), int(cfg["seed"]),
    )
    out = {"map": phi.to_json(), "transport": rep.to_json()}
    if cfg.get("norm"):
        before = _stage("norm", operator_norm_estimate, m, seed=int(cfg["seed"]))
        after = _stage("norm", operator_norm_estimate, pushforward(phi, m), seed=int(cfg["seed"]))
        out["operator_norm"] = {"before": before.to_json(), "after": after.to_json(), "ratio": after.value / before.value if before.value else None}
    if cfg.get("capacity"):
        out["capacity"] = _stage("capacity", capacity_ratio_experiment, phi, m, CapacityParams(seed=int(cfg["seed"]), **cfg.get("estimator", {})))
    return out


def run_capacity(m, cfg) -> dict:
    est_cfg = dict(cfg.get("estimator", {}))
    est_cfg.setdefault("seed", int(cfg["seed"]))
    params = CapacityParams(**est_cfg)
    pts = np.stack([m.xs, m.ys], axis=1)
    fn = estimate_gamma if params.eta == 1.0 else estimate_alpha
    est = _stage("estimate", fn, pts, params)
    return {"estimate": est.to_json(), "weights": est.measure.ws}


def run_audit(m, cfg) -> dict:
    g = _stage("growth", growth_constant, m)
    f = _stage("feasibility", verify_feasibility, m, cfg.get("resolution"))
    return {"growth": g.to_json(), "feasibility": f.to_json()}


def _validate(config) -> None:
    if not isinstance(config, dict) or config.get("schema") != SCHEMA:
        raise errors.BadSpecError(f"config schema must be {SCHEMA}")
    if config.get("pipeline") not in PIPELINES:
        raise errors.BadSpecError(f"unknown pipeline {config.get('pipeline')!r}")
    if not isinstance(config.get("seed"), int):
        raise errors.BadSpecError("config needs an integer seed")
    if not isinstance(config.get("input"), str):
        raise errors.BadSpecError("config needs an input path or gen:SPEC")


def run_experiment(config: dict) -> dict:
    """Run one pipeline from a schema-1 config; writes the report (and SVG/CSV) when paths are given."""
    _stage("config", _validate, config)
    pipeline = config["pipeline"]
    m, digest = _stage("input", load_input, config["input"])
    svg = csv_text = None
    if pipeline == "curvature":
        body = run_curvature(m, config)
    elif pipeline == "mv-check":
        body = run_mv(m, config)
    elif pipeline == "corona":
        body, svg = run_corona(m, config)
    elif pipeline == "beta":
        body, csv_text = run_beta(m, config)
    elif pipeline == "transport":
        body = run_transport(m, config)
    elif pipeline == "capacity":
        body = run_capacity(m, config)
    else:
        body = run_audit(m, config)
    report = {
        "tool": "mengerkit",
        "version": __version__,
        "pipeline": pipeline,
        "config": config,
        "input": {"source": config["input"], "sha256": digest, "atoms": m.n},
        "result": body,
    }
    if config.get("output"):
        Path(config["output"]).write_text(dumps_report(report))
    if svg is not None and config.get("svg"):
        Path(config["svg"]).write_text(svg)
    elif config.get("svg") and pipeline != "corona":
        Path(config["svg"]).write_text(measure_svg(m))
    if csv_text is not None and config.get("csv"):
        Path(config["csv"]).write_text(csv_text)
    return report


# ------------------------------------------------------------------ argparse

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker threads for compiled kernels")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--svg", default=None, help="optional SVG plot path")

    p = argparse.ArgumentParser(prog="mengerkit", description=__doc__, parents=[common])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a generated measure as CSV")
    g.add_argument("spec", help="cantor4:D | segment:N | circle:N | grid:N | random:N[:SEED] | graph:N[:x,y;...]")

    def with_input(name, help_):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("input", help="CSV path or gen:SPEC")
        return s

    s = with_input("curvature", "c^2 of a measure")
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--mc-cutoff", type=int, default=400)
    s.add_argument("--samples", type=int, default=10**6)
    s.add_argument("--norm", action="store_true", help="also estimate the Cauchy operator norm")

    s = with_input("mv-check", "discrete Cauchy/curvature identity audit")
    s.add_argument("--eps", type=float, default=0.0)

    s = with_input("beta", "beta-number square sum")
    s.add_argument("--level", type=int)
    s.add_argument("--i", type=int, default=0)
    s.add_argument("--j", type=int, default=0)
    s.add_argument("--max-depth", type=int)
    s.add_argument("--csv", default=None, help="per-level CSV path")

    s = with_input("corona", "top squares, stop families and packing audit")
    s.add_argument("--A", type=float, default=100.0)
    s.add_argument("--delta", type=float, default=0.01)
    s.add_argument("--eps0", type=float, default=1e-4)
    s.add_argument("--no-normalize", action="store_true")

    s = with_input("push", "image measure under a map")
    s.add_argument("--map", required=True)

    s = with_input("transport", "curvature transport ratio under a map")
    s.add_argument("--map", required=True)
    s.add_argument("--mc-cutoff", type=int, default=400)
    s.add_argument("--samples", type=int, default=10**6)
    s.add_argument("--norm", action="store_true")
    s.add_argument("--capacity", action="store_true")

    s = with_input("capacity", "feasible-measure capacity estimate")
    s.add_argument("--eta", type=float, default=1.0)
    s.add_argument("--passes", type=int, default=50)
    s.add_argument("--step", type=float, default=0.1)

    s = with_input("audit", "growth constant and feasibility")
    s.add_argument("--resolution", type=float, default=None)

    s = sub.add_parser("run", parents=[common], help="run a JSON experiment config")
    s.add_argument("config")
    return p


def _config_from_args(a) -> dict:
    cfg = {"schema": SCHEMA, "pipeline": a.verb, "input": a.input, "seed": a.seed}
    if a.verb in ("curvature", "mv-check"):
        cfg["eps"] = a.eps
    if a.verb == "curvature":
        cfg.update(mc_cutoff=a.mc_cutoff, samples=a.samples, norm=a.norm)
    elif a.verb == "beta":
        if a.level is not None:
            cfg["square"] = {"level": a.level, "i": a.i, "j": a.j}
        if a.max_depth is not None:
            cfg["max_depth"] = a.max_depth
        if a.csv:
            cfg["csv"] = a.csv
    elif a.verb == "corona":
        cfg["corona"] = {"A": a.A, "delta": a.delta, "eps0": a.eps0}
        cfg["normalize"] = not a.no_normalize
    elif a.verb == "transport":
        cfg.update(map=a.map, mc_cutoff=a.mc_cutoff, samples=a.samples, norm=a.norm, capacity=a.capacity)
    elif a.verb == "capacity":
        cfg["estimator"] = {"eta": a.eta, "passes": a.passes, "step": a.step}
    elif a.verb == "audit" and a.resolution is not None:
        cfg["resolution"] = a.resolution
    if a.svg:
        cfg["svg"] = a.svg
    return cfg


def _fail(code: int, kind: str, message: str, stage: str | None = None) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "stage": stage, "exit_code": code}, sort_keys=True) + "\n")
    return code


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    a = _parser().parse_args(argv)
    if a.threads is not None:
        import numba

        numba.set_num_threads(max(1, min(a.threads, numba.config.NUMBA_NUM_THREADS)))
    try:
        if a.verb == "gen":
            _emit(dumps_csv(generate(GeneratorSpec.parse(a.spec))), a.out)
            return EXIT_OK
        if a.verb == "push":
            m, _ = load_input(a.input)
            img = pushforward(BilipschitzMapSpec.parse(a.map), m)
            _emit(dumps_csv(img), a.out)
            if a.svg:
                Path(a.svg).write_text(measure_svg(img))
            return EXIT_OK
        if a.verb == "run":
            cfg = json.loads(Path(a.config).read_text())
            report = run_experiment(cfg)
            if not cfg.get("output"):
                _emit(dumps_report(report), a.out)
            return EXIT_OK
        report = run_experiment(_config_from_args(a))
        _emit(dumps_report(report), a.out)
        return EXIT_OK
    except StageError as exc:
        inner = exc.exc
        if isinstance(inner, _INPUT_ERRORS):
            return _fail(EXIT_INPUT, type(inner).__name__, str(inner), exc.stage)
        if isinstance(inner, _PRECONDITION_ERRORS):
            return _fail(EXIT_PRECONDITION, type(inner).__name__, str(inner), exc.stage)
        if isinstance(inner, (ValueError, TypeError)):
            return _fail(EXIT_INPUT, type(inner).__name__, str(inner), exc.stage)
        return _fail(EXIT_INTERNAL, type(inner).__name__, str(inner), exc.stage)
    except _INPUT_ERRORS as exc:
        return _fail(EXIT_INPUT, type(exc).__name__, str(exc), "input")
    except _PRECONDITION_ERRORS as exc:
        return _fail(EXIT_PRECONDITION, type(exc).__name__, str(exc), "input")
    except (ValueError, TypeError, KeyError) as exc:
        return _fail(EXIT_INPUT, type(exc).__name__, str(exc), "config")
    except Exception as exc:  # noqa: BLE001
        return _fail(EXIT_INTERNAL, type(exc).__name__, str(exc))


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 numeric failure, 64 usage error.
Every command prints its run manifest as one JSON line on stdout and writes
results only to ``--out``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import containers, reports
from .approx import ApproxConfig
from .errors import ConfigError, InputError, NumericError
from .evaluation import (
    baseline_curve,
    evaluate_baseline,
    evaluate_grid,
    select_switching_policy,
    step_latency,
    tradeoff_curve,
)
from .lstm import ApproxLstmModel, LstmState, approximate_model, run_sequence, step_function
from .perf import PLATFORM_DIR, dse, dse_baseline, initiation_interval, load_platform
from .synthetic import GeneratorParams, gen_decoder, gen_eval_set, gen_model

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64

DEFAULT_PLATFORM = "zc706"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# -- shared helpers ----------------------------------------------------------


def resolve_platform(name: str) -> Path:
    """A bundled platform name (``zc706``, ``desk16``) or a path to a platform file."""
    bundled = PLATFORM_DIR / f"{name}.txt"
    if bundled.is_file():
        return bundled
    path = Path(name)
    if not path.is_file():
        raise InputError(f"platform {name!r} is neither a bundled name nor a file")
    return path


def _out_format(args) -> str:
    if args.format:
        return args.format
    return "json" if str(args.out).lower().endswith(".json") else "csv"


def _model_shape(args) -> tuple[int, int]:
    if args.model:
        m = containers.load_model(args.model)
        return m.input_size, m.hidden_size
    if args.hidden is None or args.input is None:
        raise InputError("give --model or both --hidden and --input")
    return args.input, args.hidden


def _nz_list(args, C: int) -> list[int]:
    nz = args.nz or [C]
    for v in nz:
        if not 1 <= v <= C:
            raise ConfigError(f"nz={v} outside [1, {C}]")
    return sorted(set(nz))


def _emit(manifest: dict) -> None:
    print(reports.canonical_json({"manifest": manifest, "manifest_hash": reports.manifest_hash(manifest)}))


def _inputs(args, drop=("out", "format", "func", "command")) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in drop}


def _files(**paths) -> dict:
    return {k: v for k, v in paths.items() if v is not None}


def build_manifest(command: str, args, seeds: dict, files: dict) -> dict:
    inputs = _inputs(args)
    # files are identified by content, so the same model at another path reproduces
    for role in files:
        inputs.pop(role, None)
    m = reports.build_manifest(command, inputs, seeds, files)
    for entry in m["files"].values():
        entry["path"] = Path(entry["path"]).name
    return m


# -- commands ----------------------------------------------------------------


def cmd_gen_model(args) -> None:
    if args.hidden < 1 or args.input < 1:
        raise ConfigError("--hidden and --input must be >= 1")
    m = gen_model(args.input, args.hidden, args.seed, args.gain, args.decay)
    manifest = build_manifest("gen-model", args, {"model": args.seed}, {})
    containers.save_model(args.out, m)
    _emit(manifest)


def cmd_decompose(args) -> None:
    if args.model is None:
        raise InputError("decompose needs --model")
    if not args.nz or len(args.nz) != 1:
        raise InputError("decompose takes exactly one --nz")
    m = containers.load_model(args.model)
    cfg = ApproxConfig(nz=args.nz[0], n_steps=args.n_steps, seed=args.seed)
    approx = approximate_model(m, cfg)
    manifest = build_manifest("decompose", args, {"svd": args.seed}, _files(model=args.model))
    containers.save_factors(args.out, approx)
    _emit(manifest)


def cmd_run(args) -> None:
    if args.model is None and args.factors is None:
        raise InputError("run needs --model or --factors")
    model = containers.load_factors(args.factors) if args.factors else containers.load_model(args.model)
    upto = None
    if isinstance(model, ApproxLstmModel):
        upto = args.n_steps or model.n_terms
        if not 1 <= upto <= model.n_terms:
            raise ConfigError(f"--n-steps {upto} outside [1, {model.n_terms}]")
    if args.seq_len < 1:
        raise ConfigError("--seq-len must be >= 1")
    rng = np.random.default_rng([args.seed, 3])
    xs = rng.standard_normal((args.seq_len, model.input_size)).astype(np.float32)
    states = run_sequence(step_function(model, upto), xs, LstmState.zeros(model.hidden_size))
    files = _files(model=args.model if not args.factors else None, factors=args.factors)
    manifest = build_manifest("run", args, {"inputs": args.seed}, files)
    R = model.hidden_size
    header = ["t", *[f"h{i}" for i in range(R)]]
    rows = [[t, *map(float, s.h)] for t, s in enumerate(states)]
    body = {
        "n_steps": upto,
        "hidden": [[reports.json_number(v) for v in s.h] for s in states],
        "cell": [[reports.json_number(v) for v in s.c] for s in states],
    }
    reports.write_report(args.out, _out_format(args), manifest, header, rows, body)
    _emit(manifest)


DSE_HEADER = [
    "design",
    "nz",
    "tr",
    "tc",
    "n_steps",
    "ii_cycles",
    "perf_ops_per_s",
    "ctc_ops_per_byte",
    "attainable_ops_per_s",
    "speedup_vs_baseline",
]


def _point_row(d, base_attainable: float | None) -> list:
    speed = d.attainable_ops_per_s / base_attainable if base_attainable else float("nan")
    return [
        d.kind,
        d.nz,
        d.tr,
        d.tc,
        d.n_steps,
        float(d.ii_cycles),
        d.perf_ops_per_s,
        d.ctc_ops_per_byte,
        d.attainable_ops_per_s,
        speed,
    ]


def cmd_dse(args) -> None:
    input_size, R = _model_shape(args)
    C = input_size + R
    platform_path = resolve_platform(args.platform)
    p = load_platform(platform_path)
    nz = _nz_list(args, C)
    n_steps = args.n_steps or 1
    res = dse(p, R, C, nz, n_steps=n_steps, exhaustive=args.exhaustive)
    base = dse_baseline(p, R, C, exhaustive=args.exhaustive)
    manifest = build_manifest("dse", args, {}, _files(model=args.model, platform=platform_path))
    base_att = base.best[0].attainable_ops_per_s if base.best else None
    rows = [_point_row(d, base_att) for d in base.best + res.best]
    body = {
        "hidden": R,
        "cols": C,
        "best": [dict(zip(DSE_HEADER, _json_row(r))) for r in rows],
        "infeasible_nz": list(res.infeasible_nz),
        "baseline_feasible": bool(base.best),
    }
    reports.write_report(args.out, _out_format(args), manifest, DSE_HEADER, rows, body)
    _emit(manifest)


def _json_row(row) -> list:
    return [reports.json_number(v) if isinstance(v, float) else v for v in row]


def _setup(args):
    """Reference model, decoder, evaluation set and generator parameters."""
    if args.model:
        model = containers.load_model(args.model)
    else:
        if args.hidden is None or args.input is None:
            raise InputError("give --model or both --hidden and --input")
        model = gen_model(args.input, args.hidden, args.seed)
    params = GeneratorParams(
        input_size=model.input_size,
        hidden_size=model.hidden_size,
        vocab=args.vocab,
        seed=args.seed,
        n_items=args.items,
        prefix_len=args.prefix_len,
        max_len=args.max_len,
    )
    if args.vocab < 2 or args.items < 1 or args.max_len < 1 or args.prefix_len < 0:
        raise ConfigError("need --vocab >= 2, --items >= 1, --max-len >= 1, --prefix-len >= 0")
    decoder = gen_decoder(params.vocab, params.input_size, params.hidden_size, params.seed, params.max_len)
    items = gen_eval_set(params.n_items, params.prefix_len, params.input_size, params.vocab, params.seed)
    return model, decoder, items, params


def _designs(p, R, C, nz, n_steps, exhaustive) -> dict:
    res = dse(p, R, C, nz, n_steps=n_steps, exhaustive=exhaustive)
    if res.infeasible_nz:
        raise ConfigError(f"no feasible design on this platform for nz={list(res.infeasible_nz)}")
    return {v: res.best_for(v) for v in nz}


EVAL_HEADER = ["nz", "n_steps", "latency_s", "bleu_mean", "bleu_corpus"]


def _evaluate_common(args, command: str):
    model, decoder, items, params = _setup(args)
    R, C = model.hidden_size, model.cols
    nz = _nz_list(args, C)
    n_steps = args.n_steps or min(R, C)
    if args.seq_len < 1:
        raise ConfigError("--seq-len must be >= 1")
    platform_path = resolve_platform(args.platform)
    p = load_platform(platform_path)
    designs = _designs(p, R, C, nz, n_steps, args.exhaustive)
    grid = evaluate_grid(model, items, decoder, nz, n_steps, seed=args.seed, smoothing=args.smoothing)
    curves = {v: tradeoff_curve(grid, designs[v], R, p, args.seq_len) for v in nz}
    seeds = {"model": None if args.model else args.seed, "eval_set": args.seed, "svd": args.seed}
    manifest = build_manifest(command, args, seeds, _files(model=args.model, platform=platform_path))
    manifest["generator"] = params.as_dict()
    return model, decoder, items, p, designs, grid, curves, manifest, n_steps


def _grid_rows(grid, designs, R, p, seq_len, n_steps) -> list[list]:
    rows = []
    for v in grid.nz_list:
        d = designs[v]
        for k in range(1, n_steps + 1):
            lat = step_latency(initiation_interval(R, v, k, d.tr, d.tc), seq_len, p)
            rows.append([v, k, lat, grid.mean[(v, k)], grid.corpus[(v, k)]])
    return rows


def _curve_json(curve) -> dict:
    return {
        "label": curve.label,
        "points": [
            {"index": q.index, "latency_s": reports.json_number(q.latency_s), "bleu": reports.json_number(q.accuracy)}
            for q in curve.points
        ],
    }


def _design_json(d) -> dict:
    return {
        "kind": d.kind,
        "nz": d.nz,
        "tr": d.tr,
        "tc": d.tc,
        "attainable_ops_per_s": reports.json_number(d.attainable_ops_per_s),
    }


def _grid_json(grid, rows) -> list:
    out = []
    for v, k, lat, mean, corpus in rows:
        out.append(
            {
                "nz": v,
                "n_steps": k,
                "latency_s": reports.json_number(lat),
                "bleu_mean": reports.json_number(mean),
                "bleu_corpus": reports.json_number(corpus),
                "per_item": [reports.json_number(s) for s in grid.per_item[(v, k)]],
            }
        )
    return out


def cmd_evaluate(args) -> None:
    model, _, _, p, designs, grid, _, manifest, n_steps = _evaluate_common(args, "evaluate")
    rows = _grid_rows(grid, designs, model.hidden_size, p, args.seq_len, n_steps)
    body = {
        "designs": [_design_json(designs[v]) for v in grid.nz_list],
        "references": [list(r) for r in grid.references],
        "grid": _grid_json(grid, rows),
    }
    reports.write_report(args.out, _out_format(args), manifest, EVAL_HEADER, rows, body)
    _emit(manifest)


def cmd_tradeoff(args) -> None:
    model, decoder, items, p, designs, grid, curves, manifest, n_steps = _evaluate_common(args, "tradeoff")
    R, C = model.hidden_size, model.cols
    base_res = dse_baseline(p, R, C, exhaustive=args.exhaustive)
    if base_res.no_feasible_design:
        raise ConfigError("no feasible baseline design on this platform")
    bd = base_res.best[0]
    base = evaluate_baseline(model, items, decoder, bd.tr, smoothing=args.smoothing)
    bcurve = baseline_curve(base, bd, R, C, p, args.seq_len)
    policies = {v: select_switching_policy(curves[v], bcurve, f"approx nz={v}", "baseline") for v in grid.nz_list}

    rows = [["approx", *r] for r in _grid_rows(grid, designs, R, p, args.seq_len, n_steps)]
    rows += [["baseline", C, q.index, q.latency_s, base.mean[q.index], base.corpus[q.index]] for q in bcurve.points]
    body = {
        "designs": [_design_json(designs[v]) for v in grid.nz_list] + [_design_json(bd)],
        "curves": [_curve_json(curves[v]) for v in grid.nz_list] + [_curve_json(bcurve)],
        "grid": _grid_json(grid, _grid_rows(grid, designs, R, p, args.seq_len, n_steps)),
        "baseline": [
            {"tiles": n, "per_item": [reports.json_number(s) for s in base.per_item[n]]} for n in range(1, base.n_tiles + 1)
        ],
        "policies": [
            {
                "nz": v,
                "bleu_threshold": reports.json_number(pol.bleu_threshold),
                "time_threshold_s": reports.json_number(pol.time_threshold_s),
                "below": pol.below_design,
                "above": pol.above_design,
                "no_crossover": pol.no_crossover,
            }
            for v, pol in policies.items()
        ],
    }
    reports.write_report(args.out, _out_format(args), manifest, ["design", *EVAL_HEADER], rows, body)
    _emit(manifest)


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="approxlstm", description="Low-rank + pruning LSTM approximation toolkit.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(sp, report=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", required=True, help="output path")
        if report:
            sp.add_argument("--format", choices=("csv", "json"), help="default: from the --out suffix, else csv")

    sp = sub.add_parser("gen-model", help="write a seeded synthetic model")
    sp.add_argument("--hidden", type=int, required=True)
    sp.add_argument("--input", type=int, required=True)
    sp.add_argument("--gain", type=float, default=GeneratorParams.gain)
    sp.add_argument("--decay", type=float, default=GeneratorParams.decay)
    common(sp, report=False)
    sp.set_defaults(func=cmd_gen_model)

    sp = sub.add_parser("decompose", help="precompute refinement factors for a model")
    sp.add_argument("--model")
    sp.add_argument("--nz", type=int, action="append")
    sp.add_argument("--n-steps", type=int, required=True)
    common(sp, report=False)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("run", help="run a seeded input sequence through a model or factors")
    sp.add_argument("--model")
    sp.add_argument("--factors")
    sp.add_argument("--n-steps", type=int, help="refinement terms to use (factors only)")
    sp.add_argument("--seq-len", type=int, default=8)
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("dse", help="best tiling per nz under a platform")
    sp.add_argument("--model")
    sp.add_argument("--hidden", type=int)
    sp.add_argument("--input", type=int)
    sp.add_argument("--nz", type=int, action="append")
    sp.add_argument("--n-steps", type=int)
    sp.add_argument("--platform", default=DEFAULT_PLATFORM)
    sp.add_argument("--exhaustive", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_dse)

    for name, func, text in (
        ("evaluate", cmd_evaluate, "BLEU and latency over the (nz, n_steps) grid"),
        ("tradeoff", cmd_tradeoff, "latency/BLEU curves against the baseline and the switching policy"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--model")
        sp.add_argument("--hidden", type=int)
        sp.add_argument("--input", type=int)
        sp.add_argument("--nz", type=int, action="append")
        sp.add_argument("--n-steps", type=int)
        sp.add_argument("--platform", default=DEFAULT_PLATFORM)
        sp.add_argument("--seq-len", type=int, default=16)
        sp.add_argument("--vocab", type=int, default=GeneratorParams.vocab)
        sp.add_argument("--items", type=int, default=GeneratorParams.n_items)
        sp.add_argument("--prefix-len", type=int, default=GeneratorParams.prefix_len)
        sp.add_argument("--max-len", type=int, default=GeneratorParams.max_len)
        sp.add_argument("--smoothing", action="store_true")
        sp.add_argument("--exhaustive", action="store_true")
        common(sp)
        sp.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help exits 0; anything else from argparse is a usage error
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    try:
        args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""``privsearch`` command line: synth | run | report | oracle."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import yaml

from .. import __version__
from .._accel import BACKEND
from ..graph_store import atomic_write_text
from ..synthgen import SynthSpec, write_dataset
from .report import emit_report, read_results_csv
from .sweep import SweepConfig, read_config_file, run_experiment

logger = logging.getLogger("privsearch")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _load(path: str | None) -> dict:
    return read_config_file(path) if path else {}


def cmd_synth(args) -> int:
    data = _load(args.config)
    out = args.out or data.pop("out", None)
    data.pop("out", None)
    if args.seed is not None:
        data["seed"] = args.seed
    for key in ("n", "m", "n_tasks"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if out is None:
        raise ValueError("synth needs an output directory (--out or 'out' in the config)")
    known = {f.name for f in dataclasses.fields(SynthSpec)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown synth config key(s): {', '.join(unknown)}")
    spec = SynthSpec(**data)
    paths = write_dataset(out, spec)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return 0


def sweep_config_from_args(args) -> SweepConfig:
    data = _load(args.config)
    overrides = {
        "lambdas": _floats(args.lam) if args.lam else None,
        "pbs": _floats(args.pb) if args.pb else None,
        "pcs": _floats(args.pc) if args.pc else None,
        "runs": args.runs,
        "seed": args.seed,
        "out": args.out,
        "workers": args.workers,
        "experiments": args.experiment.split(",") if args.experiment else None,
        "tune": True if args.tune else None,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return SweepConfig.from_mapping(data)


def cmd_run(args) -> int:
    config = sweep_config_from_args(args)
    t0 = time.perf_counter()
    rows = run_experiment(config)
    elapsed = time.perf_counter() - t0
    written = emit_report(rows, config.out)
    info = {
        "elapsed_seconds": round(elapsed, 3),
        "backend": BACKEND,
        "workers": config.workers,
        "n_rows": len(rows),
        "version": __version__,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(config).items()},
    }
    atomic_write_text(Path(config.out) / "run_info.json", json.dumps(info, indent=1) + "\n")
    for name, p in written.items():
        print(f"{name}: {p}")
    print(f"sweep finished in {elapsed:.1f} s ({len(rows)} rows, backend={BACKEND})")
    return 0


def cmd_report(args) -> int:
    data = _load(args.config)
    results = args.results or (str(Path(data["out"]) / "results.csv") if "out" in data else None)
    if results is None:
        raise ValueError("report needs --results or an 'out' directory in the config")
    out = args.out or data.get("out") or str(Path(results).parent)
    for name, p in emit_report(read_results_csv(results), out).items():
        print(f"{name}: {p}")
    return 0


def cmd_oracle(args) -> int:
    from ..oracles import run_all

    failed = 0
    for name, ok, detail in run_all(seed=args.seed or 0):
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="privsearch", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat YAML key-value file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    common(s)
    s.add_argument("--n", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--n-tasks", dest="n_tasks", type=int)
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("run", help="execute a sweep and write results, summary and plots")
    common(r)
    r.add_argument("--lambda", dest="lam", help="comma-separated lambda values")
    r.add_argument("--pb", help="comma-separated p_b values")
    r.add_argument("--pc", help="comma-separated p_c values")
    r.add_argument("--runs", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--experiment", help="comma-separated subset of global_mae,global_search,local_search,user_privacy")
    r.add_argument("--tune", action="store_true", help="re-derive facet weights on the full network")
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("report", help="re-render summary and plots from results.csv")
    common(rp)
    rp.add_argument("--results")
    rp.set_defaults(func=cmd_report)

    o = sub.add_parser("oracle", help="run brute-force checks on small instances")
    common(o)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one machine-readable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "command": args.command}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

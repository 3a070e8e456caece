"""Command-line entry points: run experiments, report front-haul, selftest."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import metrics
from .config import CorrelationModel, SimulationConfig, load_config, save_config
from .runner import ALL_SCHEMES, run_experiment

_SWEEPABLE = {
    "k": "num_ues",
    "num_ues": "num_ues",
    "correlation_model": "correlation_model",
}


@dataclass
class ExperimentSpec:
    """One resolved run request: config, schemes, optional sweep, output dir."""

    config: SimulationConfig
    schemes: tuple[str, ...]
    sweep_field: str | None
    sweep_values: tuple
    out_dir: Path

    def validate(self) -> None:
        if not self.schemes:
            raise ValueError("scheme list must be nonempty")
        for scheme in self.schemes:
            if scheme not in ALL_SCHEMES:
                raise ValueError(
                    f"unknown scheme {scheme!r} (valid: {', '.join(ALL_SCHEMES)})"
                )
        if self.sweep_field is not None and not self.sweep_values:
            raise ValueError("sweep needs at least one value")


def _parse_sweep(text: str) -> tuple[str, tuple]:
    if "=" not in text:
        raise ValueError("sweep must look like VAR=v1,v2,...")
    var, _, values = text.partition("=")
    field = _SWEEPABLE.get(var.strip().lower())
    if field is None:
        raise ValueError(
            f"cannot sweep {var!r} (valid: K, correlation_model)"
        )
    raw = [v for v in values.split(",") if v.strip()]
    if field == "num_ues":
        parsed = tuple(int(v) for v in raw)
    else:
        parsed = tuple(CorrelationModel.from_string(v) for v in raw)
    return field, parsed


def _run_single(config: SimulationConfig, schemes, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, out_dir / "config_resolved.ini")

    def progress(done, total):
        print(f"  setup {done}/{total}", flush=True)

    results = run_experiment(config, schemes, progress=progress)
    se_by_scheme = {}
    for scheme, result in results.items():
        metrics.write_se_csv(out_dir / f"se_{scheme}.csv", scheme, result.se)
        series = metrics.empirical_cdf(result.se)
        metrics.write_cdf_csv(out_dir / f"cdf_{scheme}.csv", series)
        se_by_scheme[scheme] = result.se

    l4 = metrics.fronthaul_load(
        "lmmse_l4", config.antennas_per_ap, config.num_aps, config.num_ues,
        config.coherence_block, config.pilot_length,
    )
    stripe = metrics.fronthaul_load(
        "stripe_nlmmse", config.antennas_per_ap, config.num_aps, config.num_ues,
        config.coherence_block, config.pilot_length,
    )
    fronthaul = {
        "l4": l4.real_scalars_to_cpu_per_block,
        "stripe": stripe.real_scalars_to_cpu_per_block,
        "reduction": stripe.reduction_vs_l4,
    }
    payload = metrics.summary_payload(se_by_scheme, fronthaul)
    metrics.write_summary_json(out_dir / "summary.json", payload)
    return payload


def cmd_run(args) -> int:
    config = load_config(args.config) if args.config else SimulationConfig()
    if args.seed is not None:
        config = replace(config, rng_seed=args.seed)
    if args.workers is not None:
        config = replace(config, num_workers=args.workers)
    config.validate()

    schemes = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    sweep_field, sweep_values = (None, ())
    if args.sweep:
        sweep_field, sweep_values = _parse_sweep(args.sweep)
    spec = ExperimentSpec(
        config=config, schemes=schemes, sweep_field=sweep_field,
        sweep_values=sweep_values, out_dir=Path(args.out),
    )
    spec.validate()

    if spec.sweep_field is None:
        print(f"running {', '.join(spec.schemes)} -> {spec.out_dir}", flush=True)
        _run_single(spec.config, spec.schemes, spec.out_dir)
    else:
        manifest = []
        for value in spec.sweep_values:
            cfg = replace(spec.config, **{spec.sweep_field: value})
            label = value.value if isinstance(value, CorrelationModel) else value
            sub = spec.out_dir / f"{spec.sweep_field}_{label}"
            print(f"running {spec.sweep_field}={label} -> {sub}", flush=True)
            _run_single(cfg, spec.schemes, sub)
            manifest.append({"value": str(label), "dir": sub.name})
        spec.out_dir.mkdir(parents=True, exist_ok=True)
        with open(spec.out_dir / "sweep.json", "w", encoding="utf-8") as fh:
            json.dump(
                {"schema_version": 1, "variable": spec.sweep_field, "runs": manifest},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
    print("done", flush=True)
    return 0


def cmd_fronthaul(args) -> int:
    config = load_config(args.config) if args.config else SimulationConfig()
    config.validate()
    reports = [
        metrics.fronthaul_load(
            scheme, config.antennas_per_ap, config.num_aps, config.num_ues,
            config.coherence_block, config.pilot_length,
        )
        for scheme in ("lmmse_l4", "stripe_nlmmse")
    ]
    for rep in reports:
        print(
            f"{rep.scheme}: {rep.real_scalars_to_cpu_per_block} real scalars/block "
            f"to CPU ({rep.real_scalars_per_block_per_segment} per segment)"
        )
    reduction = reports[1].reduction_vs_l4
    print(f"stripe reduces CPU-link load by {100.0 * reduction:.2f}%")
    print(json.dumps(
        {
            "l4": reports[0].real_scalars_to_cpu_per_block,
            "stripe": reports[1].real_scalars_to_cpu_per_block,
            "reduction": reduction,
        },
        sort_keys=True,
    ))
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    failures = 0
    for check in run_selftest(seed=args.seed):
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: {check.detail}")
        failures += 0 if check.passed else 1
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stripesim",
        description="Uplink cell-free massive MIMO simulator on a radio stripe",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    run.add_argument("--config", help="INI config file (defaults used if omitted)")
    run.add_argument(
        "--schemes", default=",".join(ALL_SCHEMES),
        help="comma-separated schemes (default: all)",
    )
    run.add_argument("--sweep", help="sweep spec, e.g. K=5,10,15,20")
    run.add_argument("--seed", type=int, help="override the config RNG seed")
    run.add_argument("--workers", type=int, help="override worker count (0 = all cores)")
    run.add_argument("--out", default="results", help="output directory")
    run.set_defaults(func=cmd_run)

    fh = sub.add_parser("fronthaul", help="print front-haul scalar counts")
    fh.add_argument("--config", help="INI config file (defaults used if omitted)")
    fh.set_defaults(func=cmd_fronthaul)

    st = sub.add_parser("selftest", help="run the fast invariant suite")
    st.add_argument("--seed", type=int, default=0)
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``denseeit <subcommand> [options]``.

Exit codes: 0 success, 1 configuration or usage error, 2 solver failure,
3 acceptance selftest failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bloch import SolverError
from .config import PRESET_NAMES, ConfigError, SystemConfig, derive_rates, load_config, load_preset

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_SELFTEST = 0, 1, 2, 3
FLOAT_FMT = "%.17g"
MANIFEST = "manifest.json"

log = logging.getLogger("denseeit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


class _UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers


def write_csv(target, columns: dict) -> None:
    """Write equal-length numeric or string columns with a header line.

    ``target`` is a path or an open text stream.
    """
    if not hasattr(target, "write"):
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            write_csv(fh, columns)
        return
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    target.write(",".join(names) + "\n")
    for row in zip(*cols):
        target.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v):
    if isinstance(v, (str, np.str_)):
        return str(v)
    return FLOAT_FMT % float(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path: Path, data) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


class Output:
    """An output directory; tracks written files and writes the manifest last."""

    def __init__(self, path, subcommand: str):
        self.dir = Path(path)
        self.dir.mkdir(parents=True, exist_ok=True)
        old = self.dir / MANIFEST
        if old.exists():
            old.unlink()
        self.subcommand = subcommand
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.dir / name

    def finish(self, config: SystemConfig | None, arguments: dict) -> None:
        resolved = config.to_dict() if config is not None else None
        # the output location does not change results
        hashed = {k: v for k, v in arguments.items() if k != "out"}
        payload = json.dumps({"config": resolved, "arguments": hashed},
                             sort_keys=True, default=str)
        write_json(self.dir / MANIFEST, {
            "subcommand": self.subcommand,
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "config": resolved,
            "arguments": arguments,
            "input_hash": hashlib.sha256(payload.encode()).hexdigest(),
            "outputs": sorted(self.files),
        })


# ---------------------------------------------------------------------------
# config selection


def _add_config_args(p, default_preset):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--preset", choices=PRESET_NAMES,
                   help=f"named parameter set (default {default_preset})")
    g.add_argument("--config", type=Path, help="JSON config file (SystemConfig field names)")
    p.set_defaults(default_preset=default_preset)


def _resolve_config(args) -> SystemConfig:
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError([f"config file {args.config} does not exist"])
        return load_config(args.config)
    return load_preset(args.preset or args.default_preset)


def _arguments(args) -> dict:
    skip = {"func", "default_preset"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
            if k not in skip}


# ---------------------------------------------------------------------------
# subcommands


def cmd_susceptibility(args) -> int:
    from .susceptibility import chi, wave_number

    config = _resolve_config(args)
    if args.steps < 2:
        raise _UsageError("--steps must be >= 2")
    if not args.dmax > args.dmin:
        raise _UsageError("--dmax must exceed --dmin")
    rates = derive_rates(config)
    d = np.linspace(args.dmin, args.dmax, args.steps)
    c = chi(d, rates, lfc_shift=config.lfc_on)
    k = wave_number(d, rates, lfc_shift=config.lfc_on)
    cols = {"delta31": d, "re_chi": c.real, "im_chi": c.imag, "re_k": k.real, "im_k": k.imag}
    if args.out is None:
        write_csv(sys.stdout, cols)
        return EXIT_OK
    out = Output(args.out, "susceptibility")
    write_csv(out.path("susceptibility.csv"), cols)
    out.finish(config, _arguments(args))
    return EXIT_OK


def cmd_propagate(args) -> int:
    from .propagation import PulseError, measure_record, propagate

    config = _resolve_config(args)
    store = args.store_every or config.n_z - 1
    out = Output(args.out, "propagate")
    record = propagate(config, store_every=store)
    zz = np.repeat(record.z, record.tau.size)
    tt = np.tile(record.tau, record.z.size)
    field = record.omega31.ravel()
    write_csv(out.path("field.csv"), {"z": zz, "tau": tt, "re_omega31": field.real,
                                      "im_omega31": field.imag})
    try:
        metrics = measure_record(record).summary()
    except PulseError as exc:
        metrics = {"error": str(exc)}
    rates = derive_rates(config)
    metrics.update({"group_delay_closed_form": rates.group_delay, "n_g": rates.n_g,
                    "beta1": rates.beta1, "beta2": rates.beta2, "coupling": rates.coupling})
    write_json(out.path("metrics.json"), metrics)
    out.finish(config, _arguments(args))
    return EXIT_OK


def cmd_analyze(args) -> int:
    from . import analytic as an
    from .propagation import measure_pulse, measure_record, propagate

    config = _resolve_config(args)
    rates = derive_rates(config)
    pulse = an.AnalyticPulse.from_config(config, rates)
    out = Output(args.out, "analyze")
    tau = config.tau_grid()
    env = an.analytic_envelope(1.0, tau, pulse)
    ma = measure_pulse(tau, env, config.probe_width, config.probe_amp)
    write_csv(out.path("analytic_envelope.csv"),
              {"tau": tau, "re_env": env.real, "im_env": env.imag,
               "phase": ma.phase, "inst_freq": ma.inst_freq})
    metrics = {"analytic": ma.summary(),
               "closed_form": {"peak_phase": pulse.beta2 * pulse.k0z / pulse.sigma ** 2,
                               "chirp_slope": an.alpha_lfc(pulse.beta2, pulse.k0z, pulse.sigma),
                               "width_sq": float(pulse.width_squared().real),
                               "group_delay": pulse.group_delay}}
    if not args.analytic_only:
        record = propagate(config)
        mn = measure_record(record)
        num = record.output()
        write_csv(out.path("numeric_envelope.csv"),
                  {"tau": tau, "re_env": num.real, "im_env": num.imag,
                   "phase": mn.phase, "inst_freq": mn.inst_freq})
        metrics["numeric"] = mn.summary()
        metrics["numeric_vs_analytic_rel_Linf"] = float(np.abs(num - env).max()
                                                        / np.abs(env).max())
    p0, plfc = an.polarization_components(1.0, tau, pulse)
    write_csv(out.path("polarization.csv"),
              {"tau": tau, "p0_phase": an.relative_phase(p0, env),
               "plfc_phase": an.relative_phase(plfc, env)})
    shift = tau - pulse.group_delay
    phase_nsm, inst_nsm = an.nsm_comparison(shift, pulse.sigma, pulse.beta2, pulse.k0z)
    phase_lfc = an.phi_lfc(tau, pulse)
    write_csv(out.path("nsm.csv"),
              {"t": shift, "phi_nsm": phase_nsm, "inst_freq_nsm": inst_nsm,
               "phi_lfc": phase_lfc, "inst_freq_lfc": -np.gradient(phase_lfc, tau)})
    write_json(out.path("metrics.json"), metrics)
    out.finish(config, _arguments(args))
    return EXIT_OK


def cmd_scan(args) -> int:
    from .scan import default_workers, run_scan

    config = _resolve_config(args)
    workers = args.workers if args.workers is not None else default_workers()
    out = Output(args.out, "scan")

    def progress(done, total):
        if args.verbose:
            print(f"cell {done}/{total}", file=sys.stderr)

    tmap = run_scan(config, (args.gs_min, args.gs_max), (args.trap_min, args.trap_max),
                    (args.gs_steps, args.trap_steps), workers=workers, progress=progress)
    gg, tt = np.meshgrid(tmap.gs, tmap.trap, indexing="ij")
    write_csv(out.path("map.csv"), {"gs": gg.ravel(), "trap_ratio": tt.ravel(),
                                    "peak_ratio": tmap.ratio.ravel(),
                                    "flag": tmap.flags.ravel().astype(str)})
    write_json(out.path("contours.json"),
               {f"{lv:.2f}": [line.tolist() for line in lines]
                for lv, lines in tmap.contours.items()})
    out.finish(config, _arguments(args))
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.action == "list":
        for name in PRESET_NAMES:
            print(name)
    else:
        if args.name not in PRESET_NAMES:
            raise ConfigError([f"unknown preset {args.name!r}"])
        print(json.dumps(load_preset(args.name).to_dict(), indent=2))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .acceptance import CRITERIA, run_all

    numbers = None
    if args.criteria:
        try:
            numbers = sorted({int(x) for x in args.criteria.split(",")})
        except ValueError:
            raise _UsageError("--criteria takes a comma-separated list of integers") from None
        unknown = [n for n in numbers if n not in CRITERIA]
        if unknown:
            raise _UsageError(f"unknown criteria {unknown}")
    results = run_all(numbers, workers=args.workers)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {failed}" if failed else ""))
    if args.out is not None:
        out = Output(args.out, "selftest")
        write_json(out.path("selftest.json"),
                   [{"number": r.number, "name": r.name, "passed": r.passed,
                     "measured": r.measured, "expected": r.expected,
                     "seconds": r.seconds, "detail": r.detail} for r in results])
        out.finish(None, _arguments(args))
    return EXIT_SELFTEST if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="denseeit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"denseeit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("susceptibility", help="susceptibility and wave number versus detuning")
    _add_config_args(p, "fig2a")
    p.add_argument("--dmin", type=float, default=-4.0, help="lowest probe detuning")
    p.add_argument("--dmax", type=float, default=4.0, help="highest probe detuning")
    p.add_argument("--steps", type=int, default=801, help="number of detuning samples")
    p.add_argument("--out", type=Path, help="output directory (CSV to stdout if omitted)")
    p.set_defaults(func=cmd_susceptibility)

    p = sub.add_parser("propagate", help="propagate the probe pulse through the medium")
    _add_config_args(p, "fig3-baseline")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--store-every", type=int, default=None,
                   help="z stride of stored slices (default: input and output only)")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("analyze", help="closed-form pulse, phase, polarization and Kerr comparison")
    _add_config_args(p, "fig4")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--analytic-only", action="store_true", help="skip the numeric propagation")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scan", help="transmission map over gamma_s and trap ratio")
    _add_config_args(p, "fig3-baseline")
    p.add_argument("--gs-min", type=float, default=1e-6)
    p.add_argument("--gs-max", type=float, default=1e-1)
    p.add_argument("--gs-steps", type=int, default=24)
    p.add_argument("--trap-min", type=float, default=0.5)
    p.add_argument("--trap-max", type=float, default=0.999)
    p.add_argument("--trap-steps", type=int, default=24)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: SIM_WORKERS or 1)")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("presets", help="list or show the shipped parameter sets")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?", help="preset to show")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("selftest", help="run the acceptance criteria and report")
    p.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,7")
    p.add_argument("--workers", type=int, default=None, help="worker processes for the scan")
    p.add_argument("--out", type=Path, help="optional directory for selftest.json")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "presets" and args.action == "show" and not args.name:
        parser.error("presets show needs a preset name")
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"denseeit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

Subcommands:
  protocol     single heralded run at one meter phase or nominal gain
  gain-sweep   heralded output size versus input size at fixed gains
  gain-vs-phi  heralded output size versus meter phase
  visibility   fringe scans of the heralded state against analysis phase

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(unbounded gain at phi = 0, vanished herald, count overflow).

Environment: NLA_WEAKSIM_OUTDIR prefixes relative --output paths;
NLA_WEAKSIM_MAX_BASIS caps the truncated basis size.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io as _io
from . import protocol
from .experiment import (
    CountingModel,
    HeraldingModel,
    MeasurementConvention,
    SweepResult,
    classical_visibility_bound,
    gain_sweep,
    gain_vs_phi,
    measure_input_size,
    true_input_size,
    visibility_experiment,
    with_sampled_output,
)
from .fock import BasisSizeError, TruncationError
from .protocol import InfiniteGainError, MeterSetting, SignalSpec

OUTDIR_ENV = "NLA_WEAKSIM_OUTDIR"

DEFAULT_SWEEP_GAINS = "2.1213203435596424,3,6"
DEFAULT_SWEEP_INPUTS = "1e-5:1e-3:log13"
DEFAULT_PHI_INPUTS = "0.0006,0.0012"
DEFAULT_PHI_GRID = "0.1:3.1:lin31"
DEFAULT_VIS_GAINS = "2,3,4,5"

_SIGNAL_KINDS = {
    "coherent": "coherent",
    "qubit": "qubit_truncated",
    "qubit_truncated": "qubit_truncated",
    "phase-averaged": "phase_averaged",
    "phase_averaged": "phase_averaged",
}


class ConfigError(Exception):
    """Bad option values or combinations; maps to exit code 2."""


class NumericalFailure(Exception):
    """Run-level numerical breakdown; maps to exit code 3."""


def parse_grid(spec: str) -> list[float]:
    """Grid syntax: 'lo:hi:logN', 'lo:hi:linN', or a comma list of values."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {spec!r} needs lo:hi:kindN")
        lo_s, hi_s, tail = parts
        kind, num_s = tail[:3], tail[3:]
        if kind not in ("log", "lin") or not num_s.isdigit():
            raise ConfigError(f"grid {spec!r} needs log<N> or lin<N> after the bounds")
        try:
            lo, hi = float(lo_s), float(hi_s)
        except ValueError as exc:
            raise ConfigError(f"grid {spec!r} has non-numeric bounds") from exc
        n = int(num_s)
        if n < 2:
            raise ConfigError(f"grid {spec!r} needs at least 2 points")
        if not hi > lo:
            raise ConfigError(f"grid {spec!r} needs hi > lo")
        if kind == "log":
            if lo <= 0:
                raise ConfigError(f"log grid {spec!r} needs positive bounds")
            step = (math.log(hi) - math.log(lo)) / (n - 1)
            return [math.exp(math.log(lo) + step * i) for i in range(n)]
        step = (hi - lo) / (n - 1)
        return [lo + step * i for i in range(n)]
    try:
        values = [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"could not parse value list {spec!r}") from exc
    if not values:
        raise ConfigError(f"empty value list {spec!r}")
    return values


def _resolve_output(path: Optional[str]) -> Optional[Path]:
    if path is None:
        return None
    p = Path(path)
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir and not p.is_absolute():
        p = Path(outdir) / p
    if p.parent != Path("."):
        try:
            p.parent.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {p.parent}: {exc}") from exc
    return p


def _emit(text: str, path: Optional[Path]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot write output {path}: {exc}") from exc


def _counting(ns: argparse.Namespace) -> Optional[CountingModel]:
    if ns.shots <= 0:
        return None
    if ns.seed is None:
        raise ConfigError("--seed is required when --shots > 0")
    return CountingModel(shots=ns.shots, seed=ns.seed, rate_scale=ns.rate_scale)


def _herald(ns: argparse.Namespace) -> Optional[HeraldingModel]:
    if ns.epsilon <= 0.0:
        return None
    return HeraldingModel(epsilon=ns.epsilon)


def _convention(name: str) -> MeasurementConvention:
    if name == "through":
        return MeasurementConvention.THROUGH_GATE
    if name == "true":
        return MeasurementConvention.TRUE_INPUT
    raise ConfigError(f"unknown convention {name!r}")


CONFIG_EXCLUDE = {"config", "output", "fn"}


def _effective_config(ns: argparse.Namespace) -> dict:
    return {
        k: v for k, v in sorted(vars(ns).items()) if k not in CONFIG_EXCLUDE
    }


def _load_config(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if isinstance(doc, dict) and isinstance(doc.get("config"), dict):
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return doc


def _render_table(result: SweepResult, ns: argparse.Namespace,
                  svg_spec: Optional[dict]) -> str:
    fmt = ns.format
    if fmt == "csv":
        return _io.csv_text(result)
    if fmt == "json":
        return _io.json_text(result, config=_effective_config(ns))
    if fmt == "svg":
        if svg_spec is None:
            raise ConfigError("no plot defined for this command; use csv or json")
        return _io.svg_text(result, **svg_spec)
    raise ConfigError(f"unknown format {fmt!r}")


def _phi_from(ns: argparse.Namespace) -> float:
    if ns.phi is not None:
        return math.radians(ns.phi) if ns.degrees else ns.phi
    return protocol.phi_for_gain(ns.gain)


def cmd_protocol(ns: argparse.Namespace) -> int:
    kind = _SIGNAL_KINDS.get(ns.signal)
    if kind is None:
        raise ConfigError(f"unknown signal kind {ns.signal!r}")
    if ns.alpha2 < 0:
        raise ConfigError(f"--alpha2 {ns.alpha2} is negative")
    phi = _phi_from(ns)
    spec = SignalSpec(kind, math.sqrt(ns.alpha2), loss=ns.loss)
    pred = protocol.analytic(phi, spec.alpha)
    out = protocol.run_nla(spec, MeterSetting(phi), ns.gate, photon_cap=ns.cap)
    if out.conditional_state is None:
        raise NumericalFailure(
            f"herald probability {out.herald_probability:.3e} vanished"
        )
    size_out = None
    try:
        from .experiment import state_size

        size_out = state_size(out.conditional_state, protocol.DEFAULT_LAYOUT.signal_v)
    except ZeroDivisionError:
        raise NumericalFailure("conditional state has no vacuum component")
    size_true = true_input_size(spec, photon_cap=ns.cap)
    size_meas = measure_input_size(spec, ns.gate, photon_cap=ns.cap)
    closed = pred.p_success if ns.gate == "ppbs" else \
        protocol.ideal_herald_probability(phi, spec.alpha)
    gain_est = size_out / size_meas if size_meas > 0 else math.nan
    amp = out.amplitude_gain
    row = [
        phi, pred.g2, ns.gate, kind, ns.alpha2, ns.loss,
        out.herald_probability, closed,
        size_true, size_meas, size_out, gain_est,
        out.p1_out,
        amp.real if amp is not None else math.nan,
        amp.imag if amp is not None else math.nan,
        out.truncation_weight,
    ]
    result = SweepResult(
        kind="protocol",
        columns=[
            "phi", "g2", "gate", "signal", "alpha2", "loss",
            "herald_probability", "herald_closed_form",
            "size_in_true", "size_in_measured", "size_out", "gain_measured",
            "p1_out", "amplitude_gain_re", "amplitude_gain_im",
            "truncation_weight",
        ],
        rows=[row],
        meta={"norm_in": pred.norm_in, "norm_out": pred.norm_out},
    )
    _emit(_render_table(result, ns, None), _resolve_output(ns.output))
    return 0


def cmd_gain_sweep(ns: argparse.Namespace) -> int:
    gains = parse_grid(ns.gains)
    inputs = parse_grid(ns.inputs)
    if any(g < 0 for g in gains):
        raise ConfigError("nominal gains must be nonnegative")
    if any(s <= 0 for s in inputs):
        raise ConfigError("input sizes must be positive")
    herald = _herald(ns)
    counting = _counting(ns)
    convention = _convention(ns.convention)
    merged: Optional[SweepResult] = None
    for k, g2 in enumerate(gains):
        res = gain_sweep(
            g2, inputs, ns.gate, herald=herald, counting=counting,
            photon_cap=ns.cap, convention=convention,
            stream_offset=k * len(inputs),
        )
        if merged is None:
            merged = res
            merged.meta["nominal_g2"] = list(gains)
            merged.meta.pop("phi", None)
        else:
            merged.rows.extend(res.rows)
    assert merged is not None
    svg = {
        "x_column": "input_measured",
        "y_columns": ["output_ideal", "output_model"],
        "logx": True,
        "logy": True,
        "title": "heralded output size vs measured input size",
    }
    if counting is not None:
        merged = with_sampled_output(merged)
        svg["sampled_column"] = "output_sampled"
    _emit(_render_table(merged, ns, svg), _resolve_output(ns.output))
    return 3 if any(row[-1] == "zero_herald" for row in merged.rows) else 0


def cmd_gain_vs_phi(ns: argparse.Namespace) -> int:
    inputs = parse_grid(ns.inputs)
    phis = parse_grid(ns.phis)
    if ns.degrees:
        phis = [math.radians(p) for p in phis]
    if any(s <= 0 for s in inputs):
        raise ConfigError("input sizes must be positive")
    res = gain_vs_phi(
        inputs, phis, ns.gate, herald=_herald(ns), counting=_counting(ns),
        photon_cap=ns.cap, convention=_convention(ns.convention),
    )
    # one column pair per input size so the plot shows separate curves
    ci = {c: i for i, c in enumerate(res.columns)}
    wide_cols = ["phi"]
    for s in inputs:
        wide_cols += [f"ideal_{s:g}", f"model_{s:g}"]
    wide_rows = []
    for j, phi in enumerate(phis):
        row: list[object] = [phi]
        for i in range(len(inputs)):
            src = res.rows[i * len(phis) + j]
            row += [src[ci["output_ideal"]], src[ci["output_model"]]]
        wide_rows.append(row)
    wide = SweepResult("gain_vs_phi_wide", wide_cols, wide_rows, res.meta)
    svg = {
        "x_column": "phi",
        "y_columns": wide_cols[1:],
        "logy": True,
        "title": "heralded output size vs meter phase",
    }
    if ns.format == "svg":
        _emit(_io.svg_text(wide, **svg), _resolve_output(ns.output))
    else:
        _emit(_render_table(res, ns, None), _resolve_output(ns.output))
    return 3 if any(row[-1] == "zero_herald" for row in res.rows) else 0


def cmd_visibility(ns: argparse.Namespace) -> int:
    gains = parse_grid(ns.gains)
    if any(g < 1.0 for g in gains):
        raise ConfigError("visibility bound needs nominal gains >= 1")
    if ns.alpha <= 0:
        raise ConfigError(f"--alpha {ns.alpha} must be positive")
    if ns.points < 4:
        raise ConfigError("--points must be at least 4 to fit a fringe")
    counting = _counting(ns)
    rows = []
    scans = []
    for k, g2 in enumerate(gains):
        scan = visibility_experiment(
            g2, input_mag=ns.alpha, phase_points=ns.points, gate=ns.gate,
            bias_ratio=ns.bias, counting=counting, photon_cap=ns.cap,
            stream=k,
        )
        rows.append([
            g2, scan.bias_ratio, scan.fit.visibility, scan.fit.uncertainty,
            scan.classical_bound, scan.fit.amplitude, scan.fit.offset,
            scan.fit.phase,
        ])
        scans.append({
            "nominal_g2": g2,
            "phase_points": scan.phase_points,
            "rates": scan.rates,
            "counts": scan.counts,
        })
    result = SweepResult(
        kind="visibility",
        columns=[
            "nominal_g2", "bias_ratio", "visibility", "uncertainty",
            "classical_bound", "fit_amplitude", "fit_offset", "fit_phase",
        ],
        rows=rows,
        meta={
            "gate": ns.gate,
            "alpha": ns.alpha,
            "points": ns.points,
            "shots": ns.shots,
            "seed": ns.seed,
            "scans": scans,
        },
    )
    svg = {
        "x_column": "nominal_g2",
        "y_columns": ["visibility", "classical_bound"],
        "title": "fringe visibility vs nominal gain",
    }
    _emit(_render_table(result, ns, svg), _resolve_output(ns.output))
    return 0


def _add_common(p: argparse.ArgumentParser, *, gate_default: str) -> None:
    p.add_argument("--gate", choices=("ppbs", "ideal"), default=gate_default,
                   help="gate realization (default %(default)s)")
    p.add_argument("--cap", type=int, default=protocol.DEFAULT_PHOTON_CAP,
                   help="total photon cap of the truncated space "
                        "(default %(default)s)")
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv",
                   help="output format (default %(default)s)")
    p.add_argument("--output", help="output file (default stdout); relative "
                                    f"paths honor ${OUTDIR_ENV}")
    p.add_argument("--config", help="JSON file with option defaults; a result "
                                    "envelope's 'config' block also works")


def _add_counting(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.35,
                   help="herald saturation scale; 0 disables the model "
                        "(default %(default)s)")
    p.add_argument("--shots", type=int, default=0,
                   help="trials for Poissonian counting; 0 disables sampling")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed, required when --shots > 0")
    p.add_argument("--rate-scale", dest="rate_scale", type=float, default=1.0,
                   help="rate multiplier applied before drawing counts")
    p.add_argument("--convention", choices=("through", "true"),
                   default="through",
                   help="input-size reference: measured through the gate or "
                        "the true prepared size (default %(default)s)")


def build_parser() -> tuple[argparse.ArgumentParser, argparse._SubParsersAction]:
    parser = argparse.ArgumentParser(
        prog="nla-weaksim",
        description="heralded weak-measurement amplification of small "
                    "coherent states: single runs, gain sweeps and fringe "
                    "visibility scans",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("protocol", help="single heralded run")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--phi", type=float, help="meter phase")
    grp.add_argument("--gain", type=float,
                     help="nominal intensity gain; sets phi = 2 atan(1/sqrt g)")
    p.add_argument("--alpha2", type=float, default=1e-4,
                   help="input size |alpha|^2 (default %(default)s)")
    p.add_argument("--signal", default="coherent",
                   choices=sorted(_SIGNAL_KINDS),
                   help="input state kind (default %(default)s)")
    p.add_argument("--loss", type=float, default=0.0,
                   help="pre-gate loss on the signal (default %(default)s)")
    p.add_argument("--degrees", action="store_true",
                   help="interpret --phi in degrees")
    _add_common(p, gate_default="ppbs")
    p.set_defaults(fn=cmd_protocol, format="json")

    p = sub.add_parser("gain-sweep", help="output size vs input size")
    p.add_argument("--gains", default=DEFAULT_SWEEP_GAINS,
                   help="nominal intensity gains, grid or comma list "
                        "(default %(default)s)")
    p.add_argument("--inputs", default=DEFAULT_SWEEP_INPUTS,
                   help="input sizes |alpha|^2 (default %(default)s)")
    _add_counting(p)
    _add_common(p, gate_default="ppbs")
    p.set_defaults(fn=cmd_gain_sweep)

    p = sub.add_parser("gain-vs-phi", help="output size vs meter phase")
    p.add_argument("--inputs", default=DEFAULT_PHI_INPUTS,
                   help="input sizes |alpha|^2 (default %(default)s)")
    p.add_argument("--phis", default=DEFAULT_PHI_GRID,
                   help="meter phase grid (default %(default)s)")
    p.add_argument("--degrees", action="store_true",
                   help="interpret --phis in degrees")
    _add_counting(p)
    _add_common(p, gate_default="ppbs")
    p.set_defaults(fn=cmd_gain_vs_phi)

    p = sub.add_parser("visibility", help="fringe visibility scans")
    p.add_argument("--gains", default=DEFAULT_VIS_GAINS,
                   help="nominal intensity gains (default %(default)s)")
    p.add_argument("--alpha", type=float, default=0.0015,
                   help="input amplitude magnitude (default %(default)s)")
    p.add_argument("--points", type=int, default=16,
                   help="analysis phases per scan (default %(default)s)")
    p.add_argument("--bias", type=float, default=None,
                   help="H:V input intensity ratio (default: the nominal "
                        "gain, which pre-compensates the amplification)")
    p.add_argument("--shots", type=int, default=0,
                   help="trials for Poissonian counting; 0 disables sampling")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed, required when --shots > 0")
    p.add_argument("--rate-scale", dest="rate_scale", type=float, default=1.0,
                   help="rate multiplier applied before drawing counts")
    _add_common(p, gate_default="ideal")
    p.set_defaults(fn=cmd_visibility)

    return parser, sub


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre_ns, _ = pre.parse_known_args(args)
    try:
        if pre_ns.config:
            cfg = _load_config(pre_ns.config)
            cmd = cfg.get("command")
            for name, sp in sub.choices.items():
                if cmd is not None and name != cmd:
                    continue
                valid = {a.dest for a in sp._actions}
                sp.set_defaults(**{
                    k: v for k, v in cfg.items()
                    if k in valid and k not in ("config", "output", "fn")
                })
        try:
            ns = parser.parse_args(args)
        except SystemExit as exc:
            return int(exc.code or 0)
        if pre_ns.config:
            cmd = _load_config(pre_ns.config).get("command")
            if cmd is not None and cmd != ns.command:
                raise ConfigError(
                    f"config is for command {cmd!r}, not {ns.command!r}"
                )
        if ns.cap < 1:
            raise ConfigError(f"--cap {ns.cap} must be at least 1")
        return ns.fn(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TruncationError, BasisSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InfiniteGainError, NumericalFailure, ZeroDivisionError,
            OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

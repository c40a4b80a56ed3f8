"""Command-line front end: one subcommand per experiment, each writing a CSV.

Usage::

    sublevel-sense precess --f 3 --initial-m 3 --phases 0:6.2832:0.001 --output precess.csv
    sublevel-sense edm-scan --config edm.cfg --bias 10:200:auto
    sublevel-sense --list

Options can also come from a ``key = value`` file given with ``--config``;
keys are the long flag names (``initial-m`` or ``initial_m``) and flags given
on the command line win.  Exit status is 0 on success, 2 for configuration
errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import combiner, edm, observables, precession, transverse
from .numerics import ConvergenceError
from .spin import SpinF, basis_state, format_m

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    step: float | None  # None means the module's automatic density rule

    def values(self) -> np.ndarray:
        if self.step is None:
            raise ConfigError("this grid does not accept an 'auto' step")
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)

    def __str__(self) -> str:
        return f"{self.start!r}:{self.stop!r}:{'auto' if self.step is None else repr(self.step)}"


def parse_grid(text: str, allow_auto: bool = False) -> Grid:
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must look like start:stop:step, got {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        step = None if parts[2].strip() == "auto" else float(parts[2])
    except ValueError:
        raise ConfigError(f"grid entries must be numbers, got {text!r}") from None
    if step is None and not allow_auto:
        raise ConfigError(f"'auto' step is only available for the bias grid, got {text!r}")
    if not all(math.isfinite(x) for x in (start, stop) + (() if step is None else (step,))):
        raise ConfigError(f"grid entries must be finite, got {text!r}")
    if step is not None and step <= 0:
        raise ConfigError(f"grid step must be positive, got {text!r}")
    if stop < start:
        raise ConfigError(f"grid stop is below start in {text!r}")
    return Grid(start, stop, step)


def _spin(text: str) -> SpinF:
    try:
        return SpinF.of(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"F must be a positive integer or half-integer, got {text!r}") from None


def _sublevel(text: str) -> str:
    try:
        Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"sublevel must be a number like 3, -1/2 or 0.5, got {text!r}") from None
    return text.strip()


def _number(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise ConfigError(f"expected a positive integer, got {text!r}")
    return value


def _azimuth(text: str) -> str:
    if text not in ("x", "y"):
        raise ConfigError(f"azimuth must be 'x' or 'y', got {text!r}")
    return text


def _order(text: str) -> tuple[str, ...]:
    return tuple(_sublevel(t) for t in text.split(",") if t.strip())


@dataclass(frozen=True)
class Option:
    key: str
    parse: Callable[[str], Any]
    default: str | None
    help: str


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    columns: str
    options: tuple[Option, ...]
    run: Callable[[dict], tuple[list[str], list[list[float]], list[str]]]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    values: dict = field(default_factory=dict)
    output: str = "-"
    precision: int = 12

    def echo(self) -> list[str]:
        return [f"{k} = {_echo_value(v)}" for k, v in sorted(self.values.items())] + [f"precision = {self.precision}"]


def _echo_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(v)
    return str(v)


F_OPT = Option("f", _spin, "3", "total angular momentum F (integer or half-integer, e.g. 7/2)")
M_OPT = Option("initial-m", _sublevel, "0", "initial x-basis sublevel m")
PHASES = Option("phases", parse_grid, "0:3.14159265358979:0.01", "phase grid start:stop:step (rad)")
E1 = Option("stark-e1", _number, "5", "tensor Stark shift of |m|=1 (Hz)")
TRANS = Option("transverse", _number, "10", "transverse Zeeman frequency (Hz)")
AZ = Option("azimuth", _azimuth, "x", "direction of the transverse field (x or y)")
TAU = Option("tau", _number, "3", "precession time (s)")
BIAS = Option("bias", lambda t: parse_grid(t, allow_auto=True), "10:200:auto", "bias grid start:stop:step|auto (Hz)")
THREADS = Option("threads", _positive_int, None, "sweep threads (default: $SUBLEVEL_SENSE_THREADS or CPU count)")


def _m_columns(prefix: str, f: SpinF) -> list[str]:
    return [f"{prefix}_{format_m(tm)}" for tm in f.twice_ms]


def _start(v) -> Any:
    try:
        return basis_state(v["f"], v["initial-m"], "x")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def run_precess(v):
    f, start, phases = v["f"], _start(v), v["phases"].values()
    probs = precession.probabilities_on_grid(f, start, phases)
    inv = precession.single_level_inverse_on_grid(f, start, phases)
    inv_fx = precession.fx_inverse_on_grid(f, start, phases)
    header = ["phase"] + _m_columns("p", f) + _m_columns("inv_dphi", f) + ["inv_dphi_Fx"]
    rows = np.column_stack([phases, probs.p, inv, inv_fx])
    return header, rows, [f"max single-level 1/dphi {inv.max():.6g}, Larmor {inv_fx.max():.6g}"]


def run_sequential(v):
    f, start, phases = v["f"], _start(v), v["phases"].values()
    order = v.get("order") or None
    try:
        seq = combiner.sequential_on_grid(f, start, phases, order)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    labels = [format_m(f.twice_ms[k]) for k in seq.order]
    inv_fx = precession.fx_inverse_on_grid(f, start, phases)
    header = ["phase"] + [f"inv_dphi_step_{m}" for m in labels] + ["inv_dphi_combined", "inv_dphi_Fx"]
    rows = np.column_stack([phases, seq.inverse, seq.inverse_combined, inv_fx])
    comb = seq.inverse_combined
    return header, rows, [f"combined 1/dphi in [{comb.min():.6g}, {comb.max():.6g}]"]


def run_parity(v):
    f, start, phases = v["f"], _start(v), v["phases"].values()
    val, slope = observables.even_parity_on_grid(f, start, phases)
    inv = precession.inverse_uncertainty(val, 1.0 - val, slope)
    header = ["phase", "p_even", "dp_even_dphi", "inv_dphi_even"]
    return header, np.column_stack([phases, val, slope, inv]), [f"best even-parity 1/dphi {inv.max():.6g}"]


def run_harmonic(v):
    f, phases = v["f"], v["phases"].values()
    try:
        w = observables.harmonic_weights(f)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    val, slope = observables.harmonic_on_grid(f, w, phases)
    header = ["phase", "signal", "dsignal_dphi"]
    weights = " ".join(f"alpha_{m}={a:.12g}" for m, a in enumerate(w.alpha))
    return header, np.column_stack([phases, val, slope]), [f"weights by |m|: {weights}"]


def run_scaling(v):
    rows_out = combiner.scaling_table(v["f-max"])
    header = ["F", "dphi_larmor", "dphi_combined", "dphi_optimal", "inv_dphi_combined", "inv_dphi_law"]
    rows = []
    for r in rows_out:
        big_f = r.f.value
        law = math.sqrt(2 * big_f * (big_f + 1)) if r.f.is_integer else math.sqrt(2 * big_f * (big_f + 1 - 1 / (4 * big_f)))
        rows.append([big_f, r.larmor, r.combined, r.optimal, 1 / r.combined, law])
    return header, rows, [f"{len(rows)} rows up to F = {v['f-max']}"]


def run_transverse(v):
    f, start, phases = v["f"], _start(v), v["phases"].values()
    gamma = math.asin(v["sin-gamma"])
    try:
        setup = transverse.TiltedFieldSetup(f, start, gamma, v["azimuth"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    tilted = transverse.tilted_on_grid(setup, phases)
    beta = transverse.beta_from_phi(phases, gamma) if v["azimuth"] == "x" else np.mod(phases, 2 * math.pi)
    if v["azimuth"] == "y":
        beta = np.where(beta > math.pi, 2 * math.pi - beta, beta)
    remap = transverse.remapped_populations(f, v["initial-m"], beta)
    header = ["phase", "beta"] + _m_columns("p", f) + _m_columns("p_remap", f)
    dev = float(np.abs(tilted - remap).max())
    return header, np.column_stack([phases, beta, tilted, remap]), [f"max |tilted - remapped| {dev:.3g}"]


def run_edm_eigen(v):
    grid = v["transverse-grid"].values()
    vals = edm.eigen_spectrum_scan(v["f"], v["stark-e1"], grid)
    header = ["transverse"] + [f"energy_{k}" for k in range(v["f"].dim)]
    return header, np.column_stack([grid, vals]), [f"{grid.size} transverse values"]


def _edm_cfg(v) -> edm.EdmConfig:
    try:
        return edm.EdmConfig(v["f"], v["stark-e1"], v["transverse"], v["azimuth"], 0.0, v["tau"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _bias_values(cfg: edm.EdmConfig, grid: Grid) -> np.ndarray:
    if grid.step is None:
        return edm.auto_bias_grid(cfg, grid.start, grid.stop)
    return grid.values()


def run_edm_scan(v):
    cfg = _edm_cfg(v)
    curve = edm.fringe_scan(cfg, _bias_values(cfg, v["bias"]), threads=v.get("threads"))
    header = ["bias_midpoint", "pv_difference"]
    return header, curve.pv_differences, [f"{len(curve.extrema)} extrema over {curve.scan_values.size} bias points"]


def run_edm_threshold(v):
    cfg = _edm_cfg(v)
    res = edm.robustness_threshold(
        cfg,
        _bias_values(cfg, v["bias"]),
        tolerance=v["tolerance"],
        settle_window=v["settle-window"],
        threads=v.get("threads"),
    )
    header = ["threshold", "transverse", "ratio", "tolerance", "settle_window"] + [
        f"centre_{k}" for k in range(res.centres.size)
    ]
    ratio = res.threshold / cfg.transverse if cfg.transverse else 0.0
    row = [res.threshold, cfg.transverse, ratio, res.tolerance, res.settle_window, *res.centres]
    return header, [row], [f"robust above {res.threshold:.6g} Hz"]


EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in (
        Experiment(
            "precess",
            "sublevel populations and single-level sensitivities vs phase",
            "phase, p_<m>..., inv_dphi_<m>..., inv_dphi_Fx",
            (F_OPT, M_OPT, PHASES),
            run_precess,
        ),
        Experiment(
            "sequential",
            "per-step and combined sensitivity of measuring every sublevel",
            "phase, inv_dphi_step_<m>... (in measurement order), inv_dphi_combined, inv_dphi_Fx",
            (F_OPT, M_OPT, PHASES, Option("order", _order, "", "comma-separated measurement order (default +F..-F)")),
            run_sequential,
        ),
        Experiment(
            "parity",
            "even-sublevel probability fringe from |F,m>_x",
            "phase, p_even, dp_even_dphi, inv_dphi_even",
            (F_OPT, M_OPT, PHASES),
            run_parity,
        ),
        Experiment(
            "harmonic",
            "weighted population sum keeping only the 2F-th harmonic",
            "phase, signal, dsignal_dphi",
            (F_OPT, PHASES),
            run_harmonic,
        ),
        Experiment(
            "scaling",
            "Larmor, combined and optimal uncertainty vs F",
            "F, dphi_larmor, dphi_combined, dphi_optimal, inv_dphi_combined, inv_dphi_law",
            (Option("f-max", _spin, "6", "largest F in the table"),),
            run_scaling,
        ),
        Experiment(
            "transverse",
            "precession about a tilted field and its beta remapping",
            "phase, beta, p_<m>..., p_remap_<m>...",
            (
                F_OPT,
                M_OPT,
                PHASES,
                Option("sin-gamma", _number, "0.1", "sine of the field tilt from z"),
                AZ,
            ),
            run_transverse,
        ),
        Experiment(
            "edm-eigen",
            "eigenenergies in units of the Stark shift vs transverse field",
            "transverse, energy_0..energy_2F (ascending)",
            (F_OPT, E1, Option("transverse-grid", parse_grid, "0:50:0.5", "transverse grid (Hz)")),
            run_edm_eigen,
        ),
        Experiment(
            "edm-scan",
            "adjacent peak-valley differences of the even-parity fringe vs bias",
            "bias_midpoint, pv_difference",
            (F_OPT, E1, TRANS, AZ, TAU, BIAS, THREADS),
            run_edm_scan,
        ),
        Experiment(
            "edm-threshold",
            "bias above which the peak-valley differences stay settled",
            "threshold, transverse, ratio, tolerance, settle_window, centre_<k>...",
            (
                F_OPT,
                E1,
                TRANS,
                AZ,
                TAU,
                Option("bias", BIAS.parse, "10:400:auto", BIAS.help),
                Option("tolerance", _number, "0.1", "allowed relative distance from a cluster centre"),
                Option("settle-window", _number, "10", "settled span required at the end of the scan (Hz)"),
                THREADS,
            ),
            run_edm_threshold,
        ),
    )
}


def read_config_file(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc.strerror}") from None
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def resolve(name: str, file_values: dict[str, str], flag_values: dict[str, str]) -> ExperimentConfig:
    """Merge defaults, file and flags (in that order of precedence) and parse every value."""
    exp = EXPERIMENTS[name]
    known = {o.key for o in exp.options} | {"output", "precision", "experiment"}
    unknown = sorted(set(file_values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) for {name}: {', '.join(unknown)}")
    if file_values.get("experiment", name) != name:
        raise ConfigError(f"config file is for {file_values['experiment']!r}, not {name!r}")
    merged = {**file_values, **flag_values}
    values = {}
    for opt in exp.options:
        raw = merged.get(opt.key, opt.default)
        if raw is None:
            continue
        values[opt.key] = opt.parse(raw)
    precision = int(_positive_int(merged.get("precision", "12")))
    if precision > 17:
        raise ConfigError(f"precision above 17 digits is meaningless for doubles, got {precision}")
    return ExperimentConfig(name, values, merged.get("output", "-"), precision)


def format_number(x: float, precision: int) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return format(x, f".{precision}g")


def render_csv(cfg: ExperimentConfig, header, rows, notes) -> str:
    exp = EXPERIMENTS[cfg.experiment]
    lines = [f"# experiment: {cfg.experiment}", f"# reproduces: {exp.anchor}"]
    lines += [f"# config: {line}" for line in cfg.echo()]
    lines += [f"# {n}" for n in notes]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_number(x, cfg.precision) for x in row))
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write to a temporary file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".sublevel-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: ExperimentConfig) -> tuple[str, str]:
    """Execute an experiment; returns ``(csv_text, summary_line)``."""
    header, rows, notes = EXPERIMENTS[cfg.experiment].run(cfg.values)
    rows = [list(r) for r in rows]
    text = render_csv(cfg, header, rows, notes)
    summary = f"{cfg.experiment}: {len(rows)} rows x {len(header)} columns" + (f"; {notes[0]}" if notes else "")
    return text, summary


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sublevel-sense", description="Magnetic-sublevel precession experiments as CSV.")
    parser.add_argument("--list", action="store_true", help="list experiments and exit")
    sub = parser.add_subparsers(dest="experiment", parser_class=_Parser)
    for exp in EXPERIMENTS.values():
        p = sub.add_parser(exp.name, help=exp.anchor, description=f"{exp.anchor}. Columns: {exp.columns}.")
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--output", default=argparse.SUPPRESS, help="CSV path, '-' for stdout (default)")
        p.add_argument("--precision", default=argparse.SUPPRESS, help="significant digits in the CSV (default 12)")
        for opt in exp.options:
            default = f" (default {opt.default})" if opt.default not in (None, "") else ""
            p.add_argument(f"--{opt.key}", dest=opt.key, default=argparse.SUPPRESS, help=opt.help + default)
    return parser


def main(argv=None) -> int:
    try:
        args = vars(build_parser().parse_args(argv))
        if args.pop("list"):
            for exp in EXPERIMENTS.values():
                print(f"{exp.name:<15} {exp.anchor}")
            return EXIT_OK
        name = args.pop("experiment")
        if name is None:
            raise ConfigError("no experiment given (use --list to see them)")
        config_path = args.pop("config")
        file_values = read_config_file(config_path) if config_path else {}
        cfg = resolve(name, file_values, {k: str(v) for k, v in args.items()})
        text, summary = run(cfg)
    except ConfigError as exc:
        print(f"sublevel-sense: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"sublevel-sense: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"sublevel-sense: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if cfg.output == "-":
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    else:
        try:
            write_atomic(cfg.output, text)
        except OSError as exc:
            print(f"sublevel-sense: cannot write {cfg.output!r}: {exc.strerror}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"{summary} -> {cfg.output}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

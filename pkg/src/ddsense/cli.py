"""Command-line front end: ``ddsense <command> --config run.toml --output DIR``.

Each command reads one TOML file (sections per command; see ``configs/``),
applies ``--set section.key=value`` overrides, runs the sweep and writes CSV
(or JSON) files whose first lines are ``#`` metadata comments.

Exit codes: 0 ok, 2 config error, 3 optimizer failure, 4 sensing degenerate.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .control import BUILTIN_PULSES, DDSequence, ErrorPoint, NO_ERROR, sequence_propagator
from .errors import ConfigError, NoImprovement, UnphysicalChannel
from .evalfn import ErrorGrid, f_qc, f_qs, robustness_profile
from .parallel import make_executor
from .sweep import SweepResult, config_hash, fmt_float

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_OPTIM, EXIT_DEGENERATE = 0, 2, 3, 4


class Config:
    """Parsed TOML with line lookup for error messages."""

    def __init__(self, data, text="", source="<config>"):
        self.data = data
        self.text = text
        self.source = source

    @classmethod
    def load(cls, path, overrides=()):
        if path is None:
            text, source = "", "<defaults>"
        else:
            try:
                text = Path(path).read_text()
            except OSError as exc:
                raise ConfigError(f"{path}: cannot read config: {exc}") from exc
            source = str(path)
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{source}: {exc}") from exc
        for item in overrides:
            key, sep, raw = item.partition("=")
            if not sep or "." not in key:
                raise ConfigError(f"--set expects section.key=value, got {item!r}")
            section, name = key.strip().split(".", 1)
            try:
                value = tomllib.loads(f"v = {raw.strip()}")["v"]
            except tomllib.TOMLDecodeError:
                value = raw.strip()
            data.setdefault(section, {})[name] = value
        return cls(data, text, source)

    def line_of(self, section, key):
        current = None
        for n, line in enumerate(self.text.splitlines(), 1):
            s = line.strip()
            if s.startswith("["):
                current = s.strip("[]").strip()
            elif current == section and s.split("=", 1)[0].strip() == key:
                return n
        return None

    def error(self, section, key, msg):
        line = self.line_of(section, key)
        where = f"{self.source}:{line}" if line else f"{self.source} [{section}]"
        return ConfigError(f"{where}: {section}.{key}: {msg}")

    def get(self, section, key, default, kind=float, check=None):
        value = self.data.get(section, {}).get(key, default)
        try:
            if kind is list:
                value = [float(v) for v in value]
            elif kind is not None:
                value = kind(value)
        except (TypeError, ValueError) as exc:
            raise self.error(section, key, f"invalid value {value!r} ({exc})") from exc
        if check is not None:
            problem = check(value)
            if problem:
                raise self.error(section, key, problem)
        return value


def _positive(v):
    return None if v > 0 else "must be positive"


def _non_negative(v):
    return None if v >= 0 else "must be non-negative"


def _at_least(n):
    return lambda v: None if v >= n else f"must be >= {n}"


def _non_empty(v):
    return None if len(v) else "must not be empty"


def load_pulse(cfg, section, key="pulse", default="rect"):
    from .optim import sequence_from_json

    name = cfg.get(section, key, default, kind=str)
    if name in BUILTIN_PULSES:
        return name, BUILTIN_PULSES[name]()
    path = Path(name)
    if not path.is_absolute() and cfg.source not in ("<defaults>", "<config>"):
        candidate = Path(cfg.source).parent / path
        path = candidate if candidate.exists() else path
    if not path.exists():
        raise cfg.error(section, key, f"pulse file {name!r} not found")
    try:
        return name, sequence_from_json(path.read_text())
    except (ValueError, KeyError, TypeError) as exc:
        raise cfg.error(section, key, f"bad pulse file: {exc}") from exc


def header_lines(command, cfg, seed, extra=()):
    return [
        f"ddsense {__version__} {command}",
        f"config_hash={config_hash(cfg.data)}",
        f"seed={seed}",
        *extra,
    ]


def write_table(result, path, fmt, header, names=None):
    path = Path(path)
    if fmt == "json":
        obj = result.to_json_obj()
        obj["header"] = list(header)
        path = path.with_suffix(".json")
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    else:
        path = path.with_suffix(".csv")
        path.write_text(result.to_csv_text(names, header))
    return path


def _grid_axis(cfg, section, name, lo, hi, n):
    vmin = cfg.get(section, f"{name}_min", lo)
    vmax = cfg.get(section, f"{name}_max", hi)
    count = cfg.get(section, f"n_{name}", n, kind=int, check=_at_least(1))
    if count > 1 and not vmin < vmax:
        raise cfg.error(section, f"{name}_max", f"must exceed {name}_min")
    return np.linspace(vmin, vmax, count) if count > 1 else np.array([vmin])


def cmd_fidelity_map(cfg, args, executor):
    name, seq = load_pulse(cfg, "fidelity_map")
    deltas = _grid_axis(cfg, "fidelity_map", "delta", -1.0, 1.0, 21)
    epss = _grid_axis(cfg, "fidelity_map", "eps", -0.3, 0.3, 13)
    try:
        grid = ErrorGrid.from_points([(d, e) for d in deltas for e in epss])
    except ValueError as exc:
        raise cfg.error("fidelity_map", "delta_max", str(exc)) from exc
    res = robustness_profile(seq, grid, executor=executor)
    header = header_lines(
        "fidelity-map", cfg, args.seed, [f"pulse={name}", "f_qc_target=error-free propagator of the pulse"]
    )
    write_table(res, args.output / "fidelity_map", args.format, header,
                ["delta_ratio", "eps", "f_qs", "f_qc"])
    return EXIT_OK


def cmd_optimize(cfg, args, executor):
    from .optim import OptimConfig, grad_ascent, provenance, sequence_to_json

    s = "optimize"
    grid = ErrorGrid.uniform(
        cfg.get(s, "delta_max", 0.5, check=_non_negative),
        cfg.get(s, "eps_max", 0.1, check=_non_negative),
        cfg.get(s, "n_delta", 9, kind=int, check=_at_least(1)),
        cfg.get(s, "n_eps", 5, kind=int, check=_at_least(1)),
    )
    try:
        oc = OptimConfig(
            n_segments=cfg.get(s, "n_segments", 5, kind=int, check=_at_least(1)),
            grid=grid,
            max_iters=cfg.get(s, "max_iters", 300, kind=int, check=_at_least(1)),
            step_init=cfg.get(s, "step_init", 0.5, check=_positive),
            tol=cfg.get(s, "tol", 1e-10, check=_positive),
            duration_penalty=cfg.get(s, "duration_penalty", 0.0, check=_non_negative),
            seed=args.seed,
        )
    except ValueError as exc:
        raise ConfigError(f"{cfg.source} [optimize]: {exc}") from exc
    init_name = cfg.get(s, "init", "random", kind=str)
    init = None if init_name == "random" else load_pulse(cfg, s, "init")[1]
    header = header_lines("optimize", cfg, args.seed)
    try:
        seq, history = grad_ascent(oc, init)
    except NoImprovement as exc:
        hist = SweepResult({"iteration": np.arange(len(exc.history)), "objective": exc.history})
        write_table(hist, args.output / "history", "csv", header + ["status=no-improvement"])
        print(f"optimize: {exc}", file=sys.stderr)
        return EXIT_OPTIM
    prov = provenance(oc, seq, history)
    prov["tool"] = f"ddsense {__version__}"
    (args.output / "pulse.json").write_text(sequence_to_json(seq, prov) + "\n")
    hist = SweepResult({"iteration": np.arange(len(history)), "objective": np.array(history)})
    write_table(hist, args.output / "history", args.format, header)
    return EXIT_OK


def sensor_params(cfg):
    from .sense import GAMMA_E, SensorParams

    s = "sensor"
    try:
        return SensorParams(
            gamma_e=cfg.get(s, "gamma_e", GAMMA_E, check=_positive),
            t2=cfg.get(s, "t2", 0.84e-3, check=_positive),
            stretch_p=cfg.get(s, "stretch_p", 2.0, check=_positive),
            contrast=cfg.get(s, "contrast", 0.24, check=lambda v: None if 0 < v < 1 else "must lie in (0, 1)"),
            counts_rate=cfg.get(s, "counts_rate", 4.8e4, check=_positive),
            t_read=cfg.get(s, "t_read", 270e-9, check=_positive),
            t_overhead=cfg.get(s, "t_overhead", 2e-6, check=_non_negative),
        )
    except ValueError as exc:
        raise ConfigError(f"{cfg.source} [sensor]: {exc}") from exc


def cmd_echo_sense(cfg, args, executor):
    from .sense import EchoConfig, sensitivity_sweep

    s = "echo_sense"
    params = sensor_params(cfg)
    name, seq = load_pulse(cfg, s)
    ratios = cfg.get(s, "delta_ratios", [0.0, 0.25, 0.5, 0.75, 1.0], kind=list, check=_non_empty)
    for r in ratios:
        if abs(r) > 2:
            raise cfg.error(s, "delta_ratios", f"|{r}| exceeds 2")
    ec = EchoConfig(
        t_sense=cfg.get(s, "t_sense", 0.42e-3, check=_positive),
        pi_pulse=tuple(seq),
        err=ErrorPoint(0.0, cfg.get(s, "eps", 0.0, check=lambda v: None if abs(v) < 1 else "|eps| must be < 1")),
        shots=cfg.get(s, "shots", 10**8, kind=int, check=_at_least(1)),
        seed=args.seed,
    )
    res = sensitivity_sweep(ec, params, ratios, executor=executor)
    header = header_lines(
        "echo-sense", cfg, args.seed,
        [f"pulse={name}", "gamma_e convention: rad s^-1 T^-1",
         f"eta_in_T_per_sqrtHz={fmt_float(res.metadata['eta_in_T_per_sqrtHz'])}",
         "rows with F_QS <= 1e-6 or unresolvable slope are reported as nan"],
    )
    write_table(res, args.output / "echo_sense", args.format, header,
                ["delta_ratio", "eps", "eta_r_T_per_sqrtHz", "f_qs", "eta_r_times_fqs"])
    if res.metadata["degenerate_rows"]:
        print(f"echo-sense: {res.metadata['degenerate_rows']} degenerate row(s)", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def bath_from_config(cfg):
    from .nmr import BathSpec, c13_larmor

    s = "bath"
    field = cfg.get(s, "field_gauss", 380.0, check=_positive)
    raw = cfg.data.get(s, {}).get("hyperfine_hz", [[30e3, 0.0, 20e3]])
    try:
        hf = 2 * np.pi * np.array(raw, dtype=float).reshape(-1, 3)
    except ValueError as exc:
        raise cfg.error(s, "hyperfine_hz", "expected a list of [ax, ay, az] triples") from exc
    if not 1 <= len(hf) <= 5:
        raise cfg.error(s, "hyperfine_hz", "between 1 and 5 nuclei are supported")
    return BathSpec.from_hyperfine(c13_larmor(field), hf)


def cmd_nmr(cfg, args, executor):
    from .nmr import (
        NmrConfig,
        RABI_DEFAULT,
        fqs_scaling_check,
        mean_larmor,
        resonance_tau,
        scan_n,
        scan_tau,
    )

    s = "nmr"
    bath = bath_from_config(cfg)
    name, seq = load_pulse(cfg, s)
    tau1 = resonance_tau(mean_larmor(bath), 1)
    n_pulses = cfg.get(s, "n_pulses", 16, kind=int,
                       check=lambda v: None if v > 0 and v % 2 == 0 else "must be even and positive")
    pattern = cfg.get(s, "pattern", "CPMG", kind=str)
    tau = cfg.get(s, "tau", tau1, check=_positive)
    try:
        dd = DDSequence(n_pulses, tau, pattern, tuple(seq))
    except ValueError as exc:
        raise cfg.error(s, "pattern", str(exc)) from exc
    model = cfg.get(s, "pulse_model", "flip", kind=str,
                    check=lambda v: None if v in ("coherent", "flip") else "must be 'coherent' or 'flip'")
    nc = NmrConfig(bath, dd, NO_ERROR, 0.0, model, cfg.get(s, "dephased", True, kind=bool))
    modes = args.scan or ["tau", "n", "scaling"]
    header = header_lines("nmr", cfg, args.seed, [f"pulse={name}", f"pulse_model={model}",
                                                  "signal convention: s = 2 P_x - 1 (1 = no dip)"])
    if "tau" in modes:
        lo = cfg.get(s, "tau_min", 0.5 * tau1, check=_positive)
        hi = cfg.get(s, "tau_max", 3.5 * tau1, check=_positive)
        if not lo < hi:
            raise cfg.error(s, "tau_max", "must exceed tau_min")
        res = scan_tau(nc, (lo, hi), cfg.get(s, "n_tau", 301, kind=int, check=_at_least(5)), executor)
        dips = res.extras["dips"]
        extra = [f"dip center_s={fmt_float(d['center'])} depth={fmt_float(d['depth'])} "
                 f"width_s={fmt_float(d['width'])} converged={d['converged']}" for d in dips]
        for d in dips:
            if not d["converged"]:
                print(f"nmr: dip fit near {d['center']:.4g} s did not converge", file=sys.stderr)
        write_table(res, args.output / "nmr_tau", args.format, header + extra, ["tau_s", "signal"])
    if "n" in modes:
        n_values = [int(v) for v in cfg.get(s, "n_values", [2, 4, 8, 16, 24, 32], kind=list, check=_non_empty)]
        if any(v <= 0 or v % 2 for v in n_values):
            raise cfg.error(s, "n_values", "all N must be even and positive")
        try:
            res = scan_n(nc, n_values, executor=executor)
        except Exception as exc:  # fit failure is a warning, data still written
            print(f"nmr: N-scan fit failed: {exc}", file=sys.stderr)
        else:
            write_table(res, args.output / "nmr_n", args.format,
                        header + [f"fit_rms={fmt_float(res.extras['fit_rms'])}"],
                        ["N", "dip_depth", "fit_a", "fit_lambda", "fit_b"])
    if "scaling" in modes:
        ratios = cfg.get(s, "delta_ratios", [0.05, 0.1, 0.2, 0.4, 0.6, 0.8], kind=list, check=_non_empty)
        rabi = cfg.get(s, "rabi_hz", RABI_DEFAULT / (2 * np.pi), check=_positive) * 2 * np.pi
        res = fqs_scaling_check(nc, ratios, rabi=rabi, executor=executor)
        write_table(res, args.output / "nmr_scaling", args.format,
                    header + [f"s_0={fmt_float(res.metadata['s_0'])}"])
    return EXIT_OK


_NAMED_CHANNELS = {"identity": "I", "sigma_x": "x", "sigma_y": "y", "sigma_z": "z"}


def cmd_qpt(cfg, args, executor):
    from .qcore import pauli, unitary_to_chi
    from .tomo import check_physical, linear_inversion, mle_project, records_to_csv, simulate_tomography

    s = "qpt"
    channel = cfg.get(s, "channel", "", kind=str)
    if channel:
        if channel not in _NAMED_CHANNELS:
            raise cfg.error(s, "channel", f"unknown channel {channel!r}; use one of {sorted(_NAMED_CHANNELS)}")
        target = pauli(_NAMED_CHANNELS[channel])
        actual = target
        label = channel
    else:
        label, seq = load_pulse(cfg, s)
        r = cfg.get(s, "delta_ratio", 0.0, check=lambda v: None if abs(v) <= 2 else "|delta_ratio| must be <= 2")
        e = cfg.get(s, "eps", 0.0, check=lambda v: None if abs(v) < 1 else "|eps| must be < 1")
        target = sequence_propagator(seq, NO_ERROR)
        actual = sequence_propagator(seq, ErrorPoint(r, e))
    try:
        chi_true = check_physical(unitary_to_chi(actual))
    except UnphysicalChannel as exc:
        raise cfg.error(s, "channel", str(exc)) from exc
    shots = cfg.get(s, "shots", 0, kind=int, check=_non_negative)
    records = simulate_tomography(chi_true, shots, args.seed)
    chi_raw = linear_inversion(records)
    chi = mle_project(chi_raw) if shots else chi_raw
    header = header_lines("qpt", cfg, args.seed, [f"channel={label}", f"shots={shots}"])
    (args.output / "qpt_records.csv").write_text(records_to_csv(records, header))
    labels = ["I", "X", "Y", "Z"]
    for part, fn in (("real", np.real), ("imag", np.imag)):
        table = SweepResult({"row": np.array(labels), **{c: fn(chi[:, j]) for j, c in enumerate(labels)}})
        write_table(table, args.output / f"qpt_chi_{part}", "csv", header)
    summary = SweepResult(
        {"quantity": np.array(["f_qs", "f_qc", "f_qs_direct"]),
         "value": np.array([f_qs(chi), f_qc(chi, target), f_qs(chi_true)], dtype=object)}
    )
    write_table(summary, args.output / "qpt_summary", "csv", header)
    return EXIT_OK


COMMANDS = {
    "fidelity-map": cmd_fidelity_map,
    "optimize": cmd_optimize,
    "echo-sense": cmd_echo_sense,
    "nmr": cmd_nmr,
    "qpt": cmd_qpt,
}


def build_parser():
    p = argparse.ArgumentParser(prog="ddsense", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ddsense {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", "-c", type=Path, default=None)
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
        sp.add_argument("--output", "-o", type=Path, default=Path("."))
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", default="auto")
        sp.add_argument("--seed", type=int, default=None)
        if name == "nmr":
            sp.add_argument("--scan", action="append", choices=("tau", "n", "scaling"))
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = Config.load(args.config, args.overrides)
        if args.seed is None:
            args.seed = cfg.get("run", "seed", 0, kind=int)
        # seed is part of the reproducibility key
        cfg.data.setdefault("run", {})["seed"] = args.seed
        args.output.mkdir(parents=True, exist_ok=True)
        if args.threads != "auto":
            try:
                int(args.threads)
            except ValueError as exc:
                raise ConfigError(f"--threads must be an integer or 'auto', got {args.threads!r}") from exc
        executor = make_executor(args.threads)
        try:
            return COMMANDS[args.command](cfg, args, executor)
        finally:
            if executor is not None:
                executor.shutdown()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

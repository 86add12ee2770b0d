"""Command-line front end.

Subcommands:

* ``estlab mse``           -- estimation-error sweep, CSV out
* ``estlab ber``           -- uncoded-BER sweep, CSV out
* ``estlab phi``           -- |diag| of the delay-domain filter matrices, text out
* ``estlab dump-channel``  -- one realization: true vs estimated magnitudes

Every flag can also live in a ``key = value`` config file (--config); flags
override the file, the file overrides built-in defaults.  Keys a subcommand
does not use are ignored so one file can drive all four subcommands.

Exit codes: 0 success, 1 configuration/usage error, 2 runtime or numerical
error (including I/O failures).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .analysis import build_phi, diag_magnitudes
from .channel import GridSpec, covariance, equal_pdp, exp_pdp, tdl_pdp
from .dmrs import shift_phasor
from .errors import (ConfigurationError, InvalidPilotError, ShapeError,
                     SingularMatrixError)
from .harness import (ScenarioConfig, channel_snapshot, report_csv,
                      run_ber_sweep, run_mse_sweep, snr_to_sigma2, write_report)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; we owe 1 for config errors."""

    def error(self, message):
        raise ConfigurationError(message)


_FLAG_HELP = {
    "snr": "comma-separated SNR list in dB",
    "trials": "number of Monte-Carlo trials",
    "estimators": "comma-separated labels from: dft, occ, fmmse, pmmse, spmmse, perfect",
    "channel1": "port-1 profile: exp:beta,L | tdla:ds_ns | tdlc:ds_ns | equal:max_us",
    "channel2": "port-2 profile (same forms) or 'silent'",
    "seed": "master seed, unsigned 64-bit",
    "out": "output file path (default: stdout)",
    "subcarriers": "OFDM size M",
    "pilots": "pilot count P; pilots sit on subcarriers 0, 2, ..., 2(P-1)",
    "sample_rate": "sample rate in Hz (sets the tap spacing of tdl/equal profiles)",
    "cp_samples": "cyclic-prefix length in samples (metadata only)",
    "data_symbols": "data OFDM symbols per slot",
    "workers": "worker threads; any value yields byte-identical output",
    "occ_noise": "noise variance assumed by the occ filter after combining: halved | literal",
}

_DEFAULTS = {
    "channel1": "exp:-0.0005,40",
    "channel2": "exp:-0.05,40",
    "seed": "0",
    "out": None,
    "subcarriers": "2048",
    "pilots": "120",
    "sample_rate": "30.72e6",
    "cp_samples": "144",
    "estimators": "dft,occ,fmmse,pmmse",
    "workers": "1",
    "data_symbols": "6",
    "occ_noise": "halved",
}

_CMD_DEFAULTS = {
    "mse": {"snr": "0,5,10,15,20,25,30,35,40", "trials": "2000"},
    "ber": {"snr": "0,5,10,15,20,25,30", "trials": "400"},
    "phi": {"snr": "30"},
    "dump-channel": {"snr": "30"},
}

_COMMON = ("channel1", "channel2", "seed", "out",
           "subcarriers", "pilots", "sample_rate", "cp_samples")
_BY_COMMAND = {
    "mse": _COMMON + ("snr", "trials", "estimators", "workers", "data_symbols", "occ_noise"),
    "ber": _COMMON + ("snr", "trials", "estimators", "workers", "data_symbols", "occ_noise"),
    "phi": _COMMON + ("snr",),
    "dump-channel": _COMMON + ("snr", "estimators", "occ_noise"),
}
_ALL_KEYS = frozenset(k for keys in _BY_COMMAND.values() for k in keys)


def _build_parser() -> _Parser:
    parser = _Parser(prog="estlab",
                     description="Two-port pilot channel-estimation benchmarks")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="{mse,ber,phi,dump-channel}")
    descriptions = {
        "mse": "sweep estimation MSE over SNR (CSV)",
        "ber": "sweep uncoded QPSK BER over SNR (CSV)",
        "phi": "diagonal magnitudes of the pmmse/fmmse filters in the delay domain",
        "dump-channel": "true vs estimated channel magnitudes for one realization",
    }
    for command, keys in _BY_COMMAND.items():
        sp = sub.add_parser(command, help=descriptions[command],
                            description=descriptions[command])
        sp.add_argument("--config", metavar="FILE",
                        help="'key = value' file mirroring the flags; flags win")
        for key in keys:
            default = _CMD_DEFAULTS[command].get(key, _DEFAULTS.get(key))
            note = f" (default: {default})" if default is not None else ""
            sp.add_argument("--" + key.replace("_", "-"), dest=key,
                            help=_FLAG_HELP[key] + note)
    return parser


def _read_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path!r}: {exc}") from exc
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip().lower().replace("-", "_")
        if key not in _ALL_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _resolve(args: argparse.Namespace, command: str) -> dict:
    keys = _BY_COMMAND[command]
    values = {k: _CMD_DEFAULTS[command].get(k, _DEFAULTS.get(k)) for k in keys}
    if args.config is not None:
        from_file = _read_config(args.config)
        values.update({k: v for k, v in from_file.items() if k in keys})
    for key in keys:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    return values


# string -> typed value, with the offending key in every error message

def _as_int(values: dict, key: str) -> int:
    try:
        return int(values[key])
    except ValueError:
        raise ConfigurationError(f"{key} must be an integer, got {values[key]!r}") from None


def _as_float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"{key} must be a number, got {text!r}") from None


def _as_snr_list(values: dict) -> tuple:
    parts = [p.strip() for p in values["snr"].split(",") if p.strip()]
    if not parts:
        raise ConfigurationError("snr list must be non-empty")
    return tuple(_as_float(p, "snr") for p in parts)


def _as_labels(values: dict) -> tuple:
    return tuple(p.strip() for p in values["estimators"].split(",") if p.strip())


def _as_occ_literal(values: dict) -> bool:
    table = {"halved": False, "literal": True}
    if values["occ_noise"] not in table:
        raise ConfigurationError(
            f"occ_noise must be 'halved' or 'literal', got {values['occ_noise']!r}")
    return table[values["occ_noise"]]


def _grid(values: dict) -> GridSpec:
    return GridSpec.with_even_pilots(
        M=_as_int(values, "subcarriers"), P=_as_int(values, "pilots"),
        sample_rate=_as_float(values["sample_rate"], "sample_rate"),
        cp_samples=_as_int(values, "cp_samples"))


def _parse_channel(text: str, key: str, sample_rate: float, allow_silent: bool):
    spec = text.strip().lower()
    if spec == "silent":
        if not allow_silent:
            raise ConfigurationError(f"{key} cannot be 'silent'; port 1 must transmit")
        return None
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise ConfigurationError(
            f"{key}: expected exp:beta,L | tdla:ds_ns | tdlc:ds_ns | equal:max_us"
            f"{' | silent' if allow_silent else ''}, got {text!r}")
    if kind == "exp":
        parts = arg.split(",")
        if len(parts) != 2:
            raise ConfigurationError(f"{key}: exp wants 'exp:beta,L', got {text!r}")
        beta = _as_float(parts[0], key)
        try:
            taps = int(parts[1])
        except ValueError:
            raise ConfigurationError(f"{key}: tap count must be an integer, "
                                     f"got {parts[1]!r}") from None
        return exp_pdp(beta, taps)
    if kind in ("tdla", "tdlc", "tdl-a", "tdl-c"):
        return tdl_pdp(kind, _as_float(arg, key) * 1e-9, sample_rate)
    if kind == "equal":
        return equal_pdp(_as_float(arg, key) * 1e-6, sample_rate)
    raise ConfigurationError(f"{key}: unknown channel kind {kind!r}")


def _write_text(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write to {out!r}: {exc}") from exc


def _scenario(values: dict) -> ScenarioConfig:
    grid = _grid(values)
    return ScenarioConfig(
        grid=grid,
        pdp_port1=_parse_channel(values["channel1"], "channel1",
                                 grid.sample_rate, allow_silent=False),
        pdp_port2=_parse_channel(values["channel2"], "channel2",
                                 grid.sample_rate, allow_silent=True),
        estimators=_as_labels(values),
        snr_db_list=_as_snr_list(values),
        trials=_as_int(values, "trials") if "trials" in values else 1,
        data_symbols_per_slot=(_as_int(values, "data_symbols")
                               if "data_symbols" in values else 6),
        master_seed=_as_int(values, "seed"),
        workers=_as_int(values, "workers") if "workers" in values else 1,
        occ_literal_noise_variance=(_as_occ_literal(values)
                                    if "occ_noise" in values else False),
    )


def _cmd_sweep(values: dict, command: str) -> None:
    cfg = _scenario(values)
    report = run_mse_sweep(cfg) if command == "mse" else run_ber_sweep(cfg)
    for row in report.failures():
        print(f"warning: {row.snr_db:g} dB, {row.estimator}: {row.error}",
              file=sys.stderr)
    if values["out"] is None:
        sys.stdout.write(report_csv(report))
    else:
        write_report(report, values["out"])
        print(f"wrote {len(report.rows)} rows to {values['out']}")


def _single_snr(values: dict, command: str) -> float:
    snrs = _as_snr_list(values)
    if len(snrs) != 1:
        raise ConfigurationError(f"{command} wants exactly one --snr value, got {len(snrs)}")
    return snrs[0]


def _cmd_phi(values: dict) -> None:
    snr_db = _single_snr(values, "phi")
    grid = _grid(values)
    pdp1 = _parse_channel(values["channel1"], "channel1", grid.sample_rate, False)
    pdp2 = _parse_channel(values["channel2"], "channel2", grid.sample_rate, True)
    if pdp2 is None:
        raise ConfigurationError("phi needs an active channel2 (the fmmse filter uses it)")
    R1 = covariance(pdp1, grid)
    R2 = covariance(pdp2, grid)
    c = shift_phasor(grid.P, grid.P // 2)
    sigma2 = snr_to_sigma2(snr_db)
    lines = [f"# delay-bin index vs |diag| of the filter matrix, snr_db={snr_db:g}",
             f"# channel1={pdp1.label} channel2={pdp2.label}"]
    for name, other in (("pmmse", R1), ("fmmse", R2)):
        mags = diag_magnitudes(build_phi(R1, other, c, sigma2))
        lines.append(f"# {name}")
        lines.extend(f"{i} {m:.9g}" for i, m in enumerate(mags))
        lines.append("")
    _write_text("\n".join(lines), values["out"])


def _cmd_dump_channel(values: dict) -> None:
    snr_db = _single_snr(values, "dump-channel")
    values = dict(values, snr=f"{snr_db:g}")
    cfg = _scenario(values)
    names, columns, failed = channel_snapshot(cfg)
    for label, message in failed.items():
        print(f"warning: {label}: {message}", file=sys.stderr)
    header = ["# port-1 channel magnitudes at rx antenna 0, one realization, "
              f"snr_db={snr_db:g}",
              "# subcarrier " + " ".join(f"|h_{n}|" for n in names)]
    body = [f"{k} " + " ".join(format(v, ".9g") for v in row)
            for k, row in zip(cfg.grid.pilot_indices, columns)]
    _write_text("\n".join(header + body) + "\n", values["out"])


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        values = _resolve(args, args.command)
        if args.command in ("mse", "ber"):
            _cmd_sweep(values, args.command)
        elif args.command == "phi":
            _cmd_phi(values)
        else:
            _cmd_dump_channel(values)
    except (ConfigurationError, InvalidPilotError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SingularMatrixError, np.linalg.LinAlgError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands: generate, import, estimate, correlate, run, sweep. Every run
prints the effective configuration (JSON), its hash, and the seed set; every
output file embeds the same configuration as comment lines, so results are
self-describing and reproducible. Exit codes: 0 success, 2 configuration
error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys

import numpy as np

from .channel import ChannelConfig, draw_paths, export_trace, import_trace, synthesize
from .correlation import correlation_report
from .errors import ChanpredError, ConfigError
from .estimation import estimate_trace
from .mlp import save_model
from .pipelines import APPROACHES, ExperimentConfig, persistence_nmse, prepare_link, snr_sweep
from .rng import stream

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

# flat config keys <-> (dataclass, field) mapping; CLI flags mirror these keys
_CHANNEL_KEYS = {
    "m_h": "m_h",
    "m_v": "m_v",
    "subcarriers": "n_subcarriers",
    "subcarrier_spacing_hz": "subcarrier_spacing",
    "carrier_hz": "carrier_freq",
    "speed_mps": "speed",
    "block_s": "block_duration",
    "paths": "n_paths",
    "delay_spread_s": "delay_spread",
    "doppler_grid_blocks": "doppler_grid_blocks",
    "doppler_offset_hz": "doppler_offset",
    "channel_seed": "seed",
}
_EXPERIMENT_KEYS = ("tau", "pilot_column", "snr_db", "n0", "n_tr", "n_tr_prime",
                    "n_gap", "n_te", "hidden", "batch_size", "learning_rate",
                    "epochs", "seeds", "approaches")

PRESETS = {
    # full experiment scale
    "paper": {},
    # small CI-speed variant: 4x4 UPA, 16 subcarriers, short chronological
    # split, and livelier channel dynamics (shorter Doppler grid window,
    # nonzero mean Doppler, moderate extra delay spread) so the shrunken
    # training windows exercise the same regime as the full-scale run
    "desk": {
        "m_h": 4, "m_v": 4, "subcarriers": 16,
        "speed_mps": 6.0 * 1000.0 / 3600.0,
        "doppler_grid_blocks": 250,
        "doppler_offset_hz": 9.6,
        "delay_spread_s": 4e-7,
        "n_tr": 160, "n_tr_prime": 10, "n_gap": 240, "n_te": 100,
        "epochs": 200,
    },
}


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = {}
    for key, attr in _CHANNEL_KEYS.items():
        out[key] = getattr(cfg.channel, attr)
    for key in _EXPERIMENT_KEYS:
        value = getattr(cfg, key)
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def config_from_dict(data: dict) -> ExperimentConfig:
    known = set(_CHANNEL_KEYS) | set(_EXPERIMENT_KEYS) | {"preset"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    preset = data.get("preset", "paper")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose one of {sorted(PRESETS)}")
    merged.update(PRESETS[preset])
    merged.update({k: v for k, v in data.items() if k != "preset"})

    chan_kwargs = {}
    for key, attr in _CHANNEL_KEYS.items():
        if key in merged:
            value = merged.pop(key)
            field_type = int if attr not in ("subcarrier_spacing", "carrier_freq",
                                             "speed", "block_duration",
                                             "delay_spread", "doppler_offset") else float
            try:
                chan_kwargs[attr] = field_type(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
    try:
        channel = ChannelConfig(**chan_kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

    exp_kwargs = {"channel": channel}
    casts = {
        "tau": int, "pilot_column": int, "n0": int, "n_tr": int, "n_tr_prime": int,
        "n_gap": int, "n_te": int, "batch_size": int, "epochs": int,
        "learning_rate": float,
        "snr_db": lambda v: tuple(float(x) for x in v),
        "hidden": lambda v: tuple(int(x) for x in v),
        "seeds": lambda v: tuple(int(x) for x in v),
        "approaches": lambda v: tuple(str(x) for x in v),
    }
    for key in _EXPERIMENT_KEYS:
        if key in merged:
            try:
                exp_kwargs[key] = casts[key](merged.pop(key))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
    cfg = ExperimentConfig(**exp_kwargs)
    cfg.validate()
    return cfg


def canonical_json(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:12]


def parse_config(path: str | None = None, overrides: dict | None = None,
                 preset: str = "paper") -> ExperimentConfig:
    """Build the effective config from an optional JSON file plus overrides."""
    data = {"preset": preset}
    if path is not None:
        try:
            with open(path) as f:
                loaded = json.load(f)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        data.update(loaded)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)


def _echo_config(cfg: ExperimentConfig, seeds) -> None:
    print(f"config: {canonical_json(cfg)}")
    print(f"config_hash: {config_hash(cfg)}")
    print(f"seeds: {list(seeds)}")


def _config_header(cfg: ExperimentConfig) -> list:
    return [f"# config_hash: {config_hash(cfg)}",
            f"# config: {canonical_json(cfg)}"]


def _write_csv(path, cfg, header_cols, rows) -> None:
    lines = _config_header(cfg)
    lines.append(",".join(header_cols))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=sorted(PRESETS), default="paper")
    parser.add_argument("--config", help="JSON config file (keys mirror the flags)")
    parser.add_argument("--seed", type=int, help="single RNG seed override")
    parser.add_argument("--seeds", type=_int_list, help="comma-separated seed list")
    parser.add_argument("--snr-db", type=_float_list, dest="snr_db",
                        help="comma-separated SNR list in dB")
    parser.add_argument("--tau", type=int, help="pilot length")
    parser.add_argument("--emit-config", help="write the effective config JSON here")


def _int_list(text: str):
    return [int(t) for t in text.split(",") if t]


def _float_list(text: str):
    return [float(t) for t in text.split(",") if t]


def _effective_config(args) -> ExperimentConfig:
    overrides = {}
    if getattr(args, "snr_db", None):
        overrides["snr_db"] = args.snr_db
    if getattr(args, "tau", None):
        overrides["tau"] = args.tau
    if getattr(args, "seeds", None):
        overrides["seeds"] = args.seeds
    elif getattr(args, "seed", None) is not None:
        overrides["seeds"] = [args.seed]
    if getattr(args, "approach", None):
        overrides["approaches"] = [args.approach]
    cfg = parse_config(args.config, overrides, preset=args.preset)
    if args.emit_config:
        with open(args.emit_config, "w") as f:
            json.dump(config_to_dict(cfg), f, sort_keys=True, indent=2)
            f.write("\n")
    return cfg


def _cmd_generate(args) -> int:
    cfg = _effective_config(args)
    seed = cfg.seeds[0]
    _echo_config(cfg, [seed])
    chan = cfg.channel.with_seed(seed)
    blocks = args.blocks or cfg.required_blocks
    tensor = synthesize(chan, draw_paths(chan), blocks)
    export_trace(tensor, args.out)
    print(f"wrote trace: {args.out} (N={tensor.n_blocks} L={tensor.n_subcarriers} "
          f"M={tensor.n_antennas})")
    return EXIT_OK


def _cmd_import(args) -> int:
    tensor = import_trace(args.trace)
    power = float(np.mean(np.abs(tensor.values) ** 2))
    print(f"trace ok: N={tensor.n_blocks} L={tensor.n_subcarriers} "
          f"M={tensor.n_antennas} domain={tensor.domain} "
          f"provenance={tensor.provenance} mean_element_power={power:.6g}")
    if args.out:
        export_trace(tensor, args.out)
        print(f"re-exported canonically: {args.out}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    cfg = _effective_config(args)
    seed = cfg.seeds[0]
    _echo_config(cfg, [seed])
    tensor = import_trace(args.trace)
    snr_db = cfg.snr_db[0]
    est = estimate_trace(tensor, cfg.scheme(snr_db), stream(seed, "pilot-noise"))
    export_trace(est, args.out)
    print(f"wrote estimated trace: {args.out} (snr_db={snr_db}, tau={cfg.tau})")
    return EXIT_OK


def _cmd_correlate(args) -> int:
    cfg = _effective_config(args)
    seed = cfg.seeds[0]
    _echo_config(cfg, [seed])
    if args.trace:
        tensor = import_trace(args.trace)
    else:
        chan = cfg.channel.with_seed(seed)
        tensor = synthesize(chan, draw_paths(chan), args.n_avg + args.max_shift)
    report = correlation_report(tensor, max_shift=args.max_shift, n_avg=args.n_avg)
    _write_csv(args.out, cfg, ("shift", "domain", "auto_mag", "cross_mag"),
               report.rows())
    print(f"wrote correlation study: {args.out}")
    return EXIT_OK


def _run_and_write(cfg, args, approaches) -> int:
    _echo_config(cfg, cfg.seeds)
    report = snr_sweep(cfg, approaches=approaches,
                       collect_models=bool(getattr(args, "save_models", None)))
    for entry in report.entries:
        print(f"{entry.approach:9s} snr={entry.snr_db:6.1f} dB  "
              f"nmse={entry.nmse_db:8.2f} dB  overhead={entry.overhead_blocks} blocks")
    for snr, value in report.persistence.items():
        print(f"persistence snr={snr:6.1f} dB  nmse={10*np.log10(value):8.2f} dB")
    print(f"runtime: {report.runtime_seconds:.1f} s")
    if args.out:
        header, rows = report.csv_rows()
        _write_csv(args.out, cfg, header, rows)
        print(f"wrote report: {args.out}")
    if getattr(args, "loss_out", None):
        rows = []
        for cell in report.cells:
            for series, hist in sorted(cell.histories.items()):
                rows.extend((cell.approach, cell.snr_db, cell.seed, series, ep, loss)
                            for ep, loss in enumerate(hist))
        _write_csv(args.loss_out, cfg,
                   ("approach", "snr_db", "seed", "series", "epoch", "loss"), rows)
        print(f"wrote loss history: {args.loss_out}")
    if getattr(args, "save_models", None):
        import os
        os.makedirs(args.save_models, exist_ok=True)
        for cell in report.cells:
            for series, model in cell.models.items():
                name = f"{cell.approach}_snr{cell.snr_db:g}_seed{cell.seed}_series{series}.txt"
                save_model(model, os.path.join(args.save_models, name))
        print(f"saved models under: {args.save_models}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _effective_config(args)
    return _run_and_write(cfg, args, (args.approach,))


def _cmd_sweep(args) -> int:
    cfg = _effective_config(args)
    return _run_and_write(cfg, args, cfg.approaches)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chanpred",
        description="Wideband massive-MIMO channel prediction experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a channel trace file")
    _add_common(p)
    p.add_argument("--blocks", type=int, help="number of coherence blocks")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("import", help="validate (and canonicalize) a trace file")
    p.add_argument("--trace", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_import)

    p = sub.add_parser("estimate", help="LS-estimate a true trace")
    _add_common(p)
    p.add_argument("--trace", required=True, help="input true trace")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("correlate", help="auto/cross correlation study (CSV)")
    _add_common(p)
    p.add_argument("--trace", help="analyze this trace instead of synthesizing")
    p.add_argument("--n-avg", type=int, default=2000, dest="n_avg")
    p.add_argument("--max-shift", type=int, default=16, dest="max_shift")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("run", help="run one prediction approach")
    _add_common(p)
    p.add_argument("--approach", choices=APPROACHES, required=True)
    p.add_argument("--out")
    p.add_argument("--loss-out", dest="loss_out")
    p.add_argument("--save-models", dest="save_models")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run all configured approaches over the SNR grid")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--loss-out", dest="loss_out")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ChanpredError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

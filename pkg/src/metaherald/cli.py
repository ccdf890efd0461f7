"""Command-line harness: reproducible recipes over the library modules.

Subcommands: ``mask``, ``image``, ``sweep``, ``bell``, ``hologram``.
Configuration comes from an INI-style file (``--config``) overridden by
flags (flags win); every angle at this boundary is in degrees.  Exit
codes: 0 success, 2 configuration error, 3 runtime/numeric error.  All
file outputs are written atomically, and identical config + seed yields
byte-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .bell import chsh_S, max_chsh_S, calibrate_model, measure_chsh
from .hologram import (
    DEFAULT_Z_DESIGN,
    builtin_target_image,
    design_hologram,
    reconstruct_hologram,
    scramble_metric,
    synthesize_field,
)
from .imaging import expected_image, pipeline_visibility, visibility_closed_form
from .metasurface import (
    PERIOD_NM,
    generate_star_triangle_mask,
    layout_star_triangle,
    mask_from_layout,
    read_layout,
    read_mask_pgm,
    write_layout,
    write_mask_pgm,
)
from .montecarlo import DetectorConfig, estimate_visibility, sample_coincidences
from .pgmio import atomic_write_text, read_pgm, write_metadata, write_pgm
from .polarization import KET_H, KET_V, StateModel, model_state
from .propagation import PropagationPlan, angular_spectrum_propagate, crop_field

PRESET_TARGETS = {"s2.5": 2.5, "s1.6": 1.6}


class ConfigError(Exception):
    """Invalid configuration value; maps to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str | None = "pure"
    lam: float | None = None
    v: float | None = None
    xi_deg: float = 0.0
    phi_deg: float = 0.0
    phi_start_deg: float = 0.0
    phi_stop_deg: float = 360.0
    phi_step_deg: float = 1.0
    rows: int = 128
    cols: int = 128
    pitch_nm: float = PERIOD_NM
    swap: bool = False
    layout_path: str | None = None
    pairs: int = 1_000_000
    background: float = 0.0
    efficiency: float = 1.0
    seed: int = 1
    z_um: float = DEFAULT_Z_DESIGN * 1e6
    target: str = "builtin"
    pad: int = 2
    out_dir: str = "out"
    threads: int = 1


_SCHEMA = {
    ("state", "preset"): ("preset", str),
    ("state", "lambda"): ("lam", float),
    ("state", "v"): ("v", float),
    ("angles", "xi_deg"): ("xi_deg", float),
    ("angles", "phi_deg"): ("phi_deg", float),
    ("angles", "phi_start_deg"): ("phi_start_deg", float),
    ("angles", "phi_stop_deg"): ("phi_stop_deg", float),
    ("angles", "phi_step_deg"): ("phi_step_deg", float),
    ("mask", "rows"): ("rows", int),
    ("mask", "cols"): ("cols", int),
    ("mask", "pitch_nm"): ("pitch_nm", float),
    ("mask", "swap"): ("swap", lambda s: s.lower() in ("1", "true", "yes")),
    ("mask", "layout_path"): ("layout_path", str),
    ("detector", "pairs"): ("pairs", int),
    ("detector", "background"): ("background", float),
    ("detector", "efficiency"): ("efficiency", float),
    ("detector", "seed"): ("seed", int),
    ("hologram", "z_um"): ("z_um", float),
    ("hologram", "target"): ("target", str),
    ("hologram", "pad"): ("pad", int),
    ("output", "dir"): ("out_dir", str),
    ("output", "threads"): ("threads", int),
}


def parse_config_text(text):
    """Parse INI text into an ExperimentConfig, with field-level diagnostics."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            try:
                field_name, conv = _SCHEMA[(section, key)]
            except KeyError:
                raise ConfigError(f"[{section}] {key}: unknown option") from None
            try:
                values[field_name] = conv(raw)
            except ValueError:
                raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None
    return validate_config(replace(ExperimentConfig(), **values))


def config_to_text(cfg):
    """Serialize a config back to INI text (parse(config_to_text(c)) == c)."""
    out = []
    by_section: dict[str, list[str]] = {}
    for (section, key), (field_name, _) in _SCHEMA.items():
        value = getattr(cfg, field_name)
        if value is None:
            continue
        by_section.setdefault(section, []).append(f"{key} = {value}")
    for section in ("state", "angles", "mask", "detector", "hologram", "output"):
        if section in by_section:
            out.append(f"[{section}]")
            out.extend(by_section[section])
            out.append("")
    return "\n".join(out)


def validate_config(cfg):
    if cfg.preset is not None and cfg.preset not in ("pure", "mixed", *PRESET_TARGETS):
        raise ConfigError(f"[state] preset: unknown preset {cfg.preset!r} (pure|mixed|s2.5|s1.6)")
    for name in ("xi_deg", "phi_deg", "phi_start_deg", "phi_stop_deg", "phi_step_deg"):
        if not np.isfinite(getattr(cfg, name)):
            raise ConfigError(f"[angles] {name}: must be finite")
    if cfg.phi_step_deg <= 0:
        raise ConfigError("[angles] phi_step_deg: step must be > 0")
    if cfg.phi_stop_deg < cfg.phi_start_deg:
        raise ConfigError("[angles] phi_stop_deg: sweep end precedes start")
    if cfg.rows < 1 or cfg.cols < 1:
        raise ConfigError("[mask] rows/cols: must be positive")
    if cfg.pitch_nm <= 0:
        raise ConfigError("[mask] pitch_nm: must be positive")
    if cfg.layout_path is not None and not os.path.exists(cfg.layout_path):
        raise ConfigError(f"[mask] layout_path: no such file {cfg.layout_path!r}")
    if cfg.pairs < 0:
        raise ConfigError("[detector] pairs: must be >= 0")
    if cfg.background < 0:
        raise ConfigError("[detector] background: must be >= 0")
    if not (0 < cfg.efficiency <= 1):
        raise ConfigError("[detector] efficiency: must be in (0, 1]")
    if not (0 <= cfg.seed < 2**64):
        raise ConfigError("[detector] seed: must fit in 64 bits")
    if cfg.z_um < 0:
        raise ConfigError("[hologram] z_um: must be >= 0")
    if cfg.pad < 1:
        raise ConfigError("[hologram] pad: must be >= 1")
    if cfg.target != "builtin" and not os.path.exists(cfg.target):
        raise ConfigError(f"[hologram] target: no such file {cfg.target!r}")
    if cfg.threads < 1:
        raise ConfigError("[output] threads: must be >= 1")
    if (cfg.lam is None) != (cfg.v is None):
        raise ConfigError("[state] lambda/v: provide both knobs or neither")
    if cfg.lam is not None and not (0.0 <= cfg.lam <= 1.0 and 0.0 <= cfg.v <= 1.0):
        raise ConfigError("[state] lambda/v: knobs must lie in [0, 1]")
    return cfg


def resolve_state(cfg):
    """(StateModel, descriptor dict) for the configured state; explicit knobs win."""
    if cfg.lam is not None:
        model = StateModel(cfg.lam, cfg.v)
        label = "custom"
    elif cfg.preset == "pure":
        model, label = StateModel(1.0, 1.0), "pure"
    elif cfg.preset == "mixed":
        model, label = StateModel(0.0, 1.0), "mixed"
    elif cfg.preset in PRESET_TARGETS:
        model, label = calibrate_model(PRESET_TARGETS[cfg.preset]), cfg.preset
    else:
        raise ConfigError("[state] preset: no state configured")
    meta = {
        "state": label,
        "lambda": f"{model.lambda_coherence:.12g}",
        "v": f"{model.v_white:.12g}",
    }
    return model, meta


def resolve_mask(cfg):
    if cfg.layout_path is not None:
        layout = read_layout(cfg.layout_path)
        return mask_from_layout(layout, (cfg.rows, cfg.cols))
    return generate_star_triangle_mask((cfg.rows, cfg.cols), cfg.pitch_nm * 1e-9, swap=cfg.swap)


def _out(cfg, name):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def cmd_mask(cfg):
    try:
        mask = resolve_mask(cfg)
    except ValueError as exc:  # dims too small, bad layout file
        raise ConfigError(f"[mask] rows/cols: {exc}") from exc
    layout = layout_star_triangle(mask)
    write_mask_pgm(_out(cfg, "mask_triangle.pgm"), _out(cfg, "mask_star.pgm"), mask)
    write_layout(_out(cfg, "layout.txt"), layout)
    write_metadata(
        _out(cfg, "mask_meta.txt"),
        {
            "rows": cfg.rows,
            "cols": cfg.cols,
            "pitch_nm": f"{cfg.pitch_nm:g}",
            "swap": int(cfg.swap),
            "slits": len(layout),
            "triangle_cells": int(mask.theta_a.sum()),
            "star_cells": int(mask.theta_b.sum()),
        },
    )
    print(f"mask: {cfg.rows}x{cfg.cols}, {len(layout)} slits -> {cfg.out_dir}")
    return 0


ANALYTIC_PGM_SCALE = 2.0  # expected intensities <= 1/2 map onto the full 16-bit range


def cmd_image(cfg, mode="both"):
    model, meta = resolve_state(cfg)
    rho = model_state(model)
    mask = resolve_mask(cfg)
    phi = np.radians(cfg.phi_deg)
    xi = np.radians(cfg.xi_deg)
    meta.update(
        {
            "phi_deg": f"{cfg.phi_deg:g}",
            "xi_deg": f"{cfg.xi_deg:g}",
            "seed": cfg.seed,
            "pair_count": cfg.pairs,
            "background": f"{cfg.background:g}",
            "efficiency": f"{cfg.efficiency:g}",
            "threads": cfg.threads,
        }
    )

    if mode in ("analytic", "both"):
        img = expected_image(rho, phi, mask, xi)
        write_pgm(_out(cfg, "analytic.pgm"), img.values * ANALYTIC_PGM_SCALE * 65535.0, maxval=65535)
        meta["analytic_pgm_scale"] = f"{ANALYTIC_PGM_SCALE * 65535.0:g}"
    if mode in ("mc", "both"):
        det = DetectorConfig(cfg.pairs, cfg.background, cfg.seed, cfg.efficiency)
        ci = sample_coincidences(rho, phi, mask, xi, det)
        write_pgm(_out(cfg, "counts.pgm"), np.minimum(ci.counts, 65535), maxval=65535)
        meta["total_heralds"] = ci.total_heralds
        v, err = estimate_visibility(ci, mask)
        meta["v_mc"] = f"{v:.9g}"
        meta["v_mc_stderr"] = f"{err:.9g}"
    write_metadata(_out(cfg, "image_meta.txt"), meta)
    print(f"image: state={meta['state']} phi={cfg.phi_deg}deg xi={cfg.xi_deg}deg -> {cfg.out_dir}")
    return 0


def cmd_sweep(cfg):
    model, meta = resolve_state(cfg)
    rho = model_state(model)
    mask = resolve_mask(cfg)
    xi = np.radians(cfg.xi_deg)
    phis_deg = np.arange(cfg.phi_start_deg, cfg.phi_stop_deg + 0.5 * cfg.phi_step_deg, cfg.phi_step_deg)

    lines = ["phi_deg,v_analytic,v_mc,stderr"]
    dark_points = 0
    for i, phi_deg in enumerate(phis_deg):
        phi = np.radians(phi_deg)
        # per-point seed offset keeps points independent yet reproducible
        det = DetectorConfig(cfg.pairs, cfg.background, (cfg.seed + 7919 * i) % 2**64, cfg.efficiency)
        try:
            v_analytic = pipeline_visibility(rho, phi, mask, xi)
            ci = sample_coincidences(rho, phi, mask, xi, det)
            v_mc, err = estimate_visibility(ci, mask)
            lines.append(f"{phi_deg:.9g},{v_analytic:.9g},{v_mc:.9g},{err:.9g}")
        except ValueError:
            dark_points += 1
            lines.append(f"{phi_deg:.9g},nan,nan,nan")
    atomic_write_text(_out(cfg, "sweep.csv"), "\n".join(lines) + "\n")
    meta.update(
        {
            "xi_deg": f"{cfg.xi_deg:g}",
            "phi_start_deg": f"{cfg.phi_start_deg:g}",
            "phi_stop_deg": f"{cfg.phi_stop_deg:g}",
            "phi_step_deg": f"{cfg.phi_step_deg:g}",
            "pair_count": cfg.pairs,
            "seed": cfg.seed,
            "points": len(phis_deg),
            "dark_points": dark_points,
        }
    )
    write_metadata(_out(cfg, "sweep_meta.txt"), meta)
    if dark_points:
        print(f"sweep: {dark_points} all-dark points reported as nan", file=sys.stderr)
    print(f"sweep: {len(phis_deg)} points at xi={cfg.xi_deg}deg -> {cfg.out_dir}")
    return 0


def cmd_bell(cfg):
    model, meta = resolve_state(cfg)
    rho = model_state(model)
    s_max, setting = max_chsh_S(rho, step_deg=0.5, full_output=True)
    s_counts, stderr = measure_chsh(rho, setting, max(cfg.pairs, 1), cfg.seed)
    vis_amp = -pipeline_visibility(rho, np.pi / 4, resolve_mask(cfg), np.pi / 4)

    deg = lambda x: f"{np.degrees(x) % 180.0:.3f}"
    report = "\n".join(
        [
            "CHSH report",
            f"  state            : {meta['state']} (lambda={meta['lambda']}, v={meta['v']})",
            f"  grid-search |S|  : {s_max:.6f}",
            f"  at angles (deg)  : a={deg(setting.a)} a'={deg(setting.a_prime)} "
            f"b={deg(setting.b)} b'={deg(setting.b_prime)}",
            f"  S at setting     : {chsh_S(rho, setting):.6f}",
            f"  counts estimate  : {s_counts:.5f} +/- {stderr:.5f}  (pairs/setting={max(cfg.pairs, 1)}, seed={cfg.seed})",
            f"  visibility amp   : {vis_amp:.6f} at xi=45deg (equals lambda*v)",
            "",
        ]
    )
    atomic_write_text(_out(cfg, "bell_report.txt"), report)
    meta.update({"S_max": f"{s_max:.6f}", "S_counts": f"{s_counts:.6f}", "S_stderr": f"{stderr:.6f}", "seed": cfg.seed})
    write_metadata(_out(cfg, "bell_meta.txt"), meta)
    print(report, end="")
    return 0


def _load_target(cfg):
    if cfg.target == "builtin":
        return builtin_target_image(128)
    values, maxval = read_pgm(cfg.target)
    return values.astype(float) / maxval


def cmd_hologram(cfg):
    target = _load_target(cfg)
    z = cfg.z_um * 1e-6
    layout = design_hologram(target, z=z, pad_factor=cfg.pad)
    write_layout(_out(cfg, "hologram_layout.txt"), layout)

    surface = synthesize_field(layout, KET_H, 0.0)
    write_pgm(_out(cfg, "field_magnitude.pgm"), np.abs(surface.values) * 2.0 * 65535.0, maxval=65535)
    write_pgm(
        _out(cfg, "field_phase.pgm"),
        (np.angle(surface.values) % (2.0 * np.pi)) / (2.0 * np.pi) * 65535.0,
        maxval=65535,
    )

    designed = reconstruct_hologram(layout, KET_H, 0.0, z=z, out_dims=target.shape)
    scrambled = reconstruct_hologram(layout, KET_V, 0.0, z=z, out_dims=target.shape)
    corr = scramble_metric(designed.intensity(), target)
    corr_orth = scramble_metric(scrambled.intensity(), target)

    for name, field in (("designed", designed), ("scrambled", scrambled)):
        intensity = field.intensity()
        peak = intensity.max() or 1.0
        write_pgm(_out(cfg, f"{name}_intensity.pgm"), intensity / peak * 65535.0, maxval=65535)

    write_metadata(
        _out(cfg, "hologram_meta.txt"),
        {
            "target": cfg.target,
            "z_um": f"{cfg.z_um:g}",
            "pad": cfg.pad,
            "slits": len(layout),
            "correlation_designed": f"{corr:.6f}",
            "correlation_orthogonal": f"{corr_orth:.6f}",
        },
    )
    print(f"hologram: designed corr={corr:.3f}, orthogonal corr={corr_orth:.3f} -> {cfg.out_dir}")
    return 0


def build_parser():
    # SUPPRESS keeps unset copies of the global flags from clobbering values
    # parsed at the other position (before vs after the subcommand)
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", metavar="PATH", help="INI config file")
    common.add_argument("--seed", type=int, metavar="U64", help="master RNG seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=int, metavar="N", help="worker hint (vectorized backend)")

    parser = argparse.ArgumentParser(prog="metaherald", description=__doc__, parents=[common])
    parser.add_argument("--version", action="version", version=f"metaherald {__version__}")

    sub = parser.add_subparsers(dest="command", required=True)

    def sub_parser(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common])

    def add_state_flags(p):
        p.add_argument("--preset", choices=("pure", "mixed", "s2.5", "s1.6"))
        p.add_argument("--lam", type=float, help="coherence knob in [0,1]")
        p.add_argument("--v", type=float, help="white-noise knob in [0,1]")

    def add_mask_flags(p):
        p.add_argument("--dims", type=int, nargs=2, metavar=("ROWS", "COLS"))
        p.add_argument("--pitch-nm", type=float)
        p.add_argument("--swap", action="store_true", default=None)
        p.add_argument("--layout", metavar="PATH", help="load slit layout instead of generating")

    p = sub_parser("mask", "generate star/triangle mask PGMs and slit layout text")
    add_mask_flags(p)

    p = sub_parser("image", "analytic and/or Monte Carlo image for one (state, phi, xi)")
    add_state_flags(p)
    add_mask_flags(p)
    p.add_argument("--phi-deg", type=float)
    p.add_argument("--xi-deg", type=float)
    p.add_argument("--pairs", type=int)
    p.add_argument("--background", type=float)
    p.add_argument("--efficiency", type=float)
    p.add_argument("--mode", choices=("analytic", "mc", "both"), default="both")

    p = sub_parser("sweep", "visibility curve CSV over a herald polarizer grid")
    add_state_flags(p)
    add_mask_flags(p)
    p.add_argument("--xi-deg", type=float)
    p.add_argument("--phi-start-deg", type=float)
    p.add_argument("--phi-stop-deg", type=float)
    p.add_argument("--phi-step-deg", type=float)
    p.add_argument("--pairs", type=int)
    p.add_argument("--background", type=float)

    p = sub_parser("bell", "Bell parameter: grid search, calibration, counts estimate")
    add_state_flags(p)
    p.add_argument("--pairs", type=int, help="pairs per CHSH setting")

    p = sub_parser("hologram", "encode, synthesize, propagate, and score scrambling")
    p.add_argument("--target", metavar="PATH|builtin")
    p.add_argument("--z-um", type=float)
    p.add_argument("--pad", type=int)

    return parser


_FLAG_FIELDS = {
    "seed": "seed",
    "out": "out_dir",
    "threads": "threads",
    "preset": "preset",
    "lam": "lam",
    "v": "v",
    "phi_deg": "phi_deg",
    "xi_deg": "xi_deg",
    "phi_start_deg": "phi_start_deg",
    "phi_stop_deg": "phi_stop_deg",
    "phi_step_deg": "phi_step_deg",
    "pitch_nm": "pitch_nm",
    "swap": "swap",
    "layout": "layout_path",
    "pairs": "pairs",
    "background": "background",
    "efficiency": "efficiency",
    "target": "target",
    "z_um": "z_um",
    "pad": "pad",
}


def config_from_args(args):
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                cfg = parse_config_text(f.read())
        except OSError as exc:
            raise ConfigError(f"--config: {exc}") from exc
    else:
        cfg = ExperimentConfig()

    overrides = {}
    for flag, field_name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    if getattr(args, "dims", None) is not None:
        overrides["rows"], overrides["cols"] = args.dims
    if "lam" in overrides and "v" not in overrides:
        overrides["v"] = cfg.v if cfg.v is not None else 1.0
    return validate_config(replace(cfg, **overrides))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "mask":
            return cmd_mask(cfg)
        if args.command == "image":
            return cmd_image(cfg, mode=args.mode)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "bell":
            return cmd_bell(cfg)
        if args.command == "hologram":
            return cmd_hologram(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime/numeric failures
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

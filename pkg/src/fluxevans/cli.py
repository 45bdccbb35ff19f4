"""Batch front end: configure a system and task, run it, write artifacts.

One YAML config file drives every run; `print-defaults` dumps the full
default tree so any figure-grade run is reproducible from a single file.
Tasks: profile (solve and dump the connecting wave), eval (Evans samples
at listed frequencies), contour (argument-principle winding on a closed
contour), lowfreq (angle-independence fit of the low-frequency limit),
regime-scan (balanced samples on a small-frequency shell plus
modified-balanced windings on intermediate contours per transverse slice).

Exit codes: 0 success, 2 configuration error, 3 numerical failure (an
error record is written to the output directory).
"""

import copy
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np
import yaml

from . import report, systems
from .errors import ConfigError, ToolkitError
from .evans import (
    circle_contour, default_splits, evaluate, evaluate_bf, field_builder,
    winding,
)
from .formulations import Frequency
from .lopatinski import fit_low_frequency
from .profile import algebraic_residual, profile_residual, solve_profile

DEFAULTS = {
    "system": "burgers",
    "params": {},
    "shock": {},               # optional U_minus / U_plus overrides
    "variant": "integrated_1d",
    "jobs": 1,
    "seed": 0,
    "profile": {
        "nodes": 1600,
        "length": None,        # half-window; null = auto from decay rates
        "tol": 1.0e-3,
    },
    "eval": {
        "frequencies": [[1.0, 0.0]],   # rows: Re lambda, Im lambda, xi...
    },
    "contour": {
        "shape": "circle",     # circle | semicircle | rectangle
        "center": [1.5, 0.0],
        "radius": 1.4,
        "samples": 48,
        "xi": [],
        "max_depth": 14,
    },
    "lowfreq": {
        "angles": 8,
        "half_width": 1.1,     # angular half-width of the frequency fan
        "radii": [1.0e-2, 3.0e-3, 1.0e-3],
    },
    "regime_scan": {
        "shell_radius": 1.0e-2,
        "shell_samples": 8,
        "contour_center": [11.0, 0.0],
        "contour_radius": 10.0,
        "contour_samples": 64,
        "xi_slices": [0.0],
    },
    "tolerances": {
        "cond_tol": 1.0e-13,
    },
}

TASKS = ("profile", "eval", "contour", "lowfreq", "regime-scan")


# --- configuration -----------------------------------------------------------

def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, val in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"{here}: unknown configuration field")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{here}: expected a mapping")
            if key in ("params", "shock"):   # free-form sections
                out[key] = {**base[key], **val}
            else:
                out[key] = _merge(base[key], val, here)
        else:
            out[key] = val
    return out


def load_config(path=None, overrides=None):
    """Defaults, overlaid with a YAML file, overlaid with CLI flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path!r} ({exc})")
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: invalid YAML in {path!r} ({exc})")
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a mapping")
        cfg = _merge(cfg, data)
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val
    validate(cfg)
    return cfg


def _require_pos(cfg, section, key, strict=True):
    val = cfg[section][key]
    try:
        ok = val > 0 if strict else val >= 0
    except TypeError:
        ok = False
    if not ok:
        raise ConfigError(f"{section}.{key}: must be a positive number, "
                          f"got {val!r}")


def validate(cfg):
    if cfg["system"] not in systems.names():
        raise ConfigError(f"system: unknown system {cfg['system']!r}; "
                          f"known: {', '.join(systems.names())}")
    if not isinstance(cfg["jobs"], int) or cfg["jobs"] < 1:
        raise ConfigError(f"jobs: must be a positive integer, "
                          f"got {cfg['jobs']!r}")
    for side in cfg["shock"]:
        if side not in ("U_minus", "U_plus"):
            raise ConfigError(f"shock.{side}: unknown field "
                              "(expected U_minus / U_plus)")
    _require_pos(cfg, "profile", "nodes")
    _require_pos(cfg, "profile", "tol")
    freqs = cfg["eval"]["frequencies"]
    if (not isinstance(freqs, list) or not freqs
            or any(not isinstance(f, list) or len(f) < 2 for f in freqs)):
        raise ConfigError("eval.frequencies: expected a nonempty list of "
                          "[re_lambda, im_lambda, xi...] rows")
    if cfg["contour"]["shape"] not in ("circle", "semicircle", "rectangle"):
        raise ConfigError(f"contour.shape: unknown shape "
                          f"{cfg['contour']['shape']!r}")
    _require_pos(cfg, "contour", "radius")
    _require_pos(cfg, "contour", "samples")
    _require_pos(cfg, "contour", "max_depth", strict=False)
    if len(cfg["contour"]["center"]) != 2:
        raise ConfigError("contour.center: expected [re, im]")
    _require_pos(cfg, "lowfreq", "angles")
    _require_pos(cfg, "lowfreq", "half_width")
    radii = cfg["lowfreq"]["radii"]
    if (len(radii) < 2 or any(r <= 0 for r in radii)
            or any(a >= b for a, b in zip(radii[1:], radii))):
        raise ConfigError("lowfreq.radii: expected >= 2 positive radii in "
                          "strictly decreasing order")
    _require_pos(cfg, "regime_scan", "shell_radius")
    _require_pos(cfg, "regime_scan", "shell_samples")
    _require_pos(cfg, "regime_scan", "contour_radius")
    _require_pos(cfg, "regime_scan", "contour_samples")
    rs = cfg["regime_scan"]
    if rs["contour_center"][0] - rs["contour_radius"] < 0:
        raise ConfigError("regime_scan.contour_center: intermediate contour "
                          "must stay in Re lambda >= 0")
    _require_pos(cfg, "tolerances", "cond_tol")


# --- shared setup ------------------------------------------------------------

def _setup(cfg):
    spec = systems.get(cfg["system"], **cfg["params"])
    if spec.model is None:
        raise ConfigError(f"system: {cfg['system']!r} is a constant-"
                          "coefficient fixture without profile support")
    Um, Up, _ = spec.default_shock
    if "U_minus" in cfg["shock"]:
        Um = np.asarray(cfg["shock"]["U_minus"], dtype=float)
    if "U_plus" in cfg["shock"]:
        Up = np.asarray(cfg["shock"]["U_plus"], dtype=float)
    opts = {"nodes": int(cfg["profile"]["nodes"]),
            "tol": float(cfg["profile"]["tol"])}
    if cfg["profile"]["length"] is not None:
        opts["L"] = float(cfg["profile"]["length"])
    prof = solve_profile(spec.model, Um, Up, opts)
    return spec, prof


def _parse_freq(row, d):
    xi = tuple(float(x) for x in row[2:])
    if len(xi) != d - 1:
        raise ConfigError(
            f"eval.frequencies: row {row!r} has {len(xi)} transverse "
            f"components; system needs {d - 1}")
    return Frequency(complex(row[0], row[1]), xi)


def build_contour(shape, center, radius, samples, xi=()):
    """Closed contour (list of Frequency) for the requested shape."""
    c = complex(center[0], center[1])
    xi = tuple(xi)
    if shape == "circle":
        return circle_contour(c, radius, samples, xi)
    if shape == "semicircle":
        # right half-disk boundary: arc Re >= Re(c), then the diameter
        n_arc = max(samples // 2, 2)
        n_seg = max(samples - n_arc, 2)
        arc = [c + radius * np.exp(1j * t)
               for t in np.linspace(-np.pi / 2, np.pi / 2, n_arc + 1)]
        seg = [c + 1j * y
               for y in np.linspace(radius, -radius, n_seg + 1)]
        pts = arc[:-1] + seg[:-1]
        return [Frequency(complex(z), xi) for z in pts]
    if shape == "rectangle":
        m = max(samples // 4, 2)
        corners = [c + radius * (1 - 1j), c + radius * (1 + 1j),
                   c + radius * (-1 + 1j), c + radius * (-1 - 1j)]
        pts = []
        for a, b in zip(corners, corners[1:] + corners[:1]):
            pts.extend(a + (b - a) * t for t in np.linspace(0, 1, m + 1)[:-1])
        return [Frequency(complex(z), xi) for z in pts]
    raise ConfigError(f"contour.shape: unknown shape {shape!r}")


def _angle_fan(n, half_width, d):
    """Nonglancing frequency-sphere angles (lambda_hat, xi_hat)."""
    if d == 1:
        return [(1.0, ())]
    out = []
    for t in np.linspace(-half_width, half_width, n):
        xi = [float(np.sin(t))] + [0.0] * (d - 2)
        out.append((float(np.cos(t)), tuple(xi)))
    return out


def _map_ordered(fn, items, jobs):
    """Worker-pool map preserving input order (deterministic merge)."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# --- tasks -------------------------------------------------------------------

def _run_profile(cfg, out):
    spec, prof = _setup(cfg)
    prof.save_text(out / "profile.txt")
    report.plot_profile(prof, out / "profile.png")
    report.save_summary(out / "profile_summary.yaml", {
        "task": "profile", "system": spec.name, "seed": cfg["seed"],
        "half_length": float(prof.L),
        "nodes": int(len(prof.grid)),
        "decay_rate_minus": float(prof.nu_minus),
        "decay_rate_plus": float(prof.nu_plus),
        "tail_fit_reliable": bool(prof.tail_fit_reliable),
        "ode_residual": float(profile_residual(spec.model, prof)),
        "algebraic_residual": float(algebraic_residual(spec.model, prof)),
    })
    return 0


def _run_eval(cfg, out):
    spec, prof = _setup(cfg)
    builder = field_builder(spec.model, prof, cfg["variant"])
    freqs = [_parse_freq(row, spec.model.d)
             for row in cfg["eval"]["frequencies"]]

    def one(freq):
        fld = builder(freq)
        return evaluate(fld, *default_splits(fld))

    samples = _map_ordered(one, freqs, cfg["jobs"])
    report.save_columnar(out / "eval.txt",
                         report.sample_header(spec.model.d - 1),
                         report.sample_rows(samples))
    report.plot_samples(samples, out / "eval.png",
                        title=f"{spec.name} / {cfg['variant']}")
    report.save_summary(out / "eval_summary.yaml", {
        "task": "eval", "system": spec.name, "variant": cfg["variant"],
        "seed": cfg["seed"], "n_samples": len(samples),
        "min_conditioning": float(min(s.conditioning for s in samples)),
    })
    return 0


def _run_contour(cfg, out):
    spec, prof = _setup(cfg)
    cc = cfg["contour"]
    xi = tuple(float(x) for x in cc["xi"])
    if len(xi) != spec.model.d - 1:
        raise ConfigError(f"contour.xi: got {len(xi)} components; system "
                          f"needs {spec.model.d - 1}")
    contour = build_contour(cc["shape"], cc["center"], float(cc["radius"]),
                            int(cc["samples"]), xi)
    result = winding(spec.model, prof, cfg["variant"], contour,
                     opts={"max_depth": int(cc["max_depth"]),
                           "cond_tol": float(cfg["tolerances"]["cond_tol"])})
    report.save_columnar(out / "contour.txt",
                         report.sample_header(spec.model.d - 1),
                         report.sample_rows(result.samples))
    report.plot_contour(result, out / "contour.png")
    report.save_summary(out / "contour_summary.yaml", {
        "task": "contour", "system": spec.name, "variant": cfg["variant"],
        "seed": cfg["seed"], "shape": cc["shape"],
        "center": [float(cc["center"][0]), float(cc["center"][1])],
        "radius": float(cc["radius"]),
        "winding": int(result.winding),
        "refinement_depth": int(result.refinement_depth),
        "n_samples": len(result.samples),
        "min_conditioning": float(min(s.conditioning
                                      for s in result.samples)),
    })
    return 0


def _run_lowfreq(cfg, out):
    spec, prof = _setup(cfg)
    lf = cfg["lowfreq"]
    angles = _angle_fan(int(lf["angles"]), float(lf["half_width"]),
                        spec.model.d)
    fit = fit_low_frequency(spec.model, prof, angles,
                            [float(r) for r in lf["radii"]])
    (out / "lowfreq.txt").write_text(fit.to_text() + "\n")
    report.plot_lowfreq(fit, out / "lowfreq.png")
    mean = np.mean([g for g in fit.gamma_estimates if g is not None])
    report.save_summary(out / "lowfreq_summary.yaml", {
        "task": "lowfreq", "system": spec.name, "seed": cfg["seed"],
        "n_angles": len(angles),
        "radii": [float(r) for r in lf["radii"]],
        "spread": float(fit.spread),
        "limit_constant": [float(mean.real), float(mean.imag)],
        "flagged_angles": [int(i) for i in fit.flagged],
    })
    return 0


def _run_regime_scan(cfg, out):
    spec, prof = _setup(cfg)
    rs = cfg["regime_scan"]
    d = spec.model.d
    r = float(rs["shell_radius"])
    angles = _angle_fan(int(rs["shell_samples"]), 1.1, d)

    def one_shell(om):
        lam_hat, xi_hat = om
        freq = Frequency(complex(r * lam_hat),
                         tuple(r * x for x in xi_hat))
        return evaluate_bf(spec.model, prof, freq)

    shell = _map_ordered(one_shell, angles, cfg["jobs"])
    report.save_columnar(out / "regime_shell.txt",
                         report.sample_header(d - 1),
                         report.sample_rows(shell))

    slices = [float(x) for x in rs["xi_slices"]]
    if d == 1 and any(x != 0.0 for x in slices):
        raise ConfigError("regime_scan.xi_slices: one-dimensional system "
                          "admits only the zero slice")
    windings = []
    for xv in slices:
        xi = () if d == 1 else (xv,) + (0.0,) * (d - 2)
        contour = build_contour("circle", rs["contour_center"],
                                float(rs["contour_radius"]),
                                int(rs["contour_samples"]), xi)
        res = winding(spec.model, prof, "mbf", contour,
                      opts={"cond_tol":
                            float(cfg["tolerances"]["cond_tol"])})
        windings.append((xv, res.winding, res.refinement_depth))
    report.save_columnar(out / "regime_windings.txt",
                         ["xi", "winding", "refinement_depth"],
                         [[x, int(w), int(dep)] for x, w, dep in windings])
    report.plot_regime_scan(shell, windings, out / "regime_scan.png")
    report.save_summary(out / "regime_summary.yaml", {
        "task": "regime-scan", "system": spec.name, "seed": cfg["seed"],
        "shell_radius": r,
        "shell_min_abs_value": float(min(abs(s.value) for s in shell)),
        "shell_min_conditioning": float(min(s.conditioning for s in shell)),
        "contour_radius": float(rs["contour_radius"]),
        "windings": {f"{x:g}": int(w) for x, w, _ in windings},
        "total_winding": int(sum(w for _, w, _ in windings)),
    })
    return 0


_RUNNERS = {
    "profile": _run_profile,
    "eval": _run_eval,
    "contour": _run_contour,
    "lowfreq": _run_lowfreq,
    "regime-scan": _run_regime_scan,
}


def run(task, config_path=None, out_dir=".", overrides=None):
    """Dispatch one task; returns the process exit code (0, 2 or 3)."""
    out = Path(out_dir)
    try:
        cfg = load_config(config_path, overrides)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return 2
    try:
        out.mkdir(parents=True, exist_ok=True)
        return _RUNNERS[task](cfg, out)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return 2
    except ToolkitError as exc:
        record = {"task": task, "system": cfg["system"],
                  "error": type(exc).__name__, "message": str(exc)}
        report.save_summary(out / "error.yaml", record)
        click.echo(f"numerical failure ({type(exc).__name__}): {exc}",
                   err=True)
        return 3


# --- command line ------------------------------------------------------------

def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(),
                      default=None, help="YAML configuration file.")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default=".",
                      help="Output directory for artifacts.")(fn)
    fn = click.option("--jobs", type=int, default=None,
                      help="Worker-pool size for independent samples.")(fn)
    fn = click.option("--variant", type=str, default=None,
                      help="Formulation variant tag.")(fn)
    fn = click.option("--system", "system_name", type=str, default=None,
                      help="Registered system name.")(fn)
    return fn


@click.group()
def main():
    """Evans-function toolkit for viscous shock profiles."""


def _make_command(task):
    @_common
    def cmd(config_path, out_dir, jobs, variant, system_name):
        overrides = {"jobs": jobs, "variant": variant,
                     "system": system_name}
        sys.exit(run(task, config_path, out_dir, overrides))
    cmd.__name__ = task.replace("-", "_")
    return cmd


main.command(name="profile",
             help="Solve the connecting profile and dump it.")(
    _make_command("profile"))
main.command(name="eval",
             help="Evans samples at the configured frequencies.")(
    _make_command("eval"))
main.command(name="contour",
             help="Winding number of D over a closed contour.")(
    _make_command("contour"))
main.command(name="lowfreq",
             help="Angle-independence fit of the low-frequency limit.")(
    _make_command("lowfreq"))
main.command(name="regime-scan",
             help="Shell samples near the origin plus intermediate-"
                  "frequency windings.")(
    _make_command("regime-scan"))


@main.command(name="print-defaults",
              help="Print the full default configuration as YAML.")
def print_defaults():
    click.echo(yaml.safe_dump(DEFAULTS, sort_keys=True,
                              default_flow_style=False), nl=False)


if __name__ == "__main__":
    main()

"""Command-line driver: ``qbounce simulate | estimate | fisher | scan``.

Every output file starts with ``#`` header lines carrying the code version,
the SHA-256 of the canonical configuration and the physical constants; the
rest is plain CSV. Nothing time- or host-dependent is written, so equal
configurations give byte-identical files.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig, config_hash, load_config, parse_config, serialize_config
from .errors import (
    CapacityError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    QBounceError,
)
from .estimation import (
    SEED_MIX,
    cramer_rao,
    crop,
    crop_bounds,
    fisher_information,
    monte_carlo_campaign,
    pattern_shift,
)
from .model import BounceModel
from .physics import CONSTANTS, HYDROGEN_MASS_U, truncation_order

__all__ = ["main", "build_model", "run_simulate", "run_estimate", "run_fisher", "run_scan"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CAPACITY = 4


def build_model(cfg):
    params = cfg.params
    n_gqs = cfg.n_gqs or truncation_order(params, cfg.truncation_tol)
    model = BounceModel(
        params,
        n_gqs=n_gqs,
        delta_z=cfg.delta_z or None,
        safety=cfg.safety,
        max_points=cfg.max_points,
        spline_order=cfg.spline_order,
    )
    defect = model.decomposition().norm_defect
    if abs(defect) > cfg.truncation_tol:
        print(
            f"warning: {n_gqs} states leave a norm defect of {defect:.3g} "
            f"(truncation_tol {cfg.truncation_tol:g}); set n_gqs = 0 to search",
            file=sys.stderr,
        )
    return model


def _header(cfg, extra=()):
    lines = [
        f"qbounce {__version__}",
        f"config_sha256 = {config_hash(cfg)}",
        f"hbar_J_s = {CONSTANTS.hbar!r}",
        f"amu_kg = {CONSTANTS.amu!r}",
        f"hydrogen_mass_u = {HYDROGEN_MASS_U!r}",
    ]
    lines += [f"{k} = {v}" for k, v in extra]
    return "".join(f"# {line}\n" for line in lines)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "undefined"
    return f"{v:.12e}"


def _write_csv(path, header, columns, rows):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header)
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _write_density(path, header, density, tail, stride):
    i0, i1 = crop_bounds(density, tail, 0.0)
    d = crop(density, bounds=(i0, i1))
    z = d.z[::stride]
    p = d.pdf[::stride]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header)
        fh.write("z_m,density_per_m\n")
        fh.write("".join(f"{a:.12e},{b:.10e}\n" for a, b in zip(z, p)))
    return path


def _model_extra(model):
    return [(k, _fmt(v)) for k, v in model.describe().items()]


def run_simulate(cfg, out):
    """Detector densities at ``g0`` and ``g0 (1 -+ shift)`` plus snapshots."""
    model = build_model(cfg)
    head = _header(cfg, _model_extra(model))
    g0 = cfg.g
    files = []
    dens = {}
    for tag, g in (("g0", g0), ("g_minus", g0 * (1 - cfg.shift_rel)), ("g_plus", g0 * (1 + cfg.shift_rel))):
        dens[tag] = model.density(g)
        files.append(_write_density(
            os.path.join(out, f"density_{tag}.csv"),
            head + f"# g_m_s2 = {g!r}\n",
            dens[tag], cfg.csv_tail, cfg.csv_stride,
        ))
    lo, hi = crop_bounds(dens["g0"], cfg.csv_tail, 0.0)
    shifts = [
        (tag, cfg.g * (1 + sgn * cfg.shift_rel), pattern_shift(dens["g0"], dens[tag], lo, hi))
        for tag, sgn in (("g_minus", -1), ("g_plus", 1))
    ]
    del dens
    files.append(_write_csv(
        os.path.join(out, "fringe_shift.csv"), head,
        ["member", "g_m_s2", "shift_m"], shifts,
    ))
    for x in cfg.snapshot_x:
        field = model.snapshot(x)
        from .estimation import detection_density

        d = detection_density(field, g0)
        name = f"snapshot_x_{x * 1e3:09.3f}mm.csv"
        files.append(_write_density(
            os.path.join(out, name), head + f"# x_m = {x!r}\n", d, cfg.csv_tail, cfg.csv_stride,
        ))
    return files + [_manifest(cfg, out, model, files)]


def _manifest(cfg, out, model, files, extra=()):
    path = os.path.join(out, "manifest.txt")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(_header(cfg, _model_extra(model) + [("seed_mix", SEED_MIX)] + list(extra)))
        fh.write("# files\n")
        for f in files:
            fh.write(f"# {os.path.basename(f)}\n")
        fh.write("# configuration\n")
        cfg_text = serialize_config(cfg.with_values(output_dir="-"))
        fh.write(cfg_text)
    return path


def run_fisher(cfg, out, model=None):
    model = model or build_model(cfg)
    res = fisher_information(
        model, cfg.fisher_step_rel * cfg.g, sigma_det=cfg.sigma_det, tolerance=cfg.fisher_tolerance,
    )
    head = _header(cfg, _model_extra(model))
    files = [
        _write_csv(
            os.path.join(out, "fisher.csv"), head,
            ["fisher", "fisher_half_step", "richardson_rel_change", "delta_g", "sigma_det_m"],
            [(res.value, res.value_half_step, res.rel_change, res.delta_g, cfg.sigma_det)],
        ),
        _write_csv(
            os.path.join(out, "cramer_rao.csv"), head,
            ["N", "sigma_cr_rel"],
            [(n, cramer_rao(n, res.value)) for n in cfg.n_list],
        ),
    ]
    files.append(_manifest(cfg, out, model, files, [("fisher", _fmt(res.value))]))
    return files, res


def run_estimate(cfg, out):
    model = build_model(cfg)
    fisher = fisher_information(model, cfg.fisher_step_rel * cfg.g, tolerance=cfg.fisher_tolerance).value
    rep = monte_carlo_campaign(
        model, cfg.N, cfg.M, cfg.seed,
        fisher=fisher,
        window_sigmas=cfg.family_window_sigmas,
        points=cfg.family_points,
        reflection=cfg.reflection,
        tail=cfg.density_tail,
    )
    head = _header(cfg, _model_extra(model) + [("seed_mix", SEED_MIX)])
    centers, counts = rep.histogram(cfg.histogram_bins)
    files = [
        _write_csv(os.path.join(out, "histogram.csv"), head, ["g_hat_rel", "count"], zip(centers, counts)),
        _write_csv(
            os.path.join(out, "estimators.csv"), head, ["repetition", "g_hat"],
            enumerate(rep.estimators),
        ),
        _write_csv(
            os.path.join(out, "summary.csv"), head,
            ["mean", "sigma_g", "sigma_g_rel", "sigma_cr_rel", "fisher", "N", "N_effective", "M", "seed"],
            [(rep.mean, rep.sigma_g, rep.sigma_rel, rep.sigma_cr, rep.fisher, rep.N, rep.N_effective, rep.M, rep.seed)],
        ),
    ]
    files.append(_manifest(cfg, out, model, files))
    return files, rep


def run_scan(cfg, out, param, values):
    """Fisher information and Cramér-Rao bound for each value of one parameter."""
    from dataclasses import fields

    names = {f.name for f in fields(RunConfig)}
    if param not in names:
        raise ConfigurationError(f"unknown scan parameter {param!r}")
    rows, errors = [], []
    for v in values:
        try:
            c = cfg.with_values(**{param: v})
            model = build_model(c)
            res = fisher_information(model, c.fisher_step_rel * c.g, sigma_det=c.sigma_det, tolerance=c.fisher_tolerance)
            rows.append((v, res.value, cramer_rao(c.N, res.value)))
            del model
        except (QBounceError, MemoryError) as exc:
            rows.append((v, float("nan"), float("nan")))
            errors.append(f"{param} = {v!r}: {type(exc).__name__}: {exc}")
            print(f"scan point {param} = {v!r} failed: {exc}", file=sys.stderr)
    head = _header(cfg, [("scan_param", param), ("N", cfg.N)] + [("failed", e) for e in errors])
    path = _write_csv(os.path.join(out, "scan.csv"), head, ["param_value", "fisher", "sigma_cr_rel"], rows)
    return [path], rows


def _parse_values(cfg, param, text):
    if not text.strip():
        return []
    snippet = f"{param} = {text}"
    from .config import _convert, _FIELDS

    if param not in _FIELDS:
        raise ConfigurationError(f"unknown scan parameter {param!r}")
    kind = _FIELDS[param].metadata.get("kind", float)
    if kind in (float, int):
        return [_convert(param, s.strip(), None) for s in text.split(",") if s.strip()]
    raise ConfigurationError(f"parameter {param!r} cannot be scanned ({snippet})")


def _parser():
    p = argparse.ArgumentParser(prog="qbounce", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "detector densities and snapshots"),
        ("estimate", "Monte-Carlo maximum-likelihood campaign"),
        ("fisher", "Fisher information and Cramér-Rao bounds"),
        ("scan", "Fisher information versus one parameter"),
    ):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", metavar="PATH", help="key = value configuration file")
        s.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
        s.add_argument("--seed", type=int)
        s.add_argument("--N", type=int)
        s.add_argument("--M", type=int)
        if name == "scan":
            s.add_argument("--param", required=True, help="configuration key to vary")
            s.add_argument("--values", default="", help="comma-separated values, optional unit suffix")
    return p


def _configure(args):
    cfg = load_config(args.config) if args.config else parse_config("")
    updates = {k: getattr(args, k) for k in ("seed", "N", "M") if getattr(args, k) is not None}
    if args.out:
        updates["output_dir"] = args.out
    return cfg.with_values(**updates) if updates else cfg


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = _configure(args)
        out = cfg.output_dir
        os.makedirs(out, exist_ok=True)
        if args.command == "simulate":
            files = run_simulate(cfg, out)
        elif args.command == "estimate":
            files, rep = run_estimate(cfg, out)
            print(f"sigma_g/g0 = {rep.sigma_rel:.4g}  sigma_CR/g0 = {rep.sigma_cr:.4g}")
        elif args.command == "fisher":
            files, res = run_fisher(cfg, out)
            print(f"I_F = {res.value:.6g} (step-halving change {res.rel_change:.2%})")
        else:
            values = _parse_values(cfg, args.param, args.values)
            files, _ = run_scan(cfg, out, args.param, values)
        for f in files:
            print(f)
    except (ConfigurationError, DomainError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConvergenceError, QBounceError, ArithmeticError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

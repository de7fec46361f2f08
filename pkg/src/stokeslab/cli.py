"""Reproducible experiment runner: every operation as a subcommand.

Configuration comes from an optional JSON file plus command-line flags
(flags win).  Each run writes its artifacts into an output directory
together with a manifest recording the exact configuration, its hash, and
library versions.  Identical configuration and seed give bit-identical
data artifacts (result.json, CSV, field binaries); wall time lives only in
manifest.json.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time


def _flag_name(key: str) -> str:
    return "--" + key.replace("_", "-")


# subcommand -> {option: (type, default, help)}
_SCHEMAS = {
    "check-weight": {
        "alpha": (float, 2.0, "weight exponent a of <x>^a (or |x|^a)"),
        "q": (float, 2.0, "Lebesgue index"),
        "n": (int, 3, "dimension"),
        "form": (str, "inhomogeneous", "inhomogeneous (<x>^a) or homogeneous (|x|^a)"),
        "sides": (str, "", "comma-separated cube sides (default: 2^-3..2^10)"),
    },
    "admissible-range": {
        "q": (float, 2.0, "Lebesgue index"),
        "n": (int, 3, "dimension"),
    },
    "feasibility": {
        "n": (int, 5, "dimension"),
        "q1": (float, 4.0, "first integrability index, 1 < q1 < n"),
        "q2": (float, 3.0, "second integrability index, n/2 < q2 < n"),
        "scan": (int, 0, "if 1, sweep the whole (q1, q2) grid at --step instead"),
        "step": (float, 0.01, "grid step for --scan"),
    },
    "maximal": {
        "seed": (int, 20260809, "corpus seed"),
        "N": (int, 64, "samples per axis"),
        "L": (float, 16.0, "half-extent of the cube"),
        "q": (float, 2.0, "norm index for the operator-norm ratio"),
        "s": (float, 1.0, "weight exponent for the operator-norm ratio"),
        "radii": (int, 24, "number of ladder radii"),
    },
    "decay": {
        "p": (float, 2.0, "source integrability index"),
        "q": (float, 6.0, "target integrability index"),
        "s": (float, 0.0, "source weight exponent"),
        "s0": (float, 0.0, "target weight exponent"),
        "alpha_order": (int, 0, "derivative order, 0 or 1"),
        "tmin": (float, 1.0, "first ladder time"),
        "tmax": (float, 64.0, "last ladder time"),
        "points": (int, 13, "ladder size (geometric)"),
        "seed": (int, 20260809, "corpus seed"),
        "N": (int, 64, "samples per axis"),
        "L": (float, 16.0, "half-extent of the cube"),
    },
    "frac-integral": {
        "lam": (float, 1.0, "order of the fractional integral, in (0, n)"),
        "p": (float, 2.0, "source index of the two-weight ratio"),
        "q": (float, 6.0, "target index of the two-weight ratio"),
        "s0": (float, 0.5, "shared weight exponent"),
        "seed": (int, 20260809, "corpus seed"),
        "N": (int, 96, "samples per axis"),
        "L": (float, 5.0, "half-extent of the cube"),
    },
    "bogovskii-test": {
        "R": (float, 2.0, "inner radius of the annulus D_R"),
        "N": (int, 128, "samples per axis"),
        "L": (float, 8.0, "half-extent of the cube"),
    },
    "extend": {
        "R": (float, 1.0, "exterior radius: data solenoidal on |x| > R"),
        "N": (int, 128, "samples per axis"),
        "L": (float, 8.0, "half-extent of the cube"),
    },
    "solve-periodic": {
        "eps": (float, 0.01, "forcing amplitude"),
        "T": (float, 6.283185307179586, "period"),
        "M": (int, 16, "time nodes per period (even, >= 8)"),
        "N": (int, 32, "samples per axis"),
        "L": (float, 16.0, "half-extent of the cube"),
        "tol": (float, 1e-8, "fixed-point residual tolerance"),
        "max_iter": (int, 40, "iteration cap"),
        "tail_eps": (float, 1e-12, "history-sum tail threshold"),
        "linear": (int, 0, "if 1, drop the advection term"),
        "force": (str, "random", "forcing shape: random or single-mode"),
        "seed": (int, 20260809, "seed of the random forcing profile"),
    },
    "periodicity-check": {
        "run": (str, "", "directory written by solve-periodic"),
        "steps": (int, 256, "time steps of the verification march"),
    },
    "weighted-report": {
        "run": (str, "", "directory written by solve-periodic"),
        "q1": (float, 2.0, "velocity norm index"),
        "q2": (float, 2.0, "gradient norm index"),
        "s": (float, 1.0, "weight exponent"),
    },
}

_DESCRIPTIONS = {
    "check-weight": "sample the Muckenhoupt A_q cube product of a radial weight "
    "over a cube ladder and classify it as finite/diverging/inconclusive",
    "admissible-range": "open interval of s with <x>^(sq) in the A_q class",
    "feasibility": "window of weight exponents s compatible with the periodic "
    "small-data hypotheses, from the min-formula over derived indices",
    "maximal": "centered maximal function of a seeded field: weighted operator "
    "norm ratio and mollifier domination check",
    "decay": "weighted decay ladder of the projected heat evolution with "
    "log-log exponent fit and envelope compliance",
    "frac-integral": "fractional integral of a seeded field: two-weight norm "
    "ratio and the Gaussian point oracle",
    "bogovskii-test": "divergence-equation solve on the annulus: divergence "
    "defect, exact support containment, gradient-norm ratio",
    "extend": "solenoidal extension through cut-off plus annulus correction: "
    "global divergence defect and far-field equality",
    "solve-periodic": "fixed point of the periodic history-integral map by "
    "Picard iteration; writes node snapshots",
    "periodicity-check": "re-simulate one period with an exponential "
    "integrator and report the return defect",
    "weighted-report": "weighted solution norms against the forcing size for "
    "given exponents",
}


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="stokeslab",
        description="numerical laboratory for weighted semigroup decay and "
        "time-periodic flow fixed points",
    )
    ap.add_argument("--threads", type=int, default=0,
                    help="cap worker threads of the numeric backend")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, schema in _SCHEMAS.items():
        sp = sub.add_parser(name, help=_DESCRIPTIONS[name],
                            description=_DESCRIPTIONS[name])
        sp.add_argument("--config", type=str, default=None,
                        help="JSON file with option values (flags override)")
        sp.add_argument("--out", type=str, default=None,
                        help="output directory (default runs/<command>)")
        for key, (typ, default, hlp) in schema.items():
            sp.add_argument(_flag_name(key), type=typ, default=None,
                            help=f"{hlp} (default {default})")
    return ap


def _resolve_config(args) -> dict:
    schema = _SCHEMAS[args.command]
    cfg = {k: v for k, (_, v, _) in schema.items()}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        for k, v in file_cfg.items():
            if k not in schema:
                raise ConfigError(f"unknown option {k!r} for {args.command}")
            cfg[k] = schema[k][0](v)
    for k in schema:
        v = getattr(args, k)
        if v is not None:
            cfg[k] = v
    return cfg


class ConfigError(Exception):
    pass


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# command implementations (imports deferred so --threads can act first)
# ---------------------------------------------------------------------------


def _corpus_field(cfg, components=3):
    from .corpus import random_smooth_field
    from .grid import Grid

    grid = Grid(3, cfg["N"], cfg["L"])
    return grid, random_smooth_field(grid, cfg["seed"], components=components)


def _cmd_check_weight(cfg, outdir):
    from .weights import RadialWeight, aq_check

    w = RadialWeight(s=cfg["alpha"], form=cfg["form"])
    sides = None
    if cfg["sides"]:
        sides = [float(s) for s in cfg["sides"].split(",")]
    report = aq_check(w, cfg["q"], cube_sides=sides, n=cfg["n"])
    with open(os.path.join(outdir, "aq_report.json"), "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    return {
        "verdict": report.verdict,
        "sup_estimate": report.sup_estimate,
    }, 0


def _cmd_admissible_range(cfg, outdir):
    from .weights import admissible_range

    lo, hi = admissible_range(cfg["q"], cfg["n"])
    return {"lo": lo, "hi": hi}, 0


def _cmd_feasibility(cfg, outdir):
    from .weights import feasibility, feasibility_scan

    if cfg["scan"]:
        total, nonempty, widest = feasibility_scan(cfg["n"], cfg["step"])
        return {
            "n": cfg["n"],
            "grid_points": total,
            "nonempty": nonempty,
            "widest_window": widest,
        }, 0
    window = feasibility(cfg["n"], cfg["q1"], cfg["q2"])
    return {"lo": window.lo, "hi": window.hi, "empty": window.empty}, 0


def _cmd_maximal(cfg, outdir):
    import numpy as np

    from .grid import integrate, save_field
    from .weights import maximal_function, mollifier_sup

    grid, f = _corpus_field(cfg, components=1)
    ladder = np.geomspace(grid.h, grid.L, cfg["radii"])
    mf = maximal_function(f, ladder)
    ratio = integrate(mf, cfg["q"], cfg["s"]) / integrate(f, cfg["q"], cfg["s"])
    dominated = bool(np.all(mollifier_sup(f).data <= mf.data * (1 + 1e-12)))
    pointwise = bool(np.all(mf.data >= f.magnitude() - 1e-13))
    save_field(f, os.path.join(outdir, "input.field"))
    save_field(mf, os.path.join(outdir, "maximal.field"))
    return {
        "operator_norm_ratio": ratio,
        "mollifier_dominated": dominated,
        "dominates_input": pointwise,
    }, 0


def _cmd_decay(cfg, outdir):
    import numpy as np

    from .semigroup import decay_harness, predicted_exponent, write_decay_csv

    grid, u0 = _corpus_field(cfg)
    ladder = np.geomspace(cfg["tmin"], cfg["tmax"], cfg["points"])
    series, fit, compliance = decay_harness(
        u0, cfg["p"], cfg["q"], cfg["s"], cfg["s0"], cfg["alpha_order"], ladder
    )
    write_decay_csv(os.path.join(outdir, "decay.csv"), series, fit)
    return {
        "fitted_slope": fit.slope,
        "r_squared": fit.r_squared,
        "predicted_exponent": predicted_exponent(
            3, cfg["p"], cfg["q"], cfg["s"], cfg["s0"], cfg["alpha_order"]
        ),
        "bound_compliance": compliance,
    }, 0


def _cmd_frac_integral(cfg, outdir):
    import numpy as np

    from .grid import Field, integrate
    from .semigroup import fractional_integral

    grid, f = _corpus_field(cfg, components=1)
    lam = cfg["lam"]
    out = fractional_integral(f, lam)
    ratio = integrate(out, cfg["q"], cfg["s0"]) / integrate(f, cfg["p"], cfg["s0"])
    gauss = Field(grid, np.exp(-grid.radius_sq()))
    conv = fractional_integral(gauss, 2.0)
    center = (grid.N // 2,) * 3
    oracle_err = abs(conv.data[center] - 2.0 * np.pi) / (2.0 * np.pi)
    return {
        "two_weight_ratio": ratio,
        "gauss_center_rel_err": float(oracle_err),
    }, 0


def _bog_test_field(grid, R):
    import numpy as np

    from .grid import Field

    r = np.sqrt(grid.radius_sq())
    t = (r - (R + 0.5)) / 0.35
    ds = np.where(np.abs(t) < 1.0, -8.0 * t * (1.0 - t * t) ** 3 / 0.35, 0.0)
    return Field(grid, ds * grid.coords()[0] / np.maximum(r, 1e-300))


def _cmd_bogovskii_test(cfg, outdir):
    import numpy as np

    from .exterior import AnnulusSpec, bogovskii_apply, divergence_defect
    from .grid import Field, Grid, gradient, l2_norm, save_field

    grid = Grid(3, cfg["N"], cfg["L"])
    spec = AnnulusSpec(cfg["R"])
    f = _bog_test_field(grid, cfg["R"])
    B = bogovskii_apply(f, spec)
    defect = divergence_defect(B, f, spec)
    r = np.sqrt(grid.radius_sq())
    outside = (r <= spec.R) | (r >= spec.R + 1.0)
    grad_sq = sum(l2_norm(gradient(Field(grid, B.data[j]))) ** 2 for j in range(3))
    w12 = float(np.sqrt(l2_norm(B) ** 2 + grad_sq))
    save_field(B, os.path.join(outdir, "bogovskii.field"))
    return {
        "div_defect_rel": defect,
        "support_exact": bool(np.all(B.data[:, outside] == 0.0)),
        "w12_ratio": w12 / l2_norm(f),
    }, 0


def _extension_data(grid, R):
    import numpy as np

    from .grid import Field

    r = np.sqrt(grid.radius_sq())
    X, Y, Z = grid.coords()
    t = (r - (R + 2.0)) / 1.0
    prof = np.where(np.abs(t) < 1.0, (1.0 - t * t) ** 3, 0.0)
    A = np.stack([-Y * prof, X * prof, np.zeros_like(prof)])
    k = grid.wavenumbers()
    Ah = [np.fft.fftn(A[j]) for j in range(3)]
    u0 = np.stack(
        [
            np.fft.ifftn(1j * (k[1] * Ah[2] - k[2] * Ah[1])).real,
            np.fft.ifftn(1j * (k[2] * Ah[0] - k[0] * Ah[2])).real,
            np.fft.ifftn(1j * (k[0] * Ah[1] - k[1] * Ah[0])).real,
        ]
    )
    return Field(grid, u0)


def _cmd_extend(cfg, outdir):
    import numpy as np

    from .exterior import AnnulusSpec, solenoidal_extension
    from .grid import Grid, save_field

    grid = Grid(3, cfg["N"], cfg["L"])
    spec = AnnulusSpec(cfg["R"])
    u0 = _extension_data(grid, cfg["R"])
    v0, info = solenoidal_extension(u0, spec, report=True)
    r = np.sqrt(grid.radius_sq())
    far = r >= cfg["R"] + 3.0
    save_field(u0, os.path.join(outdir, "input.field"))
    save_field(v0, os.path.join(outdir, "extension.field"))
    return {
        "div_v0_rel": info["div_v0_rel"],
        "inner_defect": info["bog_defect"],
        "far_field_exact": bool(np.array_equal(v0.data[:, far], u0.data[:, far])),
    }, 0


def _make_force(cfg):
    from .periodic import random_solenoidal_force, single_mode_force

    if cfg["force"] == "single-mode":
        return single_mode_force(cfg["T"], amplitude=cfg["eps"])
    if cfg["force"] == "random":
        return random_solenoidal_force(cfg["T"], cfg["seed"], amplitude=cfg["eps"])
    raise ConfigError(f"unknown forcing shape {cfg['force']!r}")


def _cmd_solve_periodic(cfg, outdir):
    from .grid import Grid, save_field
    from .periodic import PicardConfig, picard_solve

    grid = Grid(3, cfg["N"], cfg["L"])
    force = _make_force(cfg)
    pc = PicardConfig(
        M=cfg["M"],
        tol=cfg["tol"],
        max_iter=cfg["max_iter"],
        tail_eps=cfg["tail_eps"],
        linear_only=bool(cfg["linear"]),
    )
    sol = picard_solve(force, pc, grid)
    for m in range(pc.M):
        save_field(sol.snapshot(m), os.path.join(outdir, f"node_{m:03d}.field"))
    return {
        "converged": sol.converged,
        "iterations": sol.iterations,
        "residual": float(sol.residuals.max()),
        "residual_history": [float(x) for x in sol.residual_history],
    }, 0 if sol.converged else 1


def _load_run(run_dir):
    import numpy as np

    from .grid import Grid, load_field
    from .periodic import PeriodicSolution, PicardConfig

    with open(os.path.join(run_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    cfg = manifest["config"]
    grid = Grid(3, cfg["N"], cfg["L"])
    snaps = []
    for m in range(cfg["M"]):
        snaps.append(load_field(os.path.join(run_dir, f"node_{m:03d}.field")).data)
    times = cfg["T"] * np.arange(cfg["M"]) / cfg["M"]
    sol = PeriodicSolution(
        grid=grid,
        T=cfg["T"],
        node_times=times,
        snapshots=np.stack(snaps),
        residuals=np.zeros(cfg["M"]),
        iterations=0,
        converged=True,
    )
    pc = PicardConfig(
        M=cfg["M"], tol=cfg["tol"], max_iter=cfg["max_iter"],
        tail_eps=cfg["tail_eps"], linear_only=bool(cfg["linear"]),
    )
    return sol, _make_force(cfg), pc


def _cmd_periodicity_check(cfg, outdir):
    from .periodic import periodicity_check

    if not cfg["run"]:
        raise ConfigError("periodicity-check needs --run pointing at a solve-periodic directory")
    sol, force, pc = _load_run(cfg["run"])
    defect = periodicity_check(sol, force, pc, steps=cfg["steps"])
    return {"defect": defect}, 0


def _cmd_weighted_report(cfg, outdir):
    from .periodic import weighted_report

    if not cfg["run"]:
        raise ConfigError("weighted-report needs --run pointing at a solve-periodic directory")
    sol, force, _ = _load_run(cfg["run"])
    rep = weighted_report(sol, force, cfg["q1"], cfg["q2"], cfg["s"])
    return rep, 0


_COMMANDS = {
    "check-weight": _cmd_check_weight,
    "admissible-range": _cmd_admissible_range,
    "feasibility": _cmd_feasibility,
    "maximal": _cmd_maximal,
    "decay": _cmd_decay,
    "frac-integral": _cmd_frac_integral,
    "bogovskii-test": _cmd_bogovskii_test,
    "extend": _cmd_extend,
    "solve-periodic": _cmd_solve_periodic,
    "periodicity-check": _cmd_periodicity_check,
    "weighted-report": _cmd_weighted_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads and args.threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(json.dumps({"error": "invalid-config", "detail": str(exc)}))
        return 2

    # follow-up checks accumulate inside the run directory they examine
    default_out = os.path.join("runs", args.command)
    if cfg.get("run"):
        default_out = os.path.join(cfg["run"], args.command)
    outdir = args.out or default_out
    os.makedirs(outdir, exist_ok=True)

    t0 = time.time()
    try:
        result, status = _COMMANDS[args.command](cfg, outdir)
    except ConfigError as exc:
        print(json.dumps({"error": "invalid-config", "detail": str(exc)}))
        return 2
    except (ValueError, RuntimeError) as exc:
        payload = {"error": "precondition-violation", "detail": str(exc)}
        print(json.dumps(payload))
        _write_json(os.path.join(outdir, "error.json"), payload)
        return 1
    wall = time.time() - t0

    _write_json(os.path.join(outdir, "result.json"), result)
    from . import __version__
    from .corpus import PRNG_ID
    import numpy as np
    import scipy

    manifest = {
        "command": args.command,
        "config": cfg,
        "config_sha256": _config_hash(cfg),
        "prng": PRNG_ID,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "stokeslab": __version__,
        },
        "wall_time_s": wall,
    }
    _write_json(os.path.join(outdir, "manifest.json"), manifest)
    print(json.dumps(result, sort_keys=True))
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point ``gammafilm``.

Exit codes: 0 success, 2 invalid configuration, 3 failed ``--assert``,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid, GammaFilmError, MissingArtifact
from .experiment import (PLOT_KINDS, ExperimentConfig, ExperimentSummary, build_recovery,
                         emit_plot_data, run_experiment, solve_profile, _default_potential, _dump)

EXIT_OK, EXIT_CONFIG, EXIT_ASSERT, EXIT_NUMERIC = 0, 2, 3, 4

_BASE_CONFIG = {
    "domain": {"kind": "rectangle", "nx1": 64, "nx2": 8, "nx3": 8},
    "regime": {"kind": "critical", "gamma": 1.0},
    "schedule": [[0.1, 0.1]],
    "geometry": {"kind": "layered", "alphas": [0.0]},
    "actions": [],
    "output_dir": "gammafilm-out",
}


def _parse_grid(text: str) -> list:
    try:
        vals = [int(v) for v in text.replace("x", ",").split(",") if v]
    except ValueError as exc:
        raise ConfigInvalid(f"--grid must be comma-separated integers, got {text!r}") from exc
    if not vals or min(vals) < 1:
        raise ConfigInvalid("--grid entries must be positive")
    return vals


def _load_doc(args) -> tuple[dict, Path | None]:
    if args.config:
        path = Path(args.config)
        try:
            return json.loads(path.read_text()), path.parent
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    return json.loads(json.dumps(_BASE_CONFIG)), None


def _apply_overrides(doc: dict, args, profile_grid: bool = False) -> dict:
    """Fold ``--eps/--h/--gamma/--lambda/--grid/--out`` into a config dict."""
    regime = dict(doc.get("regime", {}))
    if getattr(args, "gamma", None) is not None:
        regime.update(kind="critical", gamma=args.gamma)
    if getattr(args, "lam", None) is not None:
        regime.update(kind="supercritical", **{"lambda": args.lam})
    doc["regime"] = regime
    eps, h = getattr(args, "eps", None), getattr(args, "h", None)
    if eps is not None or h is not None:
        if eps is None or (h is None and regime.get("kind") != "critical"):
            raise ConfigInvalid("--eps needs --h outside the critical regime")
        h = h if h is not None else regime["gamma"] * eps
        doc["schedule"] = [[eps, h]]
    if getattr(args, "grid", None):
        g = _parse_grid(args.grid)
        if profile_grid:
            prof = dict(doc.get("profile", {}))
            if len(g) == 1:
                prof["n"] = g[0]
            else:
                prof["grid"] = g[:2]
            doc["profile"] = prof
        else:
            dom = dict(doc["domain"])
            for key, v in zip(("nx1", "nx2", "nx3"), g):
                dom[key] = v
            doc["domain"] = dom
    if getattr(args, "out", None):
        # a path typed on the command line is relative to the working directory
        doc["output_dir"] = str(Path(args.out).resolve())
    return doc


def _config(args, **kw) -> ExperimentConfig:
    doc, base = _load_doc(args)
    doc = _apply_overrides(doc, args, **kw)
    return ExperimentConfig.from_dict(doc, base_dir=base)


def _print_json(doc) -> None:
    print(json.dumps(doc, sort_keys=True, indent=1, default=lambda o: o.item()
                     if isinstance(o, np.generic) else o.tolist()))


# -- subcommands ---------------------------------------------------------------------------------

def _cmd_profile(kind):
    def run(args) -> int:
        doc, base = _load_doc(args)
        doc["regime"] = {"subcritical": {"kind": "subcritical"},
                         "critical": {"kind": "critical", "gamma": args.gamma or 1.0},
                         "supercritical": {"kind": "supercritical",
                                           "lambda": args.lam if args.lam is not None else 0.0},
                         }[kind]
        doc["schedule"] = [[1.0, {"subcritical": 0.5, "critical": doc["regime"].get("gamma", 1.0),
                                  "supercritical": 2.0}[kind]]]
        prof = dict(doc.get("profile", {}))
        if args.ell is not None:
            prof["ell"] = args.ell
        if getattr(args, "resolution", None) is not None:
            prof["resolution"] = args.resolution
        doc["profile"] = prof
        args.gamma = args.lam = None
        doc = _apply_overrides(doc, args, profile_grid=True)
        cfg = ExperimentConfig.from_dict(doc, base_dir=base)
        sol = solve_profile(cfg)
        _print_json(sol.to_json())
        if args.out:
            from .experiment import _save_profile

            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            _save_profile(sol, out)
            summ = ExperimentSummary(output_dir=out, K=sol.energy, rows=[], minimize_rows=[],
                                     comparison={}, profile=sol)
            emit_plot_data(summ, "profile")
        return EXIT_OK
    return run


def _spec_from(args):
    if args.config:
        doc, _ = _load_doc(args)
        if "potential" in doc:
            from .potential import PotentialSpec

            pot = doc["potential"]
            if "wells" in pot:
                return PotentialSpec.from_json(pot)
            return PotentialSpec.prototype(pot["A"], pot["B"], p=pot.get("p", 2.0))
    return _default_potential()


def _cmd_energy(args) -> int:
    from .energy import energy_3d
    from .grid import Field3

    u = Field3.load(args.field)
    rep = energy_3d(_spec_from(args), u, args.eps, args.h)
    _print_json(rep.to_json())
    return EXIT_OK


def _cmd_recover(args) -> int:
    from .energy import energy_3d

    cfg = _config(args)
    sol = solve_profile(cfg)
    eps, h = cfg.schedule[0]
    u = build_recovery(cfg, sol, eps, h)
    rep = energy_3d(cfg.potential, u, eps, h)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    u.save(out / "recovery.bin")
    doc = dict(rep.to_json(), K=sol.energy, eps=eps, h=h)
    _dump(out / "recovery.json", doc)
    _print_json(doc)
    return EXIT_OK


def _cmd_minimize(args) -> int:
    from .grid import Field3
    from .minimize import ConstraintSet, minimize_energy
    from .profiles import MinimizeOptions

    cfg = _config(args)
    eps, h = cfg.schedule[0]
    if args.field:
        u0 = Field3.load(args.field)
    else:
        u0 = build_recovery(cfg, solve_profile(cfg), eps, h)
    cons = ConstraintSet.lateral(u0, 2)
    res = minimize_energy(cfg.potential, u0, eps, h, cons,
                          MinimizeOptions(max_iters=args.max_iters, tol=args.tol, seed=cfg.seed))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(res.trace_csv())
    res.field.save(out / "minimized.bin")
    sys.stdout.write(res.trace_csv())
    return EXIT_OK


def _cmd_diagnostics(args) -> int:
    from .grid import Field3
    from .sharp_interface import convergence_diagnostic

    spec = _spec_from(args)
    if args.fields:
        if len(args.fields) != len(args.eps_list) or len(args.fields) != len(args.h_list):
            raise ConfigInvalid("--fields, --eps-list and --h-list must have equal lengths")
        sched = [(Field3.load(f), e, h) for f, e, h in zip(args.fields, args.eps_list, args.h_list)]
    else:
        cfg = _config(args)
        cfg.actions = ["recover"]
        summ = run_experiment(cfg)
        sched, spec = summ.fields, cfg.potential
    rep = convergence_diagnostic(spec, sched, rho=args.rho)
    _print_json(rep.to_json())
    return EXIT_OK


def _cmd_rigidity(args) -> int:
    from .grid import Field3
    from .rigidity import rigidity_diagnostic

    rep = rigidity_diagnostic(_spec_from(args), Field3.load(args.field), args.h, args.delta)
    _print_json(rep.to_json())
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.assert_ and not cfg.assertion:
        cfg.assertion = {"rel_gap": 0.10}
    summ = run_experiment(cfg, resume=args.resume)
    _print_json(summ.to_json())
    if args.assert_ and not summ.passed:
        print(f"assertion failed: {summ.assertion}", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def _cmd_plot(args) -> int:
    summ = ExperimentSummary.load(args.summary)
    for p in emit_plot_data(summ, args.kind, args.out):
        print(p)
    return EXIT_OK


# -- parser --------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gammafilm",
                                 description="Thin-film phase-transition laboratory.")
    ap.add_argument("--jobs", type=int, default=None,
                    help="worker cap (also read from GAMMA_FILM_THREADS)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, eps=True):
        p.add_argument("--config", help="experiment JSON file")
        p.add_argument("--grid", help="cell counts, comma separated")
        p.add_argument("--out", help="output directory")
        if eps:
            p.add_argument("--eps", type=float)
            p.add_argument("--h", type=float)
            p.add_argument("--gamma", type=float)
            p.add_argument("--lambda", dest="lam", type=float)

    for name, kind in (("profile-k0", "subcritical"), ("profile-kgamma", "critical"),
                       ("profile-kinf", "supercritical")):
        p = sub.add_parser(name, help=f"optimal profile ({kind} regime)")
        common(p, eps=False)
        p.add_argument("--ell", type=float)
        if kind == "critical":
            p.add_argument("--gamma", type=float, default=1.0)
        else:
            p.set_defaults(gamma=None)
        if kind == "supercritical":
            p.add_argument("--lambda", dest="lam", type=float, default=0.0)
            p.add_argument("--resolution", type=int)
        else:
            p.set_defaults(lam=None)
        p.set_defaults(func=_cmd_profile(kind))

    p = sub.add_parser("energy", help="energy of a field snapshot")
    p.add_argument("--config")
    p.add_argument("--field", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.set_defaults(func=_cmd_energy)

    p = sub.add_parser("recover", help="recovery field for one (eps, h)")
    common(p)
    p.set_defaults(func=_cmd_recover)

    p = sub.add_parser("minimize", help="relax a field with x1-faces clamped")
    common(p)
    p.add_argument("--field", help="initial snapshot (default: recovery field)")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=_cmd_minimize)

    p = sub.add_parser("diagnostics", help="compactness statistics along a schedule")
    common(p)
    p.add_argument("--fields", nargs="*")
    p.add_argument("--eps-list", nargs="*", type=float, default=[])
    p.add_argument("--h-list", nargs="*", type=float, default=[])
    p.add_argument("--rho", type=float)
    p.set_defaults(func=_cmd_diagnostics)

    p = sub.add_parser("rigidity", help="two-well rigidity report of a snapshot")
    p.add_argument("--config")
    p.add_argument("--field", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--delta", type=float, default=1e-2)
    p.set_defaults(func=_cmd_rigidity)

    p = sub.add_parser("sweep", help="run a full experiment configuration")
    common(p)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit 3 when the final relative gap exceeds the threshold")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="plot data from a finished sweep")
    p.add_argument("--summary", required=True, help="sweep output directory")
    p.add_argument("--kind", choices=PLOT_KINDS, default="convergence")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_plot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.jobs is not None:
        os.environ["GAMMA_FILM_THREADS"] = str(max(1, args.jobs))
    try:
        return args.func(args)
    except (ConfigInvalid, MissingArtifact, FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GammaFilmError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

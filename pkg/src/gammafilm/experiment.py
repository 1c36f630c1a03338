"""Experiment configuration, regime sweeps and plot-data output.

A run solves the optimal-profile problem of the configured regime once, then
walks the ``(eps, h)`` schedule: build the recovery field, optionally relax it
with :func:`gammafilm.minimize.minimize_energy`, and record energies next to
the sharp-interface prediction ``K * Per``. Every file written is a
deterministic function of the configuration.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energy import energy_3d
from .errors import ConfigInvalid, MissingArtifact
from .grid import Domain, Field3
from .minimize import ConstraintSet, minimize_energy
from .potential import PotentialSpec
from .profiles import (MinimizeOptions, ProfileSolution1D, ProfileSolution2D, solve_K0,
                       solve_Kgamma, solve_Kinfty)
from .recovery import (InterfaceGeometry, build_recovery_critical_layered,
                       build_recovery_critical_levelset, build_recovery_subcritical,
                       build_recovery_supercritical)
from .sharp_interface import classify_phases, convergence_diagnostic, perimeter

ACTIONS = ("profiles", "recover", "minimize", "diagnostics", "rigidity")
REGIMES = ("subcritical", "critical", "supercritical")
STEP_COLUMNS = ("eps", "h", "ratio", "bulk", "singular", "total", "perimeter", "K_estimate",
                "limit_prediction")
PLOT_KINDS = ("convergence", "profile", "density_slice")


def _default_potential() -> PotentialSpec:
    A = np.zeros((3, 3))
    A[2, 2] = 1.0
    return PotentialSpec.prototype(A, -A)


def _canonical(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), default=_plain)


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=1, default=_plain) + "\n")


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class ExperimentConfig:
    """Validated experiment description.

    ``regime`` is ``{"kind": ..., "gamma": ..., "lambda": ...}``;
    ``schedule`` a list of ``(eps, h)`` pairs; ``law`` the declared ratio law.
    Ratio laws are ``h = gamma * eps`` (critical), ``h = eps**q`` with
    ``q > 1`` (subcritical) and ``eps = h**q`` with ``q > 1`` (supercritical).
    """

    potential: PotentialSpec
    domain: Domain
    regime: dict
    schedule: list
    geometry: InterfaceGeometry
    actions: list
    output_dir: Path
    law: dict = field(default_factory=dict)
    seed: int = 0
    profile: dict = field(default_factory=dict)
    minimize: dict = field(default_factory=dict)
    rigidity: dict = field(default_factory=dict)
    assertion: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.validate()

    @property
    def kind(self) -> str:
        return self.regime["kind"]

    def validate(self) -> None:
        if self.kind not in REGIMES:
            raise ConfigInvalid(f"regime kind must be one of {REGIMES}")
        if self.kind == "critical" and not self.regime.get("gamma", 0) > 0:
            raise ConfigInvalid("critical regime needs gamma > 0")
        if self.kind == "supercritical" and self.regime.get("lambda") is None:
            raise ConfigInvalid("supercritical regime needs lambda")
        bad = [a for a in self.actions if a not in ACTIONS]
        if bad:
            raise ConfigInvalid(f"unknown actions {bad}")
        if not self.schedule:
            raise ConfigInvalid("schedule must be nonempty")
        eps = np.array([e for e, _ in self.schedule], dtype=float)
        hs = np.array([h for _, h in self.schedule], dtype=float)
        if np.any(eps <= 0) or np.any(hs <= 0):
            raise ConfigInvalid("eps and h must be positive")
        if np.any(np.diff(eps) >= 0):
            raise ConfigInvalid("schedule must be strictly decreasing in eps")
        ratio = hs / eps
        if self.kind == "critical":
            if not np.allclose(ratio, self.regime["gamma"], rtol=1e-9, atol=0):
                raise ConfigInvalid("critical schedule must satisfy h = gamma * eps")
        elif self.kind == "subcritical" and np.any(np.diff(ratio) >= 0):
            raise ConfigInvalid("subcritical schedule needs h/eps strictly decreasing")
        elif self.kind == "supercritical" and np.any(np.diff(ratio) <= 0):
            raise ConfigInvalid("supercritical schedule needs h/eps strictly increasing")

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        try:
            pot = doc.get("potential")
            if pot is None:
                spec = _default_potential()
            elif "wells" in pot:
                spec = PotentialSpec.from_json(pot)
            else:
                spec = PotentialSpec.prototype(pot["A"], pot["B"], p=pot.get("p", 2.0))
            dom = Domain.from_json(doc["domain"])
            regime = dict(doc["regime"])
            law = {}
            sched = doc["schedule"]
            if isinstance(sched, dict):
                law = {k: v for k, v in sched.items() if k != "eps"}
                schedule = [(float(e), _law_h(float(e), law, regime)) for e in sched["eps"]]
            else:
                schedule = [(float(e), float(h)) for e, h in sched]
            geom_doc = dict(doc.get("geometry", {"kind": "layered", "alphas": [0.0]}))
            geom = InterfaceGeometry.from_json(geom_doc, dom)
            out = Path(doc.get("output_dir", "gammafilm-out"))
            if base_dir is not None and not out.is_absolute():
                out = base_dir / out
            return cls(potential=spec, domain=dom, regime=regime, schedule=schedule,
                       geometry=geom, actions=list(doc.get("actions", [])), output_dir=out,
                       law=law, seed=int(doc.get("seed", 0)), profile=dict(doc.get("profile", {})),
                       minimize=dict(doc.get("minimize", {})),
                       rigidity=dict(doc.get("rigidity", {})),
                       assertion=dict(doc.get("assert", {})), raw=doc)
        except ConfigInvalid:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"invalid configuration: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc, base_dir=path.parent)

    def to_json(self) -> dict:
        return {"potential": self.potential.to_json(), "domain": self.domain.to_json(),
                "regime": self.regime, "schedule": [list(s) for s in self.schedule],
                "law": self.law, "geometry": self.geometry.to_json(), "actions": self.actions,
                "seed": self.seed, "profile": self.profile, "minimize": self.minimize,
                "rigidity": self.rigidity, "assert": self.assertion}

    def digest(self) -> str:
        return _sha(_canonical(self.to_json()).encode())


def _law_h(eps: float, law: dict, regime: dict) -> float:
    kind = law.get("law", regime["kind"])
    if kind == "critical":
        return float(law.get("c", regime.get("gamma", 1.0))) * eps
    q = float(law.get("q", 2.0))
    if q <= 1:
        raise ConfigInvalid("ratio-law exponent q must exceed 1")
    if kind == "subcritical":
        return eps ** q
    if kind == "supercritical":
        return eps ** (1.0 / q)
    raise ConfigInvalid(f"unknown ratio law {kind!r}")


@dataclass
class ExperimentSummary:
    """Result of :func:`run_experiment`, also stored as ``summary.json``."""

    output_dir: Path
    K: float | None
    rows: list
    minimize_rows: list
    comparison: dict
    diagnostics: dict | None = None
    rigidity: list | None = None
    assertion: dict | None = None
    skipped_steps: list = field(default_factory=list)
    profile: ProfileSolution1D | ProfileSolution2D | None = None
    spec: PotentialSpec | None = None
    fields: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.assertion is None or bool(self.assertion.get("passed"))

    def to_json(self) -> dict:
        return {"K": self.K, "steps": self.rows, "minimize_steps": self.minimize_rows,
                "comparison": self.comparison, "diagnostics": self.diagnostics,
                "rigidity": self.rigidity, "assertion": self.assertion}

    @classmethod
    def load(cls, output_dir) -> "ExperimentSummary":
        out = Path(output_dir)
        path = out / "summary.json"
        if not path.exists():
            raise MissingArtifact(f"no summary.json in {out}")
        doc = json.loads(path.read_text())
        cfg = json.loads((out / "config.json").read_text())
        spec = PotentialSpec.from_json(cfg["potential"])
        profile = _load_profile(out)
        fields = []
        for k in range(len(doc["steps"])):
            p = out / f"field_step{k}.bin"
            if p.exists():
                fields.append((Field3.load(p), doc["steps"][k]["eps"], doc["steps"][k]["h"]))
        return cls(output_dir=out, K=doc["K"], rows=doc["steps"],
                   minimize_rows=doc["minimize_steps"], comparison=doc["comparison"],
                   diagnostics=doc["diagnostics"], rigidity=doc["rigidity"],
                   assertion=doc["assertion"], profile=profile, spec=spec, fields=fields)


# -- profile persistence -------------------------------------------------------------------------

def _save_array(path: Path, arr) -> None:
    """Raw little-endian float64 (row-major) plus a JSON sidecar with the shape."""
    arr = np.asarray(arr, dtype=float)
    path.write_bytes(arr.astype("<f8").tobytes(order="C"))
    _dump(Path(str(path) + ".json"), {"shape": list(arr.shape), "layout": "node"})


def _load_array(path: Path) -> np.ndarray:
    side = json.loads(Path(str(path) + ".json").read_text())
    return np.frombuffer(path.read_bytes(), dtype="<f8").reshape(side["shape"]).copy()


_PROFILE_ARRAYS = {1: ("t", "phi1", "phi2"), 2: ("s1", "s2", "v")}


def _save_profile(sol, out: Path) -> None:
    doc = sol.to_json()
    doc["dim"] = 1 if isinstance(sol, ProfileSolution1D) else 2
    for name in _PROFILE_ARRAYS[doc["dim"]]:
        _save_array(out / f"profile_{name}.bin", getattr(sol, name))
    if doc["dim"] == 2:
        doc["c"] = sol.c.tolist()
        doc["periodic"] = sol.periodic
    _dump(out / "profile.json", doc)


def _load_profile(out: Path):
    path = out / "profile.json"
    if not path.exists():
        return None
    doc = json.loads(path.read_text())
    arr = {k: _load_array(out / f"profile_{k}.bin") for k in _PROFILE_ARRAYS[doc["dim"]]}
    if doc["dim"] == 1:
        return ProfileSolution1D(ell=doc["ell"], n=len(arr["t"]) - 1, energy=doc["K"],
                                 optimality=doc["optimality"], converged=doc["converged"],
                                 ell_drop=doc["ell_drop"], **arr)
    return ProfileSolution2D(kind=doc["kind"], ell=doc["ell"], gamma=doc["gamma"],
                             lam=doc["lambda"], grid=tuple(doc["grid"]), c=np.asarray(doc["c"]),
                             energy=doc["K"], periodic=doc["periodic"],
                             clamp_width=doc["clamp_width"], optimality=doc["optimality"],
                             converged=doc["converged"], **arr)


# -- running -------------------------------------------------------------------------------------

def solve_profile(cfg: ExperimentConfig):
    """Optimal profile of the configured regime."""
    opts = MinimizeOptions(seed=cfg.seed)
    p = cfg.profile
    if cfg.kind == "subcritical":
        return solve_K0(cfg.potential, ell=p.get("ell", 8.0), n=p.get("n", 512), opts=opts)
    if cfg.kind == "critical":
        return solve_Kgamma(cfg.potential, cfg.regime["gamma"], ell=p.get("ell", 8.0),
                            grid=tuple(p.get("grid", (128, 16))), opts=opts)
    return solve_Kinfty(cfg.potential, cfg.regime["lambda"], ell=p.get("ell"),
                        grid=tuple(p.get("grid", (128, 8))), opts=opts,
                        resolution=p.get("resolution", 32))


def build_recovery(cfg: ExperimentConfig, profile, eps: float, h: float) -> Field3:
    """Recovery field of the configured regime and geometry at ``(eps, h)``."""
    geom = cfg.geometry
    if cfg.kind == "subcritical":
        return build_recovery_subcritical(geom, profile, eps, h)
    if cfg.kind == "critical":
        if geom.kind == "layered":
            return build_recovery_critical_layered(geom, profile, eps, cfg.regime["gamma"])
        return build_recovery_critical_levelset(geom, profile, eps, cfg.regime["gamma"])
    return build_recovery_supercritical(geom, profile, eps, h, cfg.regime["lambda"])


def _step_row(cfg, K, u, eps, h) -> dict:
    rep = energy_3d(cfg.potential, u, eps, h)
    per = perimeter(classify_phases(cfg.potential, u, h), "polygonal")
    return {"eps": eps, "h": h, "ratio": h / eps, "bulk": rep.bulk, "singular": rep.singular,
            "total": rep.total, "perimeter": per,
            "K_estimate": rep.total / per if per > 0 else None,
            "limit_prediction": K * per if K is not None else None}


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STEP_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in STEP_COLUMNS])
    return buf.getvalue()


def _extrapolate(rows) -> float | None:
    """Linear extrapolation of ``total`` to ``eps = 0`` from the last two steps."""
    if len(rows) < 2:
        return None
    (e0, t0), (e1, t1) = [(r["eps"], r["total"]) for r in rows[-2:]]
    return t1 - e1 * (t0 - t1) / (e0 - e1)


def _comparison(rows, K) -> dict:
    if not rows or K is None:
        return {}
    last = rows[-1]
    pred = last["limit_prediction"]
    ext = _extrapolate(rows)
    return {"total_last": last["total"], "limit_prediction": pred,
            "rel_gap_last": abs(last["total"] - pred) / pred if pred else None,
            "extrapolated": ext,
            "rel_gap_extrapolated": abs(ext - pred) / pred if (ext is not None and pred) else None}


def _manifest(out: Path) -> dict:
    path = out / "manifest.json"
    return json.loads(path.read_text()) if path.exists() else {}


def run_experiment(cfg: ExperimentConfig, resume: bool = False) -> ExperimentSummary:
    """Execute the configured actions and write all artifacts to ``cfg.output_dir``.

    Files: ``config.json``, ``profile.json`` (plus ``profile_*.bin`` arrays),
    ``steps.csv``, ``minimize_steps.csv``, ``trace_step{k}.csv``,
    ``field_step{k}.bin`` snapshots, ``diagnostics.json``, ``rigidity.json``,
    ``summary.json`` and ``manifest.json``. With ``resume`` a step whose
    manifest entry matches the configuration digest and whose files still
    hash to the recorded values is loaded instead of recomputed.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    _dump(out / "config.json", cfg.to_json())
    old = _manifest(out) if resume else {}
    if old.get("config") != digest:
        old = {}
    done = old.get("steps", {})
    manifest = {"config": digest, "steps": {}}

    acts = set(cfg.actions)
    need_fields = bool(acts & {"recover", "minimize", "diagnostics", "rigidity"})
    need_profile = "profiles" in acts or need_fields
    summary = ExperimentSummary(output_dir=out, K=None, rows=[], minimize_rows=[],
                                comparison={}, spec=cfg.potential)
    if not need_profile:
        _dump(out / "summary.json", summary.to_json())
        _dump(out / "manifest.json", manifest)
        return summary

    def step_files(k):
        names = [f"field_step{k}.bin", f"field_step{k}.bin.json", f"step{k}.json"]
        if "minimize" in acts:
            names.append(f"trace_step{k}.csv")
        return names

    def reusable(k):
        entry = done.get(str(k))
        if not entry:
            return False
        for name in step_files(k):
            p = out / name
            if not p.exists() or _sha(p.read_bytes()) != entry.get(name):
                return False
        return True

    profile = None
    if resume and (out / "profile.json").exists() and old:
        profile_ok = all(reusable(k) for k in range(len(cfg.schedule)))
        if profile_ok:
            profile = _load_profile(out)
    if profile is None:
        profile = solve_profile(cfg)
        _save_profile(profile, out)
    K = float(profile.energy)
    summary.K, summary.profile = K, profile

    fields = []
    if need_fields:
        for k, (eps, h) in enumerate(cfg.schedule):
            if resume and reusable(k):
                doc = json.loads((out / f"step{k}.json").read_text())
                u = Field3.load(out / f"field_step{k}.bin")
                summary.skipped_steps.append(k)
            else:
                doc = {}
                u = build_recovery(cfg, profile, eps, h)
                doc["recover"] = _step_row(cfg, K, u, eps, h)
                if "minimize" in acts:
                    mo = cfg.minimize
                    opts = MinimizeOptions(max_iters=int(mo.get("max_iters", 200)),
                                           tol=mo.get("tol"), seed=cfg.seed,
                                           step_rule=mo.get("step_rule", "bb_spectral"))
                    cons = ConstraintSet.lateral(u, int(mo.get("layers", 2)),
                                                 tuple(mo.get("axes", (0,))))
                    res = minimize_energy(cfg.potential, u, eps, h, cons, opts)
                    u = res.field
                    doc["minimize"] = _step_row(cfg, K, u, eps, h)
                    doc["minimize_flags"] = res.flags
                    (out / f"trace_step{k}.csv").write_text(res.trace_csv())
                u.save(out / f"field_step{k}.bin")
                _dump(out / f"step{k}.json", doc)
            summary.rows.append(doc["recover"])
            if "minimize" in doc:
                summary.minimize_rows.append(doc["minimize"])
            manifest["steps"][str(k)] = {n: _sha((out / n).read_bytes()) for n in step_files(k)}
            fields.append((u, eps, h))
    summary.fields = fields

    (out / "steps.csv").write_text(rows_csv(summary.rows))
    if summary.minimize_rows:
        (out / "minimize_steps.csv").write_text(rows_csv(summary.minimize_rows))
    final_rows = summary.minimize_rows or summary.rows
    summary.comparison = _comparison(final_rows, K)

    if "diagnostics" in acts:
        rep = convergence_diagnostic(cfg.potential, fields)
        summary.diagnostics = rep.to_json()
        _dump(out / "diagnostics.json", summary.diagnostics)
    if "rigidity" in acts:
        from .rigidity import rigidity_diagnostic

        delta = float(cfg.rigidity.get("delta", 1e-2))
        summary.rigidity = [dict(rigidity_diagnostic(cfg.potential, u, h, delta).to_json(),
                                 eps=eps, h=h) for u, eps, h in fields]
        _dump(out / "rigidity.json", summary.rigidity)
    if cfg.assertion:
        thr = float(cfg.assertion.get("rel_gap", 0.10))
        gap = summary.comparison.get("rel_gap_last")
        summary.assertion = {"rel_gap": gap, "threshold": thr,
                             "passed": gap is not None and gap <= thr}
    _dump(out / "summary.json", summary.to_json())
    _dump(out / "manifest.json", manifest)
    return summary


# -- plot data -----------------------------------------------------------------------------------

def _svg_lines(series, width=480, height=320, xlabel="", ylabel="", logx=False) -> str:
    """Minimal SVG line chart; ``series`` is a list of ``(xs, ys, colour)``."""
    xs_all = np.concatenate([np.asarray(s[0], float) for s in series])
    ys_all = np.concatenate([np.asarray(s[1], float) for s in series])
    if logx:
        xs_all = np.log10(xs_all)
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = float(ys_all.min()), float(ys_all.max())
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 40

    def px(x):
        x = np.log10(x) if logx else x
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width // 2}" y="{height - 8}" text-anchor="middle" '
             f'font-size="12">{xlabel}</text>',
             f'<text x="12" y="{height // 2}" font-size="12">{ylabel}</text>']
    for xs, ys, colour in series:
        pts = " ".join(f"{px(x):.3f},{py(y):.3f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _svg_heatmap(values: np.ndarray, cell=4) -> str:
    v = np.asarray(values, float)
    lo, hi = float(np.nanmin(v)), float(np.nanmax(v))
    span = hi - lo if hi > lo else 1.0
    n1, n2 = v.shape
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{n1 * cell}" height="{n2 * cell}">']
    for i in range(n1):
        for j in range(n2):
            g = int(round(255 * (1 - (v[i, j] - lo) / span)))
            parts.append(f'<rect x="{i * cell}" y="{(n2 - 1 - j) * cell}" width="{cell}" '
                         f'height="{cell}" fill="rgb({g},{g},{g})"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _table(header, cols) -> str:
    lines = ["\t".join(header)]
    for row in zip(*cols):
        lines.append("\t".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def emit_plot_data(summary: ExperimentSummary, kind: str, out_dir=None) -> list:
    """Write a plain-text table and an SVG for ``kind``; return the paths.

    ``convergence`` tabulates ``(eps, total)`` with the ``K * Per`` asymptote,
    ``profile`` the optimal profile, ``density_slice`` the energy density of
    the last field on the cell layer nearest ``x3 = 0``.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"kind must be one of {PLOT_KINDS}")
    out = Path(out_dir or summary.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "convergence":
        rows = summary.minimize_rows or summary.rows
        if not rows:
            raise MissingArtifact("summary has no schedule steps")
        eps = [r["eps"] for r in rows]
        tot = [r["total"] for r in rows]
        pred = [r["limit_prediction"] for r in rows]
        table = _table(("eps", "total"), (eps, tot))
        series = [(eps, tot, "black")]
        if all(p is not None for p in pred):
            series.append((eps, pred, "red"))
        svg = _svg_lines(series, xlabel="eps", ylabel="energy", logx=True)
    elif kind == "profile":
        sol = summary.profile
        if sol is None:
            raise MissingArtifact("summary has no profile")
        if isinstance(sol, ProfileSolution1D):
            cols = [sol.t] + [sol.phi1[:, i] for i in range(3)] + [sol.phi2[:, i] for i in range(3)]
            header = ("t", "phi1_1", "phi1_2", "phi1_3", "phi2_1", "phi2_2", "phi2_3")
            x = sol.t
        else:
            mid = sol.v[:, sol.v.shape[1] // 2, :]
            cols = [sol.s1] + [mid[:, i] for i in range(3)]
            header = ("s", "v_1", "v_2", "v_3")
            x = sol.s1
        table = _table(header, cols)
        colours = ("black", "red", "blue", "green", "orange", "purple")
        svg = _svg_lines([(x, c, colours[i % 6]) for i, c in enumerate(cols[1:])],
                         xlabel=header[0], ylabel="profile")
    else:
        if not summary.fields or summary.spec is None:
            raise MissingArtifact("summary has no field snapshot")
        u, eps, h = summary.fields[-1]
        dens = energy_3d(summary.spec, u, eps, h, density=True).density
        k = u.domain.nx3 // 2
        sl = dens[:, :, k]
        X1, X2 = np.meshgrid(u.domain.centers(0), u.domain.centers(1), indexing="ij")
        table = _table(("x1", "x2", "density"), (X1.ravel(), X2.ravel(), sl.ravel()))
        svg = _svg_heatmap(sl)
    tpath, spath = out / f"{kind}.tsv", out / f"{kind}.svg"
    tpath.write_text(table)
    spath.write_text(svg)
    return [tpath, spath]

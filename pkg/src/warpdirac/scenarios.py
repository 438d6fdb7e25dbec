"""Scenario configuration, presets and the run pipeline (CSV, JSON and SVG outputs)."""

from __future__ import annotations

import json
import math
import os
import shutil
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, evolution
from .evolution import Backend, PropagatorConfig
from .hamiltonians import Frame, HamiltonianSpec
from .operators import FockSpace
from .spacetime import AlcubierreProfile, DiracParams, IonParams, dirac_to_ion, ion_to_dirac
from .states import SPIN_DOWN, SPIN_PLUS, SPIN_UP, InitialStateSpec, MomentumGrid, build_initial_state
from .svg import Series, line_plot

TWO_PI = 2 * math.pi
# experimental controls of the lightcone and Zitterbewegung figures
TRAP_NU = TWO_PI * 5.9e6
CARRIER_OMEGA0 = TWO_PI * 1.46e3
PARAMETRIC_OMEGA_P = TWO_PI * 50e3
QUBIT_OMEGA0 = TWO_PI * 1.789e9
MASSIVE_DELTA = -TWO_PI * 6.1e3
WARP_TRAJECTORY = (0.0, 0.56, 1346.0, -642377.0)
RUN_TIME = 1.5e-3

NAMED_SPINS = {"up": SPIN_UP, "down": SPIN_DOWN, "plus": SPIN_PLUS}
CSV_COLUMNS = ("t_s", "mean_x_over_c_s", "var_x", "sx", "sy", "sz", "norm")

# acceptance thresholds used by --verify
VERIFY_MEAN_REL = 1e-6
VERIFY_SPREAD_ABS = 1e-5
VERIFY_DENSITY_ABS = 1e-4
VERIFY_EFFECTIVE_REL = 1e-8
VERIFY_RWA_REL = 0.05


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(f"{msg}{where}")


class ValidationError(ConfigError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.violations))


class VerificationFailed(ArithmeticError):
    pass


@dataclass(frozen=True)
class OutputSpec:
    trajectory: bool = True
    variance: bool = True
    snapshots: tuple = ()
    spectrum: bool = False
    detrend_degree: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    frame: Frame
    propagator: PropagatorConfig
    states: tuple  # ((label, InitialStateSpec), ...)
    dirac: Optional[DiracParams] = None
    ion: Optional[IonParams] = None
    n_max: int = 512
    outputs: OutputSpec = field(default_factory=OutputSpec)
    nmax_sweep: tuple = ()
    compare_effective: bool = False
    drive: Optional[dict] = None  # trap controls realising a Dirac-frame scenario

    def ion_equivalent(self) -> IonParams:
        """Trapped-ion controls that realise the Dirac parameters of this scenario."""
        if self.ion is not None:
            return self.ion
        d = dict(self.drive or {})
        nu = d.pop("nu", TRAP_NU)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return dirac_to_ion(self.dirac, nu, **d)

    def with_overrides(self, backend=None, n_max=None, dt=None, t_max=None) -> "ScenarioConfig":
        doc = config_to_dict(self)
        prop = doc["propagator"]
        if backend is not None:
            prop["backend"] = backend
        if dt is not None:
            prop["dt"] = dt
        if t_max is not None:
            prop["t_max"] = t_max
            prop["sample_interval"] = min(prop["sample_interval"], t_max)
            doc["outputs"]["snapshots"] = [s for s in doc["outputs"]["snapshots"] if s <= t_max]
        if n_max is not None:
            doc["n_max"] = n_max
            doc["nmax_sweep"] = []
        return config_from_dict(doc)


# ---------------------------------------------------------------- serialisation

def _profile_to_doc(p: Optional[AlcubierreProfile]):
    return None if p is None else p.to_dict()


def config_to_dict(cfg: ScenarioConfig) -> dict:
    doc = {
        "name": cfg.name,
        "frame": cfg.frame.value,
        "n_max": cfg.n_max,
        "nmax_sweep": list(cfg.nmax_sweep),
        "compare_effective": cfg.compare_effective,
        "propagator": {
            "backend": cfg.propagator.backend.value,
            "t_max": cfg.propagator.t_max,
            "sample_interval": cfg.propagator.sample_interval,
            "dt": cfg.propagator.dt,
            "tolerance": cfg.propagator.tolerance,
            "scheme": cfg.propagator.scheme,
        },
        "initial_state": {
            "center_X": cfg.states[0][1].center_X,
            "width": cfg.states[0][1].width,
            "spins": [_spin_to_doc(label, s.spin) for label, s in cfg.states],
        },
        "outputs": {
            "trajectory": cfg.outputs.trajectory,
            "variance": cfg.outputs.variance,
            "snapshots": list(cfg.outputs.snapshots),
            "spectrum": cfg.outputs.spectrum,
            "detrend_degree": cfg.outputs.detrend_degree,
        },
    }
    if cfg.dirac is not None:
        doc["dirac"] = {
            "c_sim": cfg.dirac.c_sim,
            "mass_m": cfg.dirac.mass_m,
            "A": cfg.dirac.A,
            "profile": _profile_to_doc(cfg.dirac.profile),
        }
    if cfg.ion is not None:
        i = cfg.ion
        doc["ion"] = {
            "nu": i.nu, "omega0": i.omega0, "Omega0": i.Omega0, "Omega_p": i.Omega_p,
            "Delta": i.Delta, "eta": i.eta, "profile": _profile_to_doc(i.profile),
        }
    if cfg.drive is not None:
        doc["drive"] = dict(cfg.drive)
    return doc


def _spin_to_doc(label, spin):
    for name, vec in NAMED_SPINS.items():
        if label == name and np.allclose(spin, vec, atol=1e-15):
            return name
    return {"label": label, "amplitudes": [[complex(c).real, complex(c).imag] for c in spin]}


KNOWN_KEYS = {
    "": {"name", "frame", "n_max", "nmax_sweep", "compare_effective", "propagator",
         "initial_state", "outputs", "dirac", "ion", "drive", "description"},
    "propagator": {"backend", "t_max", "sample_interval", "dt", "tolerance", "scheme"},
    "initial_state": {"center_X", "width", "spins"},
    "outputs": {"trajectory", "variance", "snapshots", "spectrum", "detrend_degree"},
    "dirac": {"c_sim", "mass_m", "A", "profile"},
    "ion": {"nu", "omega0", "Omega0", "Omega_p", "Delta", "eta", "profile"},
    "drive": {"nu", "Omega_p", "eta", "omega0"},
}


def _parse_spin(item, index, errors):
    if isinstance(item, str):
        if item not in NAMED_SPINS:
            errors.append(f"initial_state.spins[{index}]: unknown spin {item!r} (use up, down, plus)")
            return None
        return item, NAMED_SPINS[item]
    if isinstance(item, dict):
        label = item.get("label", f"s{index}")
        amps = item.get("amplitudes")
    else:
        label, amps = f"s{index}", item
    try:
        vec = [complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a) for a in amps]
    except (TypeError, ValueError, IndexError):
        errors.append(f"initial_state.spins[{index}]: amplitudes must be numbers or [re, im] pairs")
        return None
    if len(vec) != 2:
        errors.append(f"initial_state.spins[{index}]: need exactly two amplitudes")
        return None
    return str(label), tuple(vec)


def _build(errors, where, fn):
    try:
        return fn()
    except (ValueError, TypeError, KeyError) as exc:
        errors.append(f"{where}: {exc}")
        return None


def _profile(doc):
    if doc is None:
        return None
    if not isinstance(doc, dict):
        raise ValueError("profile must be an object")
    return AlcubierreProfile.from_dict(doc)


def config_from_dict(doc: dict, warn_unknown: bool = True) -> ScenarioConfig:
    """Validate a parsed document; every violation is collected before raising."""
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise ValidationError(["top level: expected an object"])
    if warn_unknown:
        for section, keys in KNOWN_KEYS.items():
            sub = doc if section == "" else doc.get(section)
            if isinstance(sub, dict):
                for k in sub:
                    if k not in keys:
                        path = f"{section}.{k}" if section else k
                        warnings.warn(f"unknown config key {path!r} ignored", stacklevel=3)

    name = doc.get("name")
    if not isinstance(name, str) or not name:
        errors.append("name: required non-empty string")
    elif not all(c.isalnum() or c in "-_." for c in name):
        errors.append("name: only letters, digits, '-', '_' and '.' are allowed")

    frame = None
    if "frame" not in doc:
        errors.append("frame: required")
    else:
        frame = _build(errors, "frame", lambda: Frame(doc["frame"]))

    dirac = ion = None
    has_d, has_i = "dirac" in doc, "ion" in doc
    if frame is not None:
        if frame.is_dirac:
            if not has_d:
                errors.append(f"dirac: parameter block required for frame {frame.value}")
            if has_i:
                errors.append(f"ion: not allowed for frame {frame.value}")
        else:
            if not has_i:
                errors.append(f"ion: parameter block required for frame {frame.value}")
            if has_d:
                errors.append(f"dirac: not allowed for frame {frame.value}")
    if has_d and isinstance(doc["dirac"], dict):
        d = doc["dirac"]
        if "c_sim" not in d:
            errors.append("dirac.c_sim: required")
        else:
            dirac = _build(errors, "dirac", lambda: DiracParams(
                c_sim=float(d["c_sim"]), mass_m=float(d.get("mass_m", 0.0)), A=float(d.get("A", 1.0)),
                profile=_profile(d.get("profile")) or AlcubierreProfile()))
    elif has_d:
        errors.append("dirac: expected an object")
    if has_i and isinstance(doc["ion"], dict):
        d = doc["ion"]
        missing = [k for k in ("nu", "omega0", "Omega0") if k not in d]
        for k in missing:
            errors.append(f"ion.{k}: required")
        if not missing:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                ion = _build(errors, "ion", lambda: IonParams(
                    nu=float(d["nu"]), omega0=float(d["omega0"]), Omega0=float(d["Omega0"]),
                    Omega_p=float(d.get("Omega_p", 0.0)), Delta=float(d.get("Delta", 0.0)),
                    eta=float(d.get("eta", 0.0)), profile=_profile(d.get("profile"))))
    elif has_i:
        errors.append("ion: expected an object")

    prop = None
    p = doc.get("propagator")
    if not isinstance(p, dict):
        errors.append("propagator: required object")
    else:
        for k in ("t_max", "sample_interval"):
            if k not in p:
                errors.append(f"propagator.{k}: required")
        if "t_max" in p and "sample_interval" in p:
            prop = _build(errors, "propagator", lambda: PropagatorConfig(
                t_max=float(p["t_max"]), sample_interval=float(p["sample_interval"]),
                backend=p.get("backend", "exact"), dt=None if p.get("dt") is None else float(p["dt"]),
                tolerance=float(p.get("tolerance", 1e-8)), scheme=p.get("scheme", "midpoint")))
    if prop is not None:
        ratio = prop.t_max / prop.sample_interval
        if abs(ratio - round(ratio)) > 1e-6 * max(ratio, 1):
            errors.append("propagator.sample_interval: must divide t_max")
        if frame is not None and not frame.is_dirac and prop.backend is not Backend.TIME_ORDERED:
            errors.append(f"propagator.backend: {frame.value} needs the timeordered backend")
        if frame is not None and prop.backend is Backend.MOMENTUM_ORACLE and frame is not Frame.DIRAC_CHIRAL:
            errors.append("propagator.backend: the momentum oracle runs in the dirac_chiral frame")

    states = []
    s = doc.get("initial_state", {})
    if not isinstance(s, dict):
        errors.append("initial_state: expected an object")
        s = {}
    spins = s.get("spins", ["up"])
    if not isinstance(spins, list) or not spins:
        errors.append("initial_state.spins: non-empty list required")
        spins = []
    labels = set()
    for i, item in enumerate(spins):
        parsed = _parse_spin(item, i, errors)
        if parsed is None:
            continue
        label, vec = parsed
        if label in labels:
            errors.append(f"initial_state.spins[{i}]: duplicate label {label!r}")
        labels.add(label)
        spec = _build(errors, f"initial_state.spins[{i}]", lambda: InitialStateSpec(
            float(s.get("center_X", 0.0)), float(s.get("width", 1.0)), vec))
        if spec is not None:
            states.append((label, spec))

    n_max = doc.get("n_max", 512)
    if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 2:
        errors.append("n_max: integer >= 2 required")
    sweep = doc.get("nmax_sweep", [])
    if not isinstance(sweep, list) or any(not isinstance(n, int) or n < 2 for n in sweep):
        errors.append("nmax_sweep: list of integers >= 2 required")
        sweep = []

    o = doc.get("outputs", {})
    outputs = None
    if not isinstance(o, dict):
        errors.append("outputs: expected an object")
    else:
        snaps = o.get("snapshots", [])
        if not isinstance(snaps, list) or any(not isinstance(t, (int, float)) for t in snaps):
            errors.append("outputs.snapshots: list of times required")
            snaps = []
        if prop is not None:
            for t in snaps:
                if not 0 <= t <= prop.t_max * (1 + 1e-12):
                    errors.append(f"outputs.snapshots: time {t} outside [0, t_max={prop.t_max}]")
        deg = o.get("detrend_degree", 1)
        if not isinstance(deg, int) or deg < 1:
            errors.append("outputs.detrend_degree: integer >= 1 required")
        outputs = OutputSpec(bool(o.get("trajectory", True)), bool(o.get("variance", True)),
                             tuple(float(t) for t in snaps), bool(o.get("spectrum", False)), deg)

    drive = doc.get("drive")
    if drive is not None and not isinstance(drive, dict):
        errors.append("drive: expected an object")
    compare = bool(doc.get("compare_effective", False))
    if compare and frame is not None and frame is not Frame.ION_LAB:
        errors.append("compare_effective: only meaningful for the ion_lab frame")

    if errors:
        raise ValidationError(errors)
    return ScenarioConfig(
        name=name, frame=frame, propagator=prop, states=tuple(states), dirac=dirac, ion=ion,
        n_max=n_max, outputs=outputs, nmax_sweep=tuple(sweep), compare_effective=compare,
        drive=None if drive is None else dict(drive),
    )


def load_config(path) -> ScenarioConfig:
    """Parse and validate a JSON scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return config_from_dict(doc)


# ---------------------------------------------------------------- presets

def _figure_dirac(vs=None, Delta=0.0, profile=None) -> DiracParams:
    eta = 0.0 if not vs else vs * CARRIER_OMEGA0 / (4 * PARAMETRIC_OMEGA_P)
    ion = IonParams(nu=TRAP_NU, omega0=QUBIT_OMEGA0, Omega0=CARRIER_OMEGA0,
                    Omega_p=PARAMETRIC_OMEGA_P if vs else 0.0, Delta=Delta, eta=eta)
    d = ion_to_dirac(ion)
    return d.with_profile(profile) if profile is not None else d


def _three_spins():
    return tuple((k, InitialStateSpec(spin=v)) for k, v in NAMED_SPINS.items())


def _figure_drive(vs):
    if vs:
        return {"nu": TRAP_NU, "Omega_p": PARAMETRIC_OMEGA_P, "omega0": QUBIT_OMEGA0}
    return {"nu": TRAP_NU, "Omega_p": 0.0, "omega0": QUBIT_OMEGA0}


def _figure(name, vs, Delta=0.0, sample=5e-6, profile=None, **kw) -> ScenarioConfig:
    drive = _figure_drive(vs)
    if profile is not None:
        drive = {"nu": TRAP_NU, "eta": 2 * CARRIER_OMEGA0 / (4 * PARAMETRIC_OMEGA_P), "omega0": QUBIT_OMEGA0}
    return ScenarioConfig(
        name=name, frame=Frame.DIRAC_CHIRAL,
        propagator=PropagatorConfig(t_max=RUN_TIME, sample_interval=sample),
        states=_three_spins(), dirac=_figure_dirac(vs, Delta, profile), drive=drive, **kw,
    )


# scaled lab-frame point: nu, omega0 lowered while Omega0/nu, Omega_p/nu, Delta/nu are kept
SCALED_NU = TWO_PI * 100e3
SCALED_OMEGA0 = TWO_PI * 2e6
SCALE = SCALED_NU / TRAP_NU
RWA_TIME = 9.1e-3  # c_sim * t ~ 1 oscillator length


def _rwa_ion() -> IonParams:
    return IonParams(
        nu=SCALED_NU, omega0=SCALED_OMEGA0, Omega0=CARRIER_OMEGA0 * SCALE,
        Omega_p=PARAMETRIC_OMEGA_P * SCALE, Delta=0.0, eta=2 * CARRIER_OMEGA0 / (4 * PARAMETRIC_OMEGA_P),
    )


def _presets() -> dict:
    out = {
        "fig2a": _figure("fig2a", 0.0),
        "fig2b": _figure("fig2b", 2.0),
        "fig2c": _figure("fig2c", 2.0, outputs=OutputSpec(snapshots=(0.5e-3, 1.0e-3, 1.5e-3))),
        "fig3a-const": _figure("fig3a-const", 2.0, MASSIVE_DELTA, sample=1e-6, outputs=OutputSpec(spectrum=True)),
        "fig3a-timedep": _figure(
            "fig3a-timedep", 2.0, MASSIVE_DELTA, sample=1e-6,
            profile=AlcubierreProfile.polynomial(WARP_TRAJECTORY),
            outputs=OutputSpec(spectrum=True, detrend_degree=3),
        ),
        "fig3b": _figure("fig3b", 2.0, MASSIVE_DELTA, sample=1e-6, outputs=OutputSpec(spectrum=True)),
        "fig3c": _figure("fig3c", 2.0, MASSIVE_DELTA, sample=1e-6, outputs=OutputSpec(snapshots=(0.3e-3, 1.5e-3))),
    }
    out["convergence"] = replace(out["fig3b"], name="convergence", nmax_sweep=(128, 256, 512))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ion = _rwa_ion()
    out["rwa-validate"] = ScenarioConfig(
        name="rwa-validate", frame=Frame.ION_LAB,
        propagator=PropagatorConfig(t_max=RWA_TIME, sample_interval=RWA_TIME / 91,
                                    backend=Backend.TIME_ORDERED, scheme="magnus4"),
        states=(("plus", InitialStateSpec(spin=SPIN_PLUS)),), ion=ion, n_max=32,
        outputs=OutputSpec(variance=False), compare_effective=True,
    )
    return out


PRESET_NAMES = ("fig2a", "fig2b", "fig2c", "fig3a-const", "fig3a-timedep", "fig3b", "fig3c",
                "rwa-validate", "convergence")


def preset(name: str) -> ScenarioConfig:
    table = _presets()
    if name not in table:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return table[name]


def resolve(target: str) -> ScenarioConfig:
    """A preset name or a path to a JSON config."""
    if target in PRESET_NAMES:
        return preset(target)
    if os.path.exists(target):
        return load_config(target)
    raise ConfigError(f"{target!r} is neither a preset ({', '.join(PRESET_NAMES)}) nor a readable file")


# ---------------------------------------------------------------- execution

def _dirac_spec(cfg: ScenarioConfig, n_max: int) -> HamiltonianSpec:
    space = FockSpace(n_max)
    if cfg.frame.is_dirac:
        return HamiltonianSpec(cfg.frame, space, dirac=cfg.dirac)
    return HamiltonianSpec(cfg.frame, space, ion=cfg.ion)


def _c_sim(cfg) -> float:
    return cfg.dirac.kinetic if cfg.dirac is not None else ion_to_dirac(cfg.ion).kinetic


def _run_state(cfg: ScenarioConfig, spec0: InitialStateSpec, n_max: int, backend: Backend | None = None):
    backend = backend or cfg.propagator.backend
    prop = replace(cfg.propagator, backend=backend)
    snaps = cfg.outputs.snapshots
    if backend is Backend.MOMENTUM_ORACLE:
        return evolution.evolve_momentum_oracle(cfg.dirac, spec0, prop, MomentumGrid(), snapshot_times=snaps)
    spec = _dirac_spec(cfg, n_max)
    state = build_initial_state(spec0, spec.space)
    if backend is Backend.EXACT:
        return evolution.evolve_exact(spec, state, prop, snapshot_times=snaps)
    return evolution.evolve_timeordered(spec, state, prop, snapshot_times=snaps)


def _effective_reference(cfg: ScenarioConfig, spec0: InitialStateSpec, n_max: int):
    """Exact evolution under the effective ion Hamiltonian (a Hadamard-frame Dirac model)."""
    dirac = ion_to_dirac(cfg.ion)
    spec = HamiltonianSpec(Frame.DIRAC_HADAMARD, FockSpace(n_max), dirac=dirac)
    prop = replace(cfg.propagator, backend=Backend.EXACT)
    return evolution.evolve_exact(spec, build_initial_state(spec0, spec.space), prop)


def _rel_dev(a, b):
    """max_t |a - b| / |b| over samples with b != 0."""
    a, b = np.asarray(a), np.asarray(b)
    mask = np.abs(b) > 1e-14 * max(np.abs(b).max(), 1e-300)
    return float(np.max(np.abs(a[mask] - b[mask]) / np.abs(b[mask]))) if mask.any() else 0.0


def _scaled_dev(a, b, floor=1e-300):
    """max |a - b| relative to max |b|, or to ``floor`` when b stays near zero."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.abs(b).max(), floor))


def _state_summary(cfg, rec) -> dict:
    t = rec.times
    slope = float(np.polyfit(t, rec.mean_x_over_c, 1)[0])
    _, dX, _ = analysis.variance_series(rec)
    out = {
        "slope": slope,
        "final_mean_x_over_c_s": float(rec.mean_x_over_c[-1]),
        "initial_delta_X": float(dX[0]),
        "final_delta_X": float(dX[-1]),
        "delta_X_nondecreasing": analysis.is_nondecreasing(dX, atol=1e-9),
        "delta_X_spread": float(dX.max() - dX.min()),
        "norm_drift": rec.norm_drift,
        "tail_mass": rec.meta.get("tail_mass"),
    }
    if cfg.outputs.spectrum:
        try:
            sp = analysis.zitterbewegung_spectrum(rec, detrend_degree=cfg.outputs.detrend_degree)
            out["zb_frequency_rad_s"] = sp.frequency
            out["zb_amplitude_s"] = sp.amplitude
        except analysis.NoPeak as exc:
            out["zb_frequency_rad_s"] = None
            out["zb_note"] = str(exc)
    if rec.snapshots:
        out["snapshot_peaks_x_over_c_s"] = {
            format(s.t, ".6g"): [float(p) / rec.c_sim for p in s.peaks()] for s in rec.snapshots
        }
    return out


def _write_csv(path: Path, rec) -> None:
    rows = [",".join(CSV_COLUMNS)]
    for i in range(rec.times.size):
        vals = (rec.times[i], rec.mean_x_over_c[i], rec.var_x[i], *rec.spin_exp[i], rec.norm[i])
        rows.append(",".join(format(float(v), ".12g") for v in vals))
    path.write_text("\n".join(rows) + "\n", encoding="ascii")


def _write_density_csv(path: Path, snaps) -> None:
    rows = ["t_s,x_over_c_s,X,density_per_s"]
    for s in snaps:
        for xc, X, d in zip(s.x_grid, s.X, s.density):
            rows.append(",".join(format(float(v), ".12g") for v in (s.t, xc, X, d)))
    path.write_text("\n".join(rows) + "\n", encoding="ascii")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class RunResult:
    out_dir: Path
    summary: dict
    records: dict
    files: list


class _Outputs:
    """Tracks written files so that a failed run leaves nothing behind."""

    def __init__(self, root: Path):
        self.root = root
        self.created_root = not root.exists()
        root.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        self.files.append(p)
        return p

    def discard(self):
        for p in self.files:
            try:
                p.unlink()
            except FileNotFoundError:
                pass
        if self.created_root:
            shutil.rmtree(self.root, ignore_errors=True)


def run_scenario(cfg: ScenarioConfig, out_dir, svg: bool = True, verify: bool = False) -> RunResult:
    """Run every initial state (and n_max of a sweep) and write the outputs.

    Files go to ``out_dir/<name>/``.  On any error the files written so far are
    removed.  With ``verify`` an independent backend is run as well and a
    ``VerificationFailed`` is raised, after writing, if the agreement thresholds
    are violated.
    """
    outputs = _Outputs(Path(out_dir) / cfg.name)
    try:
        result = _execute(cfg, outputs, svg, verify)
    except BaseException:
        outputs.discard()
        raise
    failed = [k for k, v in result.summary.get("verification", {}).get("checks", {}).items() if not v["pass"]]
    if failed:
        raise VerificationFailed(f"verification failed: {', '.join(failed)}")
    return result


def _execute(cfg, outputs, svg, verify) -> RunResult:
    sweep = cfg.nmax_sweep or (cfg.n_max,)
    records = {}
    per_state = {}
    for n_max in sweep:
        for label, spec0 in cfg.states:
            key = label if len(sweep) == 1 else f"n{n_max}_{label}"
            rec = _run_state(cfg, spec0, n_max)
            records[key] = rec
            per_state[key] = _state_summary(cfg, rec)

    summary = {
        "provenance": {
            "preset": cfg.name,
            "parameters": config_to_dict(cfg),
            "backend": cfg.propagator.backend.value,
            "n_max": list(sweep) if len(sweep) > 1 else sweep[0],
            "dt": next((r.meta.get("dt") for r in records.values() if "dt" in r.meta), cfg.propagator.dt),
            "convergence": {
                "tail_mass": max((r.meta.get("tail_mass") or 0.0) for r in records.values()),
                "norm_drift": max(r.norm_drift for r in records.values()),
            },
        },
        "states": per_state,
    }
    if cfg.frame.is_dirac:
        summary["dirac"] = {"c_sim": cfg.dirac.c_sim, "mass_m": cfg.dirac.mass_m,
                            "rest_energy_rad_s": cfg.dirac.rest_energy}
        if cfg.outputs.spectrum and cfg.dirac.rest_energy != 0:
            summary["dispersion_zb_frequency_rad_s"] = analysis.dispersion_zb_frequency(cfg.dirac, cfg.states[0][1])
        if cfg.dirac.rest_energy == 0 and len(sweep) == 1 and "up" in records and "down" in records:
            fit = analysis.fit_lightcone(records["up"], records["down"])
            summary["lightcone"] = {"slope_up": fit.slope_up, "slope_down": fit.slope_down,
                                    "residual_rms": fit.residual_rms}
    if len(sweep) > 1:
        summary["nmax_convergence"] = _sweep_summary(cfg, sweep, per_state)
    if cfg.compare_effective:
        summary["rwa"] = _rwa_summary(cfg, records, sweep[-1])
    if verify:
        summary["verification"] = _verify(cfg, records, sweep)

    files = []
    if cfg.outputs.trajectory or cfg.outputs.variance:
        for key, rec in records.items():
            p = outputs.path(f"trajectory_{key}.csv")
            _write_csv(p, rec)
            files.append(p)
    for key, rec in records.items():
        if rec.snapshots:
            p = outputs.path(f"density_{key}.csv")
            _write_density_csv(p, rec.snapshots)
            files.append(p)
    if svg:
        files += _write_figures(cfg, records, outputs)
    p = outputs.path("summary.json")
    p.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files.append(p)
    return RunResult(outputs.root, summary, records, files)


def _sweep_summary(cfg, sweep, per_state) -> dict:
    ref = max(sweep)
    out = {}
    for n in sweep:
        if n == ref:
            continue
        worst = 0.0
        for label, _ in cfg.states:
            a, b = per_state[f"n{n}_{label}"], per_state[f"n{ref}_{label}"]
            worst = max(worst, abs(a["slope"] - b["slope"]) / abs(b["slope"]))
            fa, fb = a.get("zb_frequency_rad_s"), b.get("zb_frequency_rad_s")
            if fa is not None and fb is not None:
                worst = max(worst, abs(fa - fb) / abs(fb))
        out[str(n)] = {"max_rel_change_vs_" + str(ref): worst}
    return out


def _rwa_summary(cfg, records, n_max) -> dict:
    out = {}
    for label, spec0 in cfg.states:
        ref = _effective_reference(cfg, spec0, n_max)
        lab = records[label if not cfg.nmax_sweep else f"n{n_max}_{label}"]
        dev = _rel_dev(lab.mean_X[1:], ref.mean_X[1:])
        out[label] = {"max_rel_deviation": dev, "pass": dev <= VERIFY_RWA_REL,
                      "final_mean_X_lab": float(lab.mean_X[-1]),
                      "final_mean_X_effective": float(ref.mean_X[-1])}
    return out


def _verify(cfg, records, sweep) -> dict:
    checks = {}
    n_max = sweep[-1]
    for label, spec0 in cfg.states:
        rec = records[label if len(sweep) == 1 else f"n{n_max}_{label}"]
        if cfg.frame is Frame.ION_LAB:
            ref = _effective_reference(cfg, spec0, n_max)
            dev = _rel_dev(rec.mean_X[1:], ref.mean_X[1:])
            checks[f"{label}:lab_vs_effective"] = {"value": dev, "limit": VERIFY_RWA_REL, "pass": dev <= VERIFY_RWA_REL}
            continue
        if cfg.frame is Frame.ION_EFFECTIVE:
            ref = _effective_reference(cfg, spec0, n_max)
            dev = _scaled_dev(rec.mean_X, ref.mean_X, floor=_c_sim(cfg) * cfg.propagator.t_max)
            checks[f"{label}:effective_vs_exact"] = {"value": dev, "limit": VERIFY_EFFECTIVE_REL,
                                                     "pass": dev <= VERIFY_EFFECTIVE_REL}
            continue
        if cfg.frame is not Frame.DIRAC_CHIRAL:
            ref = _run_state(replace(cfg, outputs=replace(cfg.outputs, snapshots=())), spec0, n_max, Backend.EXACT)
            if cfg.propagator.backend is Backend.EXACT:
                continue
        else:
            other = Backend.EXACT if cfg.propagator.backend is Backend.MOMENTUM_ORACLE else Backend.MOMENTUM_ORACLE
            ref = _run_state(cfg, spec0, n_max, other)
        # x/c is in seconds and light covers c t_max in a run
        dev = _scaled_dev(rec.mean_x_over_c, ref.mean_x_over_c, floor=cfg.propagator.t_max)
        checks[f"{label}:mean_x"] = {"value": dev, "limit": VERIFY_MEAN_REL, "pass": dev <= VERIFY_MEAN_REL}
        spread = float(np.max(np.abs(np.sqrt(np.maximum(rec.var_x, 0)) - np.sqrt(np.maximum(ref.var_x, 0)))))
        checks[f"{label}:delta_X"] = {"value": spread, "limit": VERIFY_SPREAD_ABS, "pass": spread <= VERIFY_SPREAD_ABS}
        for a, b in zip(rec.snapshots, ref.snapshots):
            dd = float(np.max(np.abs(a.density_X - np.interp(a.X, b.X, b.density_X))))
            checks[f"{label}:density@{a.t:.6g}"] = {"value": dd, "limit": VERIFY_DENSITY_ABS,
                                                   "pass": dd <= VERIFY_DENSITY_ABS}
    return {"checks": checks, "pass": all(c["pass"] for c in checks.values())}


def _write_figures(cfg, records, outputs) -> list:
    files = []
    t_ms = lambda r: r.times * 1e3  # noqa: E731
    series = [Series(k, t_ms(r), r.mean_x_over_c * 1e3) for k, r in records.items()]
    if cfg.frame.is_dirac and cfg.dirac.profile.is_constant:
        vs = cfg.dirac.profile.constant_vs
        t = next(iter(records.values())).times
        series += [Series(f"v_s{sign:+d}", t * 1e3, (vs + sign) * t * 1e3, dashed=True) for sign in (1, -1)]
    p = outputs.path("trajectory.svg")
    p.write_text(line_plot(series, f"{cfg.name}: trajectory", "t (ms)", "<x>/c (ms)"), encoding="utf-8")
    files.append(p)
    if cfg.outputs.variance:
        series = [Series(k, t_ms(r), np.sqrt(np.maximum(r.var_x, 0))) for k, r in records.items()]
        p = outputs.path("variance.svg")
        p.write_text(line_plot(series, f"{cfg.name}: position spread", "t (ms)", "Delta X (osc. lengths)"),
                     encoding="utf-8")
        files.append(p)
    for key, rec in records.items():
        if rec.snapshots:
            series = [Series(f"t={s.t * 1e3:.3g} ms", s.x_grid * 1e3, s.density * 1e-3) for s in rec.snapshots]
            p = outputs.path(f"density_{key}.svg")
            p.write_text(line_plot(series, f"{cfg.name}: density ({key})", "x/c (ms)", "density (1/ms)"),
                         encoding="utf-8")
            files.append(p)
    return files

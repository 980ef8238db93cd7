"""Experiment driver: ``drivengate run <config>`` and ``drivengate list``.

A config is flat ``key = value`` text with ``#`` comments.  Numbers may carry
an SI suffix (``Hz kHz MHz GHz`` for frequencies, ``s ms us ns`` for times);
frequencies are ordinary (not angular) frequencies.  Lists are comma
separated and integer ranges may be written ``start:stop:step`` (inclusive).

Each run writes ``<output>.csv`` and ``<output>.manifest.json``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    SweepResultRow,
    assemble_sweep,
    bell_fidelity,
    bell_state,
    product_state,
)
from .errors import ConfigError, ConstraintError, NumericalGuardError
from .evolve import (
    DoubleDriveEngine,
    PropagationPlan,
    dss_propagator,
    phase_space_trajectory,
    propagate_double_noisy,
    propagate_noisy,
    propagate_sequential_gates,
    static_gate,
    target_fidelities,
)
from .hamiltonian import ECHO_PULSES, NO_ECHO, DssModel, EchoSpec
from .magnus import u_app
from .noise import (
    dephasing_config,
    free_induction_check,
    intensity_config,
    phase_config,
    self_test,
)
from .params import (
    TWO_PI,
    TrapSpec,
    p_for_frequency,
    resolve_double_drive,
    resolve_single_drive,
)
from .qcore import HilbertLayout, State, fock_mixture, qubit_op

EXIT_OK, EXIT_CONFIG, EXIT_CONSTRAINT, EXIT_GUARD = 0, 2, 3, 4

_UNITS = {
    "freq": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
}


# ------------------------------------------------------------- parsing


@dataclass(frozen=True)
class Key:
    """Config key: value kind, physical dimension and default."""

    kind: str
    default: object = None
    dim: str | None = None
    required: bool = False
    doc: str = ""


def _number(text, dim, key):
    s = text.strip()
    low = s.lower()
    scale = 1.0
    for name, table in _UNITS.items():
        for suffix, f in sorted(table.items(), key=lambda kv: -len(kv[0])):
            if low.endswith(suffix) and not low[: -len(suffix)].rstrip().endswith(("e", "e-", "e+")):
                head = s[: -len(suffix)].strip()
                if not head:
                    continue
                if dim != name:
                    raise ConfigError(f"key {key!r}: unit {suffix!r} does not fit a {dim or 'dimensionless'} value")
                s, scale = head, f
                break
        else:
            continue
        break
    try:
        return float(s) * scale
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse number {text.strip()!r}") from exc


def _integer(text, key):
    v = _number(text, None, key)
    if not v.is_integer():
        raise ConfigError(f"key {key!r}: {text.strip()!r} is not an integer")
    return int(v)


def _int_list(text, key):
    out = []
    for item in text.split(","):
        item = item.strip()
        if ":" in item:
            parts = item.split(":")
            if len(parts) != 3:
                raise ConfigError(f"key {key!r}: range must be start:stop:step, got {item!r}")
            a, b, s = (_integer(x, key) for x in parts)
            if s == 0:
                raise ConfigError(f"key {key!r}: range step is zero")
            out.extend(range(a, b + (1 if s > 0 else -1), s))
        elif item:
            out.append(_integer(item, key))
    if not out:
        raise ConfigError(f"key {key!r}: empty list")
    return out


def _convert(key, spec, text):
    if spec.kind == "str":
        return text.strip()
    if spec.kind == "int":
        return _integer(text, key)
    if spec.kind == "float":
        return _number(text, spec.dim, key)
    if spec.kind == "bool":
        v = text.strip().lower()
        if v in ("true", "yes", "on", "1"):
            return True
        if v in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"key {key!r}: expected a boolean, got {text.strip()!r}")
    if spec.kind == "intlist":
        return _int_list(text, key)
    if spec.kind == "floatlist":
        vals = [_number(x, spec.dim, key) for x in text.split(",") if x.strip()]
        if not vals:
            raise ConfigError(f"key {key!r}: empty list")
        return vals
    raise AssertionError(spec.kind)


def read_config(text):
    """Raw ``{key: value-text}`` from flat config text."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw.strip()!r}")
        k, v = (x.strip() for x in line.split("=", 1))
        if not k:
            raise ConfigError(f"line {n}: empty key")
        if k in out:
            raise ConfigError(f"key {k!r} given twice")
        out[k] = v
    return out


# ------------------------------------------------------------- schema

_COMMON = {
    "experiment": Key("str", required=True, doc="experiment name"),
    "output": Key("str", doc="output path prefix (default: config path without suffix)"),
    "omega_x": Key("float", 4e6, "freq", doc="radial trap frequency"),
    "omega_z": Key("float", 1e6, "freq", doc="axial trap frequency"),
    "eta_1": Key("float", 0.225, doc="Lamb-Dicke parameter of the centre-of-mass mode"),
    "r": Key("int", 8, doc="gate-time multiple"),
    "k": Key("int", 2, doc="detuning ratio delta_2/delta_1"),
    "seed": Key("int", 0, doc="base RNG seed"),
}
_ECHO = {"echo": Key("str", "sigma_z_pair", doc=f"echo pulse, one of {sorted(ECHO_PULSES)}")}
_NOISY = {
    "p": Key("intlist", [11, 15, 20, 30, 40, 57, 80, 110, 157], doc="drive multiples (list or range)"),
    "n_max": Key("int", 7, doc="phonon cutoff per mode"),
    "n_traj": Key("int", 1000, doc="trajectories per point"),
    "steps": Key("int", 200, doc="noise steps per gate"),
    "initial": Key("str", "00", doc="initial product state"),
    "target": Key("str", "Phi_minus", doc="Bell target label"),
}
_DOUBLE = {
    "r": Key("int", 32, doc="gate-time multiple"),
    "p": Key("int", 79, doc="primary drive multiple"),
    "q": Key("int", 47, doc="secondary drive multiple"),
    "n_max": Key("int", 5, doc="phonon cutoff per mode"),
    "segments": Key("int", 200, doc="propagation segments per gate"),
    "per_cycle": Key("float", 8.0, doc="Magnus substeps per period of the fastest frequency"),
    "initial": Key("str", "+-", doc="initial product state"),
}

EXPERIMENTS = {
    "bell_dynamics": (
        "Bell-state generation from |10>: exact dynamics against the Magnus propagator",
        {
            "p": Key("int", 57, doc="drive multiple"),
            "n_max": Key("int", 10, doc="phonon cutoff per mode"),
            "initial": Key("str", "10", doc="initial product state"),
            "target": Key("str", "Psi_plus", doc="Bell target label"),
            "t_max": Key("float", None, "time", doc="end time (default 2 t_g)"),
            "n_times": Key("int", 201, doc="number of output times"),
            "magnus": Key("bool", True, doc="also evaluate the Magnus propagator"),
        },
    ),
    "trajectories": (
        "phonon phase-space trajectories for weak and strong driving",
        {
            "drive": Key("floatlist", [2e5, 5e6], "freq", doc="drive frequencies"),
            "nbar": Key("float", 0.5, doc="thermal occupation of both modes"),
            "n_max": Key("int", 15, doc="phonon cutoff per mode"),
            "initial": Key("str", "++", doc="initial product state"),
            "n_times": Key("int", 201, doc="number of output times"),
        },
    ),
    "thermal_sweep": (
        "gate error against drive strength for thermal phonons",
        {
            "p": Key("intlist", [11, 15, 20, 30, 40, 57, 80], doc="drive multiples"),
            "nbar": Key("floatlist", [0.0, 0.5, 1.0], doc="thermal occupations"),
            "n_max": Key("int", 25, doc="phonon cutoff per mode"),
            "initial": Key("str", "10", doc="initial product state"),
            "target": Key("str", "Psi_plus", doc="Bell target label"),
            **_ECHO,
        },
    ),
    "dephasing_sweep": (
        "gate error against drive strength under qubit dephasing",
        {
            **_NOISY,
            "T2": Key("floatlist", [15e-6, 25e-6, 40e-6], "time", doc="dephasing times"),
            "tau_ratio": Key("float", 0.1, doc="noise correlation time over T2"),
            **_ECHO,
        },
    ),
    "phase_sweep": (
        "mean error of sequential gates under laser-phase drift",
        {
            **_NOISY,
            "p": Key("intlist", [57, 80], doc="drive multiples"),
            "zeta_p": Key("floatlist", [0.1], doc="phase drift (units of pi) after n_gates"),
            "n_gates": Key("int", 1000, doc="sequential gates"),
            **_ECHO,
        },
    ),
    "intensity_sweep": (
        "gate error against drive strength under drive-intensity noise",
        {
            **_NOISY,
            "p": Key("intlist", [15, 20, 30, 40, 57, 80, 110, 157], doc="drive multiples"),
            "zeta_I": Key("floatlist", [0.7e-4, 1e-4, 1.3e-4], doc="relative intensity noise"),
            "tau": Key("float", 1e-3, "time", doc="noise correlation time"),
            **_ECHO,
        },
    ),
    "double_drive_dynamics": (
        "doubly-driven gate dynamics from |+->",
        {
            **_DOUBLE,
            "target": Key("str", "Psi_minus_tilde", doc="Bell target label"),
            "echo": Key("str", "none", doc=f"echo pulse, one of {sorted(ECHO_PULSES)}"),
        },
    ),
    "double_drive_noise": (
        "doubly-driven gate error under primary-drive intensity noise",
        {
            **_DOUBLE,
            "target": Key("str", "Psi_plus_tilde", doc="Bell target label"),
            "echo": Key("str", "sigma_y_pair", doc=f"echo pulse, one of {sorted(ECHO_PULSES)}"),
            "zeta_I": Key("floatlist", [1e-4], doc="relative intensity noise"),
            "tau": Key("float", 1e-3, "time", doc="noise correlation time"),
            "n_traj": Key("int", 1000, doc="trajectories per point"),
        },
    ),
    "noise_selftest": (
        "statistical self-tests of the noise processes",
        {
            "n_samples": Key("int", 100_000, doc="samples per statistical test"),
            "T2": Key("floatlist", [25e-6], "time", doc="dephasing times for the free-induction check"),
            "n_paths": Key("int", 10_000, doc="free-induction paths"),
        },
    ),
}


def schema(experiment):
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; valid: {', '.join(EXPERIMENTS)}")
    return {**_COMMON, **EXPERIMENTS[experiment][1]}


def parse_config(text, source=None):
    """Typed config dict with defaults filled in."""
    raw = read_config(text)
    if "experiment" not in raw:
        raise ConfigError("missing required key 'experiment'")
    keys = schema(raw["experiment"])
    unknown = sorted(set(raw) - set(keys))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} for experiment {raw['experiment']!r}")
    cfg = {}
    for name, spec in keys.items():
        if name in raw:
            cfg[name] = _convert(name, spec, raw[name])
        elif spec.required:
            raise ConfigError(f"missing required key {name!r}")
        else:
            cfg[name] = spec.default
    if cfg["output"] is None:
        cfg["output"] = str(Path(source).with_suffix("")) if source else cfg["experiment"]
    for name in ("n_max", "n_traj", "steps", "n_times", "segments", "n_gates", "n_samples", "n_paths"):
        if name in cfg and cfg[name] < 1:
            raise ConfigError(f"key {name!r} must be positive")
    if "echo" in cfg and cfg["echo"] not in ECHO_PULSES:
        raise ConfigError(f"key 'echo': unknown pulse {cfg['echo']!r}; valid: {sorted(ECHO_PULSES)}")
    for name in ("initial",):
        if name in cfg:
            try:
                product_state(cfg[name])
            except ValueError as exc:
                raise ConfigError(f"key {name!r}: {exc}") from exc
    if "target" in cfg:
        try:
            bell_state(cfg["target"])
        except ValueError as exc:
            raise ConfigError(f"key 'target': {exc}") from exc
    return cfg


# ------------------------------------------------------------- helpers


def _trap(cfg):
    return TrapSpec(TWO_PI * cfg["omega_x"], TWO_PI * cfg["omega_z"], cfg["eta_1"])


def _single(cfg, p):
    return resolve_single_drive(_trap(cfg), cfg["r"], cfg["k"], p)


def _echo(cfg):
    return EchoSpec(cfg["echo"]) if cfg.get("echo", "none") != "none" else NO_ECHO


def _vacuum_state(layout, labels):
    return np.kron(product_state(labels), np.eye(layout.phonon_dim)[0])


def _target(cfg, params):
    return bell_state(cfg["target"], np.sign(params.J12))


def _hz(omega):
    return omega / TWO_PI


class Table:
    """Comma-separated table with a fixed header."""

    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def add(self, *values):
        if len(values) != len(self.columns):
            raise AssertionError("row length does not match header")
        self.rows.append(values)

    def render(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


# ------------------------------------------------------------- experiments


def run_bell_dynamics(cfg):
    g = _single(cfg, cfg["p"])
    L = HilbertLayout(cfg["n_max"])
    psi = _vacuum_state(L, cfg["initial"])
    target = _target(cfg, g)
    t_max = cfg["t_max"] if cfg["t_max"] is not None else 2 * g.t_g
    times = np.linspace(0.0, t_max, cfg["n_times"])
    sp = dss_propagator(g, L)
    model = DssModel(g, L)
    sz = [L.embed_qubits(qubit_op("sigma_z", i)) for i in (1, 2)]
    cols = ["time_s", "sz1", "sz2", "fidelity"]
    if cfg["magnus"]:
        cols += ["sz1_magnus", "sz2_magnus", "fidelity_magnus"]
    table = Table(cols)
    c = sp.to_eigenbasis(psi[:, None])
    for t in times:
        # observables in the dressed frame, where the drive precession is removed
        v = model.to_dressed(t, sp.from_eigenbasis(c, t)[:, 0])
        row = [t, *(np.vdot(v, s @ v).real for s in sz), target_fidelities(v[:, None], target)[0]]
        if cfg["magnus"]:
            m = model.to_dressed(t, u_app(g, L, t) @ psi)
            row += [*(np.vdot(m, s @ m).real for s in sz), target_fidelities(m[:, None], target)[0]]
        table.add(*row)
    return table, {"params": g.to_dict()}


def _drive_params(cfg, f_hz):
    """Constrained parameters when ``f_hz`` maps to a valid ``p``, hand-set otherwise."""
    base = _single(cfg, abs(cfg["r"]) + abs(cfg["k"]) + 1)
    p = p_for_frequency(base, f_hz)
    try:
        return base.with_p(p)
    except ConstraintError:
        return base.with_drive(TWO_PI * f_hz)


def run_trajectories(cfg):
    L = HilbertLayout(cfg["n_max"])
    table = Table(["drive_Hz", "p", "Omega_d_Hz", "mode", "time_s", "x", "p_quadrature"])
    params, closure = [], []
    for f in cfg["drive"]:
        g = _drive_params(cfg, f)
        initial = fock_mixture(L, product_state(cfg["initial"]), cfg["nbar"], cfg["nbar"])
        times = np.linspace(0.0, g.t_g, cfg["n_times"])
        tr = phase_space_trajectory(g, L, initial, times)
        for n in range(2):
            for t, (x, pq) in zip(times, tr[n]):
                table.add(f, g.p, _hz(g.Omega_d), n + 1, t, x, pq)
        params.append(g.to_dict())
        closure.append({
            "drive_Hz": f,
            "return_distance": [float(np.hypot(*(tr[n, -1] - tr[n, 0]))) for n in range(2)],
            "max_excursion": [float(np.hypot(tr[n, :, 0] - tr[n, 0, 0], tr[n, :, 1] - tr[n, 0, 1]).max())
                              for n in range(2)],
        })
    return table, {"params": params, "closure": closure}


def run_thermal_sweep(cfg):
    L = HilbertLayout(cfg["n_max"])
    table = Table(["p", "Omega_d_Hz", "nbar", "error", "stderr", "n_traj", "seed"])
    params = []
    for p in cfg["p"]:
        g = _single(cfg, p)
        sp = dss_propagator(g, L)
        target = _target(cfg, g)
        for nbar in cfg["nbar"]:
            w, v = static_gate(g, L, fock_mixture(L, product_state(cfg["initial"]), nbar, nbar),
                               _echo(cfg), propagator=sp)
            err = 1.0 - float(target_fidelities(v, target, w, n_comp=len(w))[0])
            table.add(p, _hz(g.Omega_d), nbar, max(err, 0.0), 0.0, 1, cfg["seed"])
        params.append(g.to_dict())
    return table, {"params": params}


def _noisy_sweep(cfg, magnitudes, mag_col, kind, make_noise):
    L = HilbertLayout(cfg["n_max"])
    table = Table(["p", "Omega_d_Hz", mag_col, "error", "stderr", "n_traj", "seed"])
    params, minima = [], {}
    for m in magnitudes:
        rows = []
        for p in cfg["p"]:
            g = _single(cfg, p)
            psi = _vacuum_state(L, cfg["initial"])
            plan = PropagationPlan(kind, g.t_g, steps=cfg["steps"], echo=_echo(cfg),
                                   noise=make_noise(g, m), n_traj=cfg["n_traj"], seed=cfg["seed"])
            res = propagate_noisy(plan, g, L, psi, _target(cfg, g))
            rows.append(SweepResultRow(g.Omega_d, p, res.error, res.stderr, cfg["n_traj"], kind, m))
            table.add(p, _hz(g.Omega_d), m, res.error, res.stderr, cfg["n_traj"], cfg["seed"])
            if m == magnitudes[0]:
                params.append(g.to_dict())
        sweep = assemble_sweep(rows, delta_1=_single(cfg, cfg["p"][0]).delta_1)
        minima[repr(m)] = {"p": sweep.minimum.p, "Omega_d_Hz": _hz(sweep.minimum.Omega_d),
                           "error": sweep.minimum.error, "interior": sweep.has_interior_minimum}
    return table, {"params": params, "minima": minima}


def run_dephasing_sweep(cfg):
    return _noisy_sweep(cfg, cfg["T2"], "T2_s", "dss_dephasing_noisy",
                        lambda g, T2: dephasing_config(T2, cfg["tau_ratio"]))


def run_intensity_sweep(cfg):
    return _noisy_sweep(cfg, cfg["zeta_I"], "zeta_I", "dss_intensity_noisy",
                        lambda g, z: intensity_config(g.Omega_d, z, cfg["tau"]))


def run_phase_sweep(cfg):
    L = HilbertLayout(cfg["n_max"])
    table = Table(["p", "Omega_d_Hz", "zeta_p", "error", "stderr", "n_gates", "seed"])
    params = []
    for z in cfg["zeta_p"]:
        for p in cfg["p"]:
            g = _single(cfg, p)
            plan = PropagationPlan("dss_phase_noisy", g.t_g, steps=cfg["steps"], echo=_echo(cfg),
                                   noise=phase_config(z, g.t_g, cfg["n_gates"]), seed=cfg["seed"])
            f, _ = propagate_sequential_gates(plan, g, L, cfg["n_gates"],
                                              _vacuum_state(L, cfg["initial"]), _target(cfg, g))
            err = 1.0 - f
            table.add(p, _hz(g.Omega_d), z, float(err.mean()),
                      float(err.std(ddof=1) / math.sqrt(len(err))), cfg["n_gates"], cfg["seed"])
            if z == cfg["zeta_p"][0]:
                params.append(g.to_dict())
    return table, {"params": params}


def _double(cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        try:
            return resolve_double_drive(_trap(cfg), cfg["r"], cfg["k"], cfg["p"], cfg["q"])
        except UserWarning as exc:
            raise ConstraintError(str(exc)) from exc


def run_double_drive_dynamics(cfg):
    g = _double(cfg)
    L = HilbertLayout(cfg["n_max"])
    eng = DoubleDriveEngine(g, L, segments=cfg["segments"], per_cycle=cfg["per_cycle"])
    psi = _vacuum_state(L, cfg["initial"])
    target = _target(cfg, g)
    states = eng.evolve_states(psi, cfg["segments"], echo=_echo(cfg))
    ops = [L.embed_qubits(qubit_op(f"sigma_{a}", i)) for a in "xz" for i in (1, 2)]
    table = Table(["time_s", "sx1", "sx2", "sz1", "sz2", "fidelity"])
    for s, v in enumerate(states):
        table.add(s * eng.seg_dt, *(np.vdot(v, o @ v).real for o in ops),
                  bell_fidelity(State.pure(L, v), target))
    return table, {"params": g.to_dict(), "substeps": eng.substeps, "pattern": eng.pattern}


def run_double_drive_noise(cfg):
    g = _double(cfg)
    L = HilbertLayout(cfg["n_max"])
    eng = DoubleDriveEngine(g, L, segments=cfg["segments"], per_cycle=cfg["per_cycle"])
    psi = _vacuum_state(L, cfg["initial"])
    target = _target(cfg, g)
    table = Table(["zeta_I", "Omega_d_Hz", "Omega_d2_Hz", "error", "stderr", "n_traj", "seed"])
    for z in cfg["zeta_I"]:
        plan = PropagationPlan("double_drive_noisy", g.t_g, steps=cfg["segments"], echo=_echo(cfg),
                               noise=intensity_config(g.Omega_d, z, cfg["tau"]),
                               n_traj=cfg["n_traj"], seed=cfg["seed"])
        res = propagate_double_noisy(plan, g, L, psi, target, engine=eng)
        table.add(z, _hz(g.Omega_d), _hz(g.Omega_d2), res.error, res.stderr, cfg["n_traj"], cfg["seed"])
    return table, {"params": g.to_dict(), "substeps": eng.substeps, "pattern": eng.pattern}


def run_noise_selftest(cfg):
    results = self_test(cfg["n_samples"], cfg["seed"])
    for T2 in cfg["T2"]:
        results += [dataclasses.replace(r, name=f"{r.name}[T2={T2:g}]")
                    for r in free_induction_check(T2, n_paths=cfg["n_paths"], seed=cfg["seed"])]
    table = Table(["name", "value", "expected", "tolerance", "passed"])
    for r in results:
        table.add(r.name, r.value, r.expected, r.tolerance, r.passed)
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise NumericalGuardError(f"noise self-tests failed: {failed}", table)
    return table, {}


RUNNERS = {
    "bell_dynamics": run_bell_dynamics,
    "trajectories": run_trajectories,
    "thermal_sweep": run_thermal_sweep,
    "dephasing_sweep": run_dephasing_sweep,
    "phase_sweep": run_phase_sweep,
    "intensity_sweep": run_intensity_sweep,
    "double_drive_dynamics": run_double_drive_dynamics,
    "double_drive_noise": run_double_drive_noise,
    "noise_selftest": run_noise_selftest,
}


# ------------------------------------------------------------- entry points


def code_version():
    from . import __version__

    return __version__


def _write(cfg, table, extra):
    out = Path(cfg["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out.with_name(out.name + ".csv")
    csv_path.write_text(table.render())
    manifest = {
        "experiment": cfg["experiment"],
        "code_version": code_version(),
        "config": cfg,
        "table": csv_path.name,
        "columns": table.columns,
        **extra,
    }
    out.with_name(out.name + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_path


def run(config_path):
    """Run one config file; returns the process exit code."""
    try:
        text = Path(config_path).read_text()
    except OSError as exc:
        print(f"config error: cannot read {config_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, config_path)
        table, extra = RUNNERS[cfg["experiment"]](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConstraintError as exc:
        print(f"constraint error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except NumericalGuardError as exc:
        if len(exc.args) > 1 and isinstance(exc.args[1], Table):
            _write(cfg, exc.args[1], {"failed": True})
        print(f"numerical guard: {exc.args[0]}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as exc:
        # worker-count and other invalid-input errors raised before any numerics
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    path = _write(cfg, table, extra)
    print(f"wrote {path}")
    return EXIT_OK


def list_experiments():
    """Human-readable listing of experiments and their keys."""
    lines = []
    for name, (desc, keys) in EXPERIMENTS.items():
        lines.append(f"{name}: {desc}")
        for k, spec in {**_COMMON, **keys}.items():
            if k == "experiment":
                continue
            unit = {"freq": " [Hz]", "time": " [s]"}.get(spec.dim, "")
            default = "required" if spec.required else f"default {spec.default!r}"
            lines.append(f"    {k}{unit}: {spec.doc} ({default})")
    return "\n".join(lines)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="drivengate", description="Driven single-sideband gate experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config", help="path to a key = value config file")
    sub.add_parser("list", help="list experiments and their keys")
    args = parser.parse_args(argv)
    if args.command == "list":
        print(list_experiments())
        return EXIT_OK
    return run(args.config)


__all__ = ["EXPERIMENTS", "list_experiments", "main", "parse_config", "read_config", "run"]

"""Experiment drivers and their file outputs.

Every driver takes an :class:`ExperimentConfig`, runs it, writes its CSV
artifacts under ``cfg.output_dir`` and returns the in-memory results.
"""
import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import IterationControl, _iterate, init_baseline
from .basis import TENSOR_PRODUCT, TOTAL_DEGREE
from .config import ExperimentConfig, dump_config, steps_for
from .errors import ConfigError, EnergyViolation
from .field import DGField, DGSpace, eoc, error_norms
from .ieq import init_state, make_problem, step_first_order, step_second_order
from .mesh import build_rect_mesh
from .potential import swift_hohenberg
from .weak_form import BCSpec, ModelSpec

log = logging.getLogger(__name__)

LEDGER_HEADER = ["step", "t", "E", "calE", "decrement", "identity_residual",
                 "solver_iters", "outer_iters"]
ERROR_HEADER = ["N_or_dt", "L2", "Linf", "EOC_L2", "EOC_Linf"]


def fmt(x):
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------- data

@dataclass(frozen=True)
class Manufactured:
    """u = exp(-lam t) sin(k x) sin(k y) with the matching source."""
    k: float
    eps: float
    g: float
    a: float

    @property
    def lam(self):
        k2 = 2 * self.k ** 2          # -Lap of the spatial mode
        return k2 ** 2 - self.a * k2 + 1.0

    def u(self, x, y, t):
        return math.exp(-self.lam * t) * np.sin(self.k * x) * np.sin(self.k * y)

    def source(self, x, y, t):
        # u_t + Lap^2 u + a Lap u + Psi'(u) with Psi'(u) = (1-eps)u - g u^2 + u^3
        v = self.u(x, y, t)
        return -self.eps * v - self.g * v * v + v ** 3

    def grad(self, x, y, t):
        e = math.exp(-self.lam * t) * self.k
        return (e * np.cos(self.k * x) * np.sin(self.k * y),
                e * np.sin(self.k * x) * np.cos(self.k * y))

    def boundary_data(self, family):
        k2 = 2 * self.k ** 2

        def g1(x, y, t, n):
            return self.u(x, y, t)

        def g2(x, y, t, n):
            gx, gy = self.grad(x, y, t)
            return n[0] * gx + n[1] * gy

        def g3(x, y, t, n):
            return -k2 * self.u(x, y, t)

        def g4(x, y, t, n):
            return -k2 * g2(x, y, t, n)

        return {"i": dict(g1=g1, g2=g2), "ii": dict(g1=g1, g3=g3),
                "iii": dict(g2=g2, g4=g4)}.get(family, {})


def strip_initial(x, y):
    """+1 inside the curvy vertical strip, -1 outside."""
    s = 2 * np.pi * y / 10
    inside = (np.sin(s) + 15 < x) & (x < np.cos(s) + 25)
    return np.where(inside, 1.0, -1.0)


def random_initial(space: DGSpace, seed: int) -> DGField:
    """i.i.d. uniform [-0.5, 0.5] cell averages, higher modes zero."""
    rng = np.random.default_rng(seed)
    coeffs = np.zeros((space.mesh.ncells, space.N))
    # mode 0 is the constant (normalized to 1), so its coefficient is the cell value
    coeffs[:, 0] = rng.uniform(-0.5, 0.5, space.mesh.ncells)
    return DGField(space, coeffs)


# ---------------------------------------------------------------- setup

@dataclass
class Setup:
    cfg: ExperimentConfig
    problem: object
    exact: object = None            # callable (x, y, t) or None
    u0: object = None               # callable (x, y) or DGField


def _bc_family(name):
    return {"periodic": "periodic", "i": "i", "ii": "ii", "iii": "iii"}.get(
        str(name).lower(), str(name).lower())


def build_setup(cfg: ExperimentConfig, nx=None, ny=None, scheme=None) -> Setup:
    nx = cfg.nx if nx is None else nx
    ny = cfg.ny if ny is None else ny
    family = _bc_family(cfg.bc)
    boundary = "periodic" if family == "periodic" else "physical"
    mesh = build_rect_mesh(cfg.domain_bounds(), (nx, ny), boundary)
    basis_space = {"p": TOTAL_DEGREE, "q": TENSOR_PRODUCT}.get(cfg.space.lower(), cfg.space)
    space = DGSpace(mesh, cfg.degree, basis_space, cfg.quad_order)

    mms = Manufactured(cfg.mms_k, cfg.eps, cfg.g, cfg.a) if cfg.solution == "mms" else None
    data = mms.boundary_data(family) if (mms and cfg.bc_data == "exact") else {}
    bc = BCSpec(family, cfg.beta0, cfg.beta1, penalty_length=cfg.penalty_length, **data)
    potential = swift_hohenberg(cfg.eps, cfg.g, cfg.B, cfg.a)
    model = ModelSpec(potential, cfg.a, mms.source if mms else None)
    problem = make_problem(space, model, bc, cfg.solver, cfg.tol)

    if cfg.initial == "solution":
        u0 = (lambda x, y: mms.u(x, y, 0.0))
    elif cfg.initial == "sin_quarter":
        u0 = (lambda x, y: np.sin(x / 4) * np.sin(y / 4))
    elif cfg.initial == "strip":
        u0 = strip_initial
    elif cfg.initial == "random":
        u0 = random_initial(space, cfg.seed)
    elif cfg.initial == "zero":
        u0 = (lambda x, y: np.zeros_like(x))
    else:
        c = float(cfg.constant)
        u0 = (lambda x, y: np.full_like(x, c))
    return Setup(cfg, problem, mms.u if mms else None, u0)


# ---------------------------------------------------------------- time loop

@dataclass
class RunResult:
    scheme: str
    dt: float
    state: object
    ledger: list = field(default_factory=list)
    max_outer: int = 0
    linear_solves: int = 0
    wall: float = 0.0
    steady_residual: float = float("nan")
    snapshots: list = field(default_factory=list)


def _stepper(scheme, cfg):
    if scheme == "ieq1":
        return step_first_order
    if scheme == "ieq2":
        return step_second_order
    ctrl = IterationControl(cfg.eta, cfg.max_iters)
    return lambda st, dt: _iterate(st, dt, ctrl, scheme)


def _initial(setup, scheme):
    p = setup.problem
    if scheme.startswith("ieq"):
        return init_state(setup.u0, p)
    return init_baseline(setup.u0, p)


def _initial_row(state, scheme):
    from .baselines import free_energy
    from .ieq import energy
    if scheme.startswith("ieq"):
        E, calE = energy(state)
    else:
        E = calE = free_energy(state.problem, state.u, state.q)
    return [0, 0.0, E, calE, 0.0, 0.0, 0, 0]


def run_scheme(setup: Setup, scheme: str, dt: float, t_end: float, snapshot_dir=None,
               snapshot_every=0) -> RunResult:
    """Advance ``steps`` steps, checking the identity and (optionally) monotonicity."""
    cfg = setup.cfg
    steps = steps_for(t_end, dt)
    step = _stepper(scheme, cfg)
    state = _initial(setup, scheme)
    res = RunResult(scheme, dt, state)
    row0 = _initial_row(state, scheme)
    row0[1] = state.t
    res.ledger.append(row0)
    E_scale = max(abs(row0[2]), 1.0)
    if snapshot_dir is not None and snapshot_every:
        res.snapshots.append(write_snapshot(state.u, state.t, snapshot_dir, 0))
    t0 = time.perf_counter()
    enforce_identity = cfg.check_identity and scheme.startswith("ieq")
    for n in range(1, steps + 1):
        if n == 1 and scheme == "ieq2" and cfg.startup == "first_order":
            state, rep = step_first_order(state, dt)
        else:
            state, rep = step(state, dt)
        res.ledger.append([n, state.t, rep.E_after, rep.calE, rep.decrement,
                           rep.identity_residual, rep.solver_iters, rep.outer_iters])
        res.max_outer = max(res.max_outer, rep.outer_iters)
        res.linear_solves += rep.linear_solves
        if enforce_identity and abs(rep.identity_residual) > cfg.identity_tol * E_scale:
            raise EnergyViolation(f"{scheme} step {n}: energy identity residual "
                                  f"{rep.identity_residual:.3e} exceeds "
                                  f"{cfg.identity_tol:g} * {E_scale:.3e}")
        if cfg.check_energy and not state.problem.forced:
            slack = 10 * cfg.tol * max(abs(rep.E_before), 1.0)
            if rep.E_after > rep.E_before + slack:
                raise EnergyViolation(f"{scheme} step {n}: energy increased from "
                                      f"{rep.E_before!r} to {rep.E_after!r}")
        if snapshot_dir is not None and snapshot_every and n % snapshot_every == 0:
            res.snapshots.append(write_snapshot(state.u, state.t, snapshot_dir, n))
    res.wall = time.perf_counter() - t0
    res.state = state
    last = res.ledger[-1]
    res.steady_residual = math.sqrt(max(last[4], 0.0) / dt) if steps else float("nan")
    return res


# ---------------------------------------------------------------- writers

def write_ledger(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEDGER_HEADER)
        for r in rows:
            w.writerow([r[0], fmt(r[1]), fmt(r[2]), fmt(r[3]), fmt(r[4]), fmt(r[5]),
                        int(r[6]), int(r[7])])
    return path


def error_rows(keys, errors):
    e = np.asarray(errors, dtype=float)
    rows = []
    o2 = eoc(e[:, 0]) if len(e) > 1 else []
    oi = eoc(e[:, 1]) if len(e) > 1 else []
    for j, key in enumerate(keys):
        rows.append([key, e[j, 0], e[j, 1],
                     o2[j - 1] if j else float("nan"), oi[j - 1] if j else float("nan")])
    return rows


def write_error_table(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ERROR_HEADER)
        for key, l2, li, o2, oi in rows:
            k = str(key) if isinstance(key, (int, np.integer)) else fmt(key)
            w.writerow([k, fmt(l2), fmt(li), "" if math.isnan(o2) else fmt(o2),
                        "" if math.isnan(oi) else fmt(oi)])
    return path


def write_snapshot(u: DGField, t, directory, step):
    """Values at the quadrature nodes in lexicographic (y, then x) order."""
    space = u.space
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"snapshot_{step:07d}.csv"
    nx, ny = space.mesh.counts
    X = space.cell_nodes.reshape(-1, space.dim)
    vals = u.nodal().reshape(-1)
    order = np.lexsort((X[:, 0], X[:, 1]))
    with path.open("w") as fh:
        fh.write(f"# t={fmt(t)} nx={nx} ny={ny} samples_per_cell={space.Q}\n")
        fh.write("x,y,u\n")
        for i in order:
            fh.write(f"{fmt(X[i, 0])},{fmt(X[i, 1])},{fmt(vals[i])}\n")
    return path


def read_snapshot(path):
    """(header dict, array of rows x, y, u)."""
    with open(path) as fh:
        head = fh.readline().lstrip("#").split()
        meta = dict(item.split("=", 1) for item in head)
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    return meta, data


def _save_config(cfg):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_config(cfg))
    return out


def _measure(cfg, field_, exact, t):
    order = cfg.error_order if cfg.error_order else None
    return error_norms(field_, exact, t, order=order, endpoints=cfg.error_endpoints)


# ---------------------------------------------------------------- studies

def run_single(cfg: ExperimentConfig):
    out = _save_config(cfg)
    setup = build_setup(cfg)
    snap = out / "snapshots" if cfg.snapshot_every else None
    res = run_scheme(setup, cfg.scheme, cfg.dt, cfg.t_end, snap, cfg.snapshot_every)
    write_ledger(res.ledger, out / "energy.csv")
    summary = {"scheme": cfg.scheme, "dt": cfg.dt, "steps": len(res.ledger) - 1,
               "max_outer_iters": res.max_outer, "linear_solves": res.linear_solves,
               "wall_seconds": res.wall, "steady_residual": res.steady_residual}
    if setup.exact is not None:
        l2, li = _measure(cfg, res.state.u, setup.exact, res.state.t)
        summary.update(L2=l2, Linf=li)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return res


def run_convergence_space(cfg: ExperimentConfig):
    """Errors against the manufactured solution on each mesh of ``cfg.meshes``."""
    if cfg.solution != "mms":
        raise ConfigError("spatial convergence needs a manufactured solution (solution = mms)")
    out = _save_config(cfg)
    errors, ledgers = [], {}
    for N in cfg.meshes:
        setup = build_setup(cfg, N, N)
        res = run_scheme(setup, cfg.scheme, cfg.dt, cfg.t_end)
        write_ledger(res.ledger, out / f"energy_N{N}.csv")
        ledgers[N] = res.ledger
        errors.append(_measure(cfg, res.state.u, setup.exact, res.state.t))
        log.info("N=%d  L2=%.6e  Linf=%.6e  (%.1fs)", N, *errors[-1], res.wall)
    rows = error_rows(list(cfg.meshes), errors)
    write_error_table(rows, out / "errors.csv")
    return rows, ledgers


def run_convergence_time(cfg: ExperimentConfig, scheme=None):
    """Errors over ``cfg.dts`` against the exact solution or a fine-step reference."""
    scheme = scheme or cfg.scheme
    out = _save_config(cfg)
    setup = build_setup(cfg)
    if not cfg.dts:
        raise ConfigError("time convergence needs a list of time steps (dts)")
    ledgers = {}
    if setup.exact is None:
        if cfg.dt_ref is None:
            raise ConfigError("without an exact solution a reference step dt_ref is required")
        ref = run_scheme(setup, scheme, cfg.dt_ref, cfg.t_end)
        ledgers["ref"] = ref.ledger
        ref_u = ref.state.u
        target = lambda x, y, t: 0.0 * x           # errors of the difference field
    errors = []
    for dt in cfg.dts:
        res = run_scheme(setup, scheme, dt, cfg.t_end)
        ledgers[dt] = res.ledger
        write_ledger(res.ledger, out / f"energy_{scheme}_dt{dt:.6g}.csv")
        if setup.exact is None:
            diff = DGField(ref_u.space, res.state.u.coeffs - ref_u.coeffs)
            errors.append(_measure(cfg, diff, target, res.state.t))
        else:
            errors.append(_measure(cfg, res.state.u, setup.exact, res.state.t))
        log.info("%s dt=%g  L2=%.6e  Linf=%.6e  outer<=%d", scheme, dt, *errors[-1], res.max_outer)
    rows = error_rows(list(cfg.dts), errors)
    write_error_table(rows, out / f"errors_{scheme}.csv")
    return rows, ledgers


def run_energy_study(cfg: ExperimentConfig):
    """One ledger per time step; any energy increase beyond round-off aborts."""
    cfg = replace(cfg, check_energy=True)
    out = _save_config(cfg)
    setup = build_setup(cfg)
    results = {}
    for dt in (cfg.dts or (cfg.dt,)):
        res = run_scheme(setup, cfg.scheme, dt, cfg.t_end)
        write_ledger(res.ledger, out / f"energy_dt{dt:.6g}.csv")
        results[dt] = res
    return results


def run_pattern(cfg: ExperimentConfig):
    """Long run with snapshots; reports the final ||u^{n+1} - u^n|| / dt."""
    out = _save_config(cfg)
    setup = build_setup(cfg)
    res = run_scheme(setup, cfg.scheme, cfg.dt, cfg.t_end, out / "snapshots", cfg.snapshot_every)
    write_ledger(res.ledger, out / "energy.csv")
    summary = {"seed": cfg.seed, "steps": len(res.ledger) - 1,
               "steady_residual": res.steady_residual,
               "steady": bool(res.steady_residual < cfg.steady_tol),
               "final_calE": res.ledger[-1][3]}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return res


COMPARISON_HEADER = ["scheme", "dt", "steps", "max_outer_iters", "linear_solves", "wall_seconds"]


def run_scheme_comparison(cfg: ExperimentConfig):
    """Outer-iteration maxima per scheme and time step (wall time informational)."""
    out = _save_config(cfg)
    rows = []
    for scheme in cfg.schemes:
        setup = build_setup(cfg)      # B only enters the IEQ variable
        for dt in (cfg.dts or (cfg.dt,)):
            res = run_scheme(setup, scheme, dt, cfg.t_end)
            write_ledger(res.ledger, out / f"energy_{scheme}_dt{dt:.6g}.csv")
            rows.append([scheme, dt, len(res.ledger) - 1, res.max_outer, res.linear_solves, res.wall])
            log.info("%s dt=%g outer<=%d solves=%d (%.1fs)", scheme, dt, res.max_outer,
                     res.linear_solves, res.wall)
    path = out / "comparison.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARISON_HEADER)
        for s, dt, steps, mo, ls, wall in rows:
            w.writerow([s, fmt(dt), steps, mo, ls, format(wall, ".3f")])
    return rows


def run(cfg: ExperimentConfig):
    """Dispatch on ``cfg.study``."""
    return {
        "single": run_single,
        "space": run_convergence_space,
        "time": run_convergence_time,
        "energy": run_energy_study,
        "pattern": run_pattern,
        "compare": run_scheme_comparison,
    }[cfg.study](cfg)

"""Command-line experiment runner.

Settings come from a flat ``key=value`` file (``--config``) and from
flags; a flag overrides the file.  Every run writes ``manifest.json`` with
the resolved configuration next to its CSV outputs.

Exit codes: 0 ok, 1 configuration error, 2 numerical abort,
3 validation failure.
"""

import argparse
from dataclasses import asdict, dataclass, field, fields
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from . import diagnostics as diag
from .equilibria import (FUNDAMENTAL_MASS, EquilibriumParams, beta_from_mass,
                         befp_fundamental, bose_einstein, fp_maxwellian)
from .fp_exact import fp_propagate_radial, fp_radial_kernel
from .numeric2d import (Field2D, Grid2D, NumericalAbort, StepTooLarge,
                        sample_radial, solve_numeric)
from .radial_solver import (RadialInitialCondition, decay_history,
                            direct_quotient, sandwich_check, solve_radial_exact)
from .transform import (BEFP, FP, RadialGrid, RadialProfile, l1_distance,
                        lambda_forward, lambda_inverse, mass_f_from_M)

log = logging.getLogger("befp")

MODES = ("equilibrium", "radial-exact", "numeric-2d", "convergence-study", "validate")
RADIAL_ICS = ("dirac", "gaussian", "equilibrium", "fundamental", "random")
FIELD_ICS = ("gaussian", "two-bump", "equilibrium", "random")

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_VALIDATION = 0, 1, 2, 3

MIN_ORDER = 1.8


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "radial-exact"
    ic: str = "dirac"
    mass: float = None
    beta: float = 2.0
    grid_n: int = 128
    grid_l: float = 8.0
    radial_n: int = 4000
    radial_rmax: float = 8.0
    times: list = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0])
    dt: float = None
    t_end: float = None
    out: str = "befp-out"
    seed: int = 0
    tol: float = 1e-8

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode: {self.mode!r} is not one of {', '.join(MODES)}")
        ics = FIELD_ICS if self.mode in ("numeric-2d",) else RADIAL_ICS
        if self.mode in ("radial-exact", "numeric-2d") and self.ic not in ics:
            raise ConfigError(f"ic: {self.ic!r} is not valid for mode {self.mode}; choose from {', '.join(ics)}")
        if self.mass is not None and not self.mass > 0:
            raise ConfigError("mass: must be positive")
        if not self.beta > 1:
            raise ConfigError("beta: must exceed 1")
        if self.grid_n < 2 or self.grid_n % 2:
            raise ConfigError("grid-n: must be a positive even integer")
        if self.mode == "convergence-study" and self.grid_n % 8:
            raise ConfigError("grid-n: must be divisible by 8 for the convergence study")
        if not self.grid_l > 0:
            raise ConfigError("grid-l: must be positive")
        if self.radial_n < 2:
            raise ConfigError("radial-n: must be at least 2")
        if not self.radial_rmax > 0:
            raise ConfigError("radial-rmax: must be positive")
        if not self.times or any(t < 0 for t in self.times) or any(
                b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigError("times: must be a non-empty increasing list of non-negative numbers")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt: must be positive")
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigError("t-end: must be positive")
        if not self.tol > 0:
            raise ConfigError("tol: must be positive")
        return self


_DEFAULTS = ExperimentConfig()
_CONVERTERS = {
    "mode": str, "ic": str, "out": str,
    "mass": float, "beta": float, "grid_l": float, "radial_rmax": float,
    "dt": float, "t_end": float, "tol": float,
    "grid_n": int, "radial_n": int, "seed": int,
    "times": lambda s: [float(x) for x in s.replace(",", " ").split()],
}


def _convert(key, raw):
    try:
        return _CONVERTERS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"{key.replace('_', '-')}: cannot parse {raw!r} ({exc})") from None


def read_config_file(path):
    """Parse ``key=value`` lines; ``#`` starts a comment.  Unknown keys are errors."""
    if not os.path.exists(path):
        raise ConfigError(f"config: file {path!r} does not exist")
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno}: expected key=value, got {line!r}")
            key, raw = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CONVERTERS:
                raise ConfigError(f"config line {lineno}: unknown key {key.replace('_', '-')!r}")
            values[key] = _convert(key, raw)
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    d = _DEFAULTS
    p = _Parser(prog="befp", description="Exact and numerical solutions of the 2D Bose-Einstein-Fokker-Planck equation.")
    p.add_argument("--config", help="key=value settings file (flags win over file values)")
    p.add_argument("--mode", help=f"one of {', '.join(MODES)} (default {d.mode})")
    p.add_argument("--ic", help=f"initial condition: radial {', '.join(RADIAL_ICS)}; 2D {', '.join(FIELD_ICS)} (default {d.ic})")
    p.add_argument("--mass", help="BEFP mass of the initial datum (default depends on --ic)")
    p.add_argument("--beta", help=f"equilibrium parameter > 1 (default {d.beta})")
    p.add_argument("--grid-n", help=f"2D cells per side, even (default {d.grid_n})")
    p.add_argument("--grid-l", help=f"2D half-width (default {d.grid_l})")
    p.add_argument("--radial-n", help=f"radial intervals (default {d.radial_n})")
    p.add_argument("--radial-rmax", help=f"radial truncation radius (default {d.radial_rmax})")
    p.add_argument("--times", help="snapshot times, comma separated (default 0.5,1,1.5,2,3,4,5,6)")
    p.add_argument("--dt", help="fixed 2D time step (default: 0.9 x stability bound)")
    p.add_argument("--t-end", help="final 2D time (default: last snapshot time)")
    p.add_argument("--out", help=f"output directory (default {d.out})")
    p.add_argument("--seed", help=f"RNG seed for random initial data (default {d.seed})")
    p.add_argument("--tol", help=f"tolerance for validation checks (default {d.tol})")
    p.add_argument("--version", action="version", version=f"befp {__version__}")
    return p


def parse_config(argv=None):
    """Resolve defaults, then the config file, then flags."""
    args = build_parser().parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    for f in fields(ExperimentConfig):
        raw = getattr(args, f.name, None)
        if raw is None:
            continue
        value = _convert(f.name, raw)
        if f.name in values and values[f.name] != value:
            log.warning("flag --%s=%s overrides config file value %r", f.name.replace("_", "-"), raw, values[f.name])
        values[f.name] = value
    return ExperimentConfig(**values).validate()


# ---------------------------------------------------------------------------
# initial data


def _default_mass(cfg):
    if cfg.mass is not None:
        return cfg.mass
    return FUNDAMENTAL_MASS if cfg.ic == "dirac" else 3.0


def _random_radial(grid, mass, seed):
    rng = np.random.default_rng(seed)
    r = grid.nodes
    d = np.zeros_like(r)
    for _ in range(3):
        c, w, a = rng.uniform(0.0, 3.0), rng.uniform(0.3, 1.5), rng.uniform(0.2, 1.0)
        d += a * np.exp(-0.5 * ((r - c) / w) ** 2)
    p = RadialProfile.from_density(grid, d, kind=BEFP)
    return p.replace(values=p.values * (mass / p.mass()))


def radial_initial(cfg, grid):
    m = _default_mass(cfg)
    if cfg.ic == "random":
        return _random_radial(grid, m, cfg.seed)
    if cfg.ic == "gaussian":
        return RadialInitialCondition("gaussian", center=1.5, width=0.5, mass=m).on(grid)
    if cfg.ic == "equilibrium":
        return RadialInitialCondition("equilibrium", beta=cfg.beta).on(grid)
    if cfg.ic == "fundamental":
        return RadialInitialCondition("fundamental", t0=0.1).on(grid)
    return RadialInitialCondition("dirac", mass=m).on(grid)


def two_bump(x, y):
    return (np.exp(-((x - 2.0) ** 2 + (y - 1.0) ** 2) / 0.5)
            + 0.7 * np.exp(-((x + 1.5) ** 2 + (y + 2.0) ** 2) / 0.8))


def field_initial(cfg, grid):
    m = _default_mass(cfg)
    if cfg.ic == "equilibrium":
        return Field2D(grid, bose_einstein(cfg.beta, grid.radii()))
    if cfg.ic == "gaussian":
        shape = Field2D(grid, np.exp(-0.5 * grid.radii() ** 2))
    elif cfg.ic == "two-bump":
        shape = Field2D.from_function(grid, two_bump)
    else:
        rng = np.random.default_rng(cfg.seed)
        xx, yy = grid.mesh()
        v = np.zeros_like(xx)
        for _ in range(4):
            cx, cy = rng.uniform(-3.0, 3.0, size=2)
            w = rng.uniform(0.4, 1.2)
            v += rng.uniform(0.2, 1.0) * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * w * w))
        shape = Field2D(grid, v)
    return Field2D(grid, shape.values * (m / shape.mass()))


# ---------------------------------------------------------------------------
# modes


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(x):
    return f"{x:.10g}"


def run_equilibrium(cfg, out):
    params = EquilibriumParams.from_beta(cfg.beta)
    grid = RadialGrid.uniform(cfg.radial_rmax, cfg.radial_n)
    eq = RadialProfile.from_density(grid, lambda r: bose_einstein(cfg.beta, r), kind=BEFP)
    eq.to_csv(os.path.join(out, "equilibrium.csv"))
    rep = diag.ck_bound(eq, cfg.beta)
    with open(os.path.join(out, "entropy_report.json"), "w") as fh:
        fh.write(rep.to_json() + "\n")
    lines = [
        f"beta                 {_fmt(params.beta)}",
        f"mass m (closed form) {_fmt(params.mass_m)}",
        f"mass m (quadrature)  {_fmt(eq.mass())}",
        f"FP mass M            {_fmt(params.mass_M)}",
        f"entropy H            {_fmt(rep.H)}",
        f"dissipation D        {_fmt(rep.D)}",
        f"CK constant C        {_fmt(rep.ck_constant)}",
    ]
    return lines, EXIT_OK


def _fit_or_none(history):
    late = [(t, d) for t, d in history if t >= 1.0]
    pts = late if len(late) >= 4 else history
    try:
        return diag.fit_decay_rate(pts)
    except ValueError:
        return None


def run_radial(cfg, out):
    grid = RadialGrid.uniform(cfg.radial_rmax, cfg.radial_n)
    f0 = radial_initial(cfg, grid)
    traj = solve_radial_exact(f0, cfg.times)
    traj.to_csv(os.path.join(out, "trajectory.csv"), os.path.join(out, "diagnostics.csv"))
    m = f0.mass()
    beta = beta_from_mass(m)
    hist = decay_history(traj, beta)
    fit = _fit_or_none(hist)
    last = traj.snapshots[-1]
    rep = diag.ck_bound(last, beta, mass_tol=max(cfg.tol, 1e-6))
    with open(os.path.join(out, "entropy_report.json"), "w") as fh:
        fh.write(rep.to_json() + "\n")
    drift = max(abs(row["mass"] - m) for row in traj.diagnostics)
    lines = [
        f"initial condition    {cfg.ic}",
        f"mass m               {_fmt(m)}",
        f"beta(m)              {_fmt(beta)}",
        f"max mass drift       {drift:.3e}",
    ]
    if fit is not None:
        lines.append(f"decay slope          {fit.slope:.6f}  (r^2 {fit.r2:.6f}, {fit.n_points} points)")
    else:
        lines.append("decay slope          n/a (fewer than 4 usable times)")
    lines.append(f"CK lhs / rhs         {_fmt(rep.ck_lhs)} / {_fmt(rep.ck_rhs)}  margin {_fmt(rep.ck_lhs - rep.ck_rhs)}")
    return lines, EXIT_OK


def run_numeric(cfg, out):
    grid = Grid2D(cfg.grid_l, cfg.grid_n)
    f0 = field_initial(cfg, grid)
    t_end = cfg.t_end if cfg.t_end is not None else max(cfg.times)
    snaps = [0.0] + [t for t in cfg.times if 0 < t <= t_end]
    traj = solve_numeric(f0, t_end, dt=cfg.dt, snapshot_times=snaps)
    traj.to_csv(os.path.join(out, "trajectory.csv"), os.path.join(out, "diagnostics.csv"))
    last = traj.snapshots[-1]
    last.to_csv(os.path.join(out, "final_field.csv"))
    last.to_binary(os.path.join(out, "final_field.bin"))
    dist = [row["l1_to_eq"] for row in traj.diagnostics]
    lines = [
        f"initial condition    {cfg.ic}",
        f"grid                 n={grid.n} L={_fmt(grid.L)} h={_fmt(grid.h)}",
        f"steps                {traj.n_steps}",
        f"mass                 {_fmt(f0.mass())} -> {_fmt(last.mass())}",
        f"max step mass drift  {traj.max_step_mass_drift:.3e}",
        f"min cell value       {traj.min_value:.3e}",
        f"L1 to equilibrium    {_fmt(dist[0])} -> {_fmt(dist[-1])}",
    ]
    return lines, EXIT_OK


def convergence_study(n_values, grid_l=8.0, mass=3.0, t=1.0, radial_n=3000):
    """L1 error of the 2D solver against the exact radial solution at ``t``."""
    rmax = grid_l * math.sqrt(2.0) + 0.5
    rgrid = RadialGrid.uniform(rmax, radial_n)
    ic = RadialInitialCondition("gaussian", center=0.0, width=1.0, mass=mass)
    f0r = ic.on(rgrid)
    exact = solve_radial_exact(f0r, [t], with_diagnostics=False).snapshots[0]
    rows = []
    for n in n_values:
        grid = Grid2D(grid_l, n)
        traj = solve_numeric(sample_radial(grid, f0r), t)
        err = diag.l1_distance(traj.snapshots[-1], sample_radial(grid, exact))
        rows.append({"n": n, "h": grid.h, "l1_error": err, "steps": traj.n_steps,
                     "max_step_mass_drift": traj.max_step_mass_drift, "min_value": traj.min_value})
    for prev, cur in zip(rows, rows[1:]):
        cur["order"] = math.log(prev["l1_error"] / cur["l1_error"]) / math.log(prev["h"] / cur["h"])
    return rows


def run_convergence(cfg, out):
    ns = [cfg.grid_n // 4, cfg.grid_n // 2, cfg.grid_n]
    t = cfg.t_end if cfg.t_end is not None else 1.0
    rows = convergence_study(ns, cfg.grid_l, cfg.mass if cfg.mass is not None else 3.0, t)
    with open(os.path.join(out, "convergence.csv"), "w") as fh:
        fh.write("n,h,l1_error,order,steps,max_step_mass_drift\n")
        for r in rows:
            vals = [r["h"], r["l1_error"], r.get("order", math.nan)]
            fh.write(f"{r['n']}," + ",".join(repr(float(v)) for v in vals)
                     + f",{r['steps']},{float(r['max_step_mass_drift'])!r}\n")
    orders = [r["order"] for r in rows[1:]]
    lines = [f"n={r['n']:<5d} h={r['h']:.5f}  L1 error {r['l1_error']:.4e}"
             + (f"  order {r['order']:.3f}" if "order" in r else "") for r in rows]
    lines.append(f"observed order       {min(orders):.3f} (required >= {MIN_ORDER})")
    return lines, EXIT_OK if min(orders) >= MIN_ORDER else EXIT_VALIDATION


def validation_checks(tol=1e-8, radial_n=2000, rmax=8.0):
    """Fast self-test of the exact machinery: ``[(name, value, limit, ok)]``."""
    grid = RadialGrid.uniform(rmax, radial_n)
    r = grid.nodes
    rng = np.random.default_rng(0)
    results = []

    def check(name, value, limit):
        results.append((name, float(value), float(limit), bool(value <= limit)))

    worst = 0.0
    for _ in range(10):
        c, w = rng.uniform(0, 3, 3), rng.uniform(0.3, 1.5, 3)
        d = sum(rng.uniform(0.1, 1.0) * np.exp(-0.5 * ((r - c[k]) / w[k]) ** 2) for k in range(3))
        p = RadialProfile.from_density(grid, d, kind=BEFP)
        worst = max(worst, np.abs(lambda_forward(lambda_inverse(p)).values - p.values).max())
    check("transform round trip (max abs)", worst, 1e-10)

    worst = 0.0
    for M in (0.1, 1.0, 2 * math.pi, 50.0):
        g = RadialProfile.from_density(grid, lambda x: fp_maxwellian(M, x))
        f = lambda_forward(g)
        worst = max(worst, np.abs(f.values - r * bose_einstein(2 * math.pi / M + 1, r)).max())
        check(f"mass relation M={M:g}", abs(f.mass() - mass_f_from_M(g.mass())), tol)
    check("equilibrium mapping (max abs)", worst, 1e-9)

    beta = 2.0
    fr = bose_einstein(beta, r)
    stat = np.abs(-fr * fr * beta * r * np.exp(0.5 * r * r) + r * fr * (1 + fr)).max()
    check("stationarity identity", stat, 1e-8)

    s_vals = (0.0, 1.0, 2.5)
    fine = RadialGrid.uniform(12.0, 4000)
    norm = max(abs(fine.node_weights @ (fine.nodes * fp_radial_kernel(0.7, fine.nodes, s)) - 1.0) for s in s_vals)
    check("radial kernel normalisation", norm, 1e-9)

    dirac = RadialProfile(grid, np.zeros_like(r), atom=1.0 / (2 * math.pi), kind=FP)
    worst = 0.0
    for t in (0.25, 1.0, 4.0):
        g = fp_propagate_radial(dirac, t)
        f = lambda_forward(g)
        exact = RadialProfile.from_density(grid, lambda x: befp_fundamental(t, x), kind=BEFP)
        worst = max(worst, l1_distance(f, exact))
        sandwich_check(f, g, g.mass(), f.mass())
        worst_q = np.abs(direct_quotient(g).values - f.values).max()
        check(f"direct quotient t={t:g}", worst_q, 1e-12)
    check("fundamental solution L1", worst, 1e-7)

    fb = RadialProfile.from_density(grid, lambda x: bose_einstein(beta, x), kind=BEFP)
    traj = solve_radial_exact(fb, [1.0, 4.0], with_diagnostics=False)
    check("equilibrium is stationary (L1)", max(l1_distance(s, fb) for s in traj.snapshots), 1e-9)
    return results


def run_validate(cfg, out):
    results = validation_checks(cfg.tol)
    with open(os.path.join(out, "validation.csv"), "w") as fh:
        fh.write("check,value,limit,pass\n")
        for name, value, limit, ok in results:
            fh.write(f"{name},{float(value)!r},{float(limit)!r},{ok}\n")
    width = max(len(n) for n, *_ in results)
    lines = [f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {value:.3e} <= {limit:.1e}"
             for name, value, limit, ok in results]
    failed = sum(not ok for *_, ok in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return lines, EXIT_OK if failed == 0 else EXIT_VALIDATION


RUNNERS = {
    "equilibrium": run_equilibrium,
    "radial-exact": run_radial,
    "numeric-2d": run_numeric,
    "convergence-study": run_convergence,
    "validate": run_validate,
}


def run(cfg):
    """Execute ``cfg``; returns the exit status."""
    os.makedirs(cfg.out, exist_ok=True)
    _write_json(os.path.join(cfg.out, "manifest.json"),
                {"tool": "befp", "version": __version__, "config": asdict(cfg)})
    try:
        lines, status = RUNNERS[cfg.mode](cfg, cfg.out)
    except (NumericalAbort, StepTooLarge, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    report = "\n".join([f"befp {__version__}  mode={cfg.mode}"] + lines) + "\n"
    with open(os.path.join(cfg.out, "summary.txt"), "w") as fh:
        fh.write(report)
    sys.stdout.write(report)
    return status


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

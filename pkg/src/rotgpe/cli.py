"""Command line entry point: ``rotgpe <subcommand> ...``.

Exit codes: 0 ok, 1 check failure, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import warnings

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .evolve import EvolveConfig, NumericalAbort, evolve, extinction_experiment, write_records_csv
from .functionals import Params, Regime, mass
from .grid import GridSpec, random_smooth_field, read_field, write_field
from .minimize import (
    FlowAbort,
    FlowConfig,
    NonexistenceRegime,
    Seed,
    ground_state,
    ground_state_magnetic,
    ground_state_radial,
    seed_field,
    stability_probe,
)
from .trials import TRIAL_SWEEP_HEADER, VortexTrial, vortex_energy_curve, vortex_field

log = logging.getLogger("rotgpe")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3


def _write_manifest(out_dir, argv, rc: RunConfig | None, extra=()):
    os.makedirs(out_dir or ".", exist_ok=True)
    path = os.path.join(out_dir or ".", "manifest.txt")
    with open(path, "w") as fh:
        fh.write("# rotgpe run manifest\n")
        fh.write(f"# command = rotgpe {' '.join(argv)}\n")
        fh.write(f"# numpy = {np.__version__}\n")
        for key, val in extra:
            fh.write(f"# {key} = {val}\n")
        if rc is not None:
            fh.write(rc.resolved_text())
    return path


def _out_dir_of(path):
    return os.path.dirname(os.path.abspath(path))


def _initial_state(rc: RunConfig) -> object:
    """Build the initial field from the ``[initial]`` section."""
    p, grid = rc.params, rc.grid
    kind, _, value = rc.initial.partition(":")
    if kind == "file":
        f = read_field(value)
        if f.grid != grid:
            raise ConfigError(f"field file grid {f.grid} differs from configured grid {grid}", key="kind")
        f = f.with_values(f.values)
    else:
        if kind == "gaussian":
            seed = Seed("gaussian", p.gamma / 2 if value in ("", "auto") else float(value))
        elif kind == "vortex":
            seed = Seed("vortex", int(value or 0))
        else:
            seed = Seed("random", int(value) if value else rc.seed)
        f = seed_field(seed, grid, p)
    f = f * rc.initial_amplitude
    if rc.initial_perturbation:
        rng = np.random.default_rng(rc.seed)
        g = random_smooth_field(grid, rng, degree=2, width=0.7 / math.sqrt(p.gamma))
        f = f + g * (rc.initial_perturbation * math.sqrt(mass(f) / mass(g)))
    return f


# ----------------------------------------------------------------------------
# subcommands


def cmd_evolve(args, argv):
    rc = load_config(args.config)
    if rc.evolve is None:
        raise ConfigError("the evolve subcommand needs an [evolve] section")
    if rc.evolve.linear_mode:
        raise ConfigError("linear_mode is reserved for the verify subcommand", key="linear_mode")
    f0 = _initial_state(rc)
    dump_dir = args.dump_dir
    hook = None
    if args.dump_every:
        dump_dir = dump_dir or os.path.join(_out_dir_of(args.out), "dumps")
        os.makedirs(dump_dir, exist_ok=True)

        def hook(step, t, state):
            if step % args.dump_every == 0 or step == rc.evolve.n_steps:
                write_field(os.path.join(dump_dir, f"state_{step:08d}.rgf"), state)

    _write_manifest(_out_dir_of(args.out), argv, rc)
    traj = evolve(f0, rc.params, rc.evolve, hook=hook, hook_every=args.dump_every)
    write_records_csv(args.out, traj.records)
    log.info("wrote %d records to %s", len(traj.records), args.out)
    return EXIT_OK


MINIMIZE_DEFAULTS = {
    "sub": dict(gamma=1.0, omega_rot=0.5),
    "critical": dict(gamma=0.1),
    "critical-radial": dict(gamma=0.1),
}


def _minimize_config(args) -> RunConfig:
    if args.config:
        rc = load_config(args.config)
        p = rc.params
        if args.rho is not None:
            p = p.replace(rho=args.rho)
    else:
        base = MINIMIZE_DEFAULTS[args.regime]
        p = Params(gamma=base["gamma"], omega_rot=base.get("omega_rot", 0.0), rho=args.rho or 1.0)
        if args.regime != "sub":
            p = p.replace(omega_rot=p.gamma)  # assignment keeps the regime exact
        rc = RunConfig(params=p, grid=GridSpec(12.0, 256))
    want = Regime.SUB if args.regime == "sub" else Regime.CRITICAL
    if p.regime is Regime.SUPER:
        raise NonexistenceRegime(f"Omega = {p.omega_rot} > gamma = {p.gamma}: no ground state exists")
    if p.regime is not want:
        raise ConfigError(f"--regime {args.regime} needs regime {want.value}, configuration gives "
                          f"{p.regime.value}", key="omega_rot")
    flow = rc.flow or FlowConfig()
    if args.seed:
        try:
            seed = Seed.parse(args.seed)
        except ValueError as exc:
            raise ConfigError(str(exc), key="seed") from None
        flow = FlowConfig(flow.tau, flow.tol_energy, flow.tol_residual, flow.max_iter, seed, flow.alpha)
    rc.params, rc.flow = p, flow
    return rc


def cmd_minimize(args, argv):
    rc = _minimize_config(args)
    os.makedirs(args.out, exist_ok=True)
    _write_manifest(args.out, argv, rc, extra=[("regime_flag", args.regime)])
    p, flow = rc.params, rc.flow
    if args.regime == "sub":
        res = ground_state(p, flow, rc.grid)
    elif args.regime == "critical":
        res = ground_state_magnetic(p, flow, rc.grid)
    else:
        res = ground_state_radial(p, flow, r_max=args.r_max, m=args.radial_cells)
    with open(os.path.join(args.out, "result.csv"), "w") as fh:
        fh.write("key,value\n")
        for key, val in res.summary_rows():
            fh.write(f"{key},{val!r}\n")
    if args.regime == "critical-radial":
        with open(os.path.join(args.out, "profile.csv"), "w") as fh:
            fh.write("r,value\n")
            for r, v in zip(res.state.r, res.state.values):
                fh.write(f"{r!r},{float(v)!r}\n")
    else:
        write_field(os.path.join(args.out, "ground_state.rgf"), res.state)
    print(f"energy = {res.energy:.12g}  omega = {res.omega:.12g}  residual = {res.residual:.3e}  "
          f"iterations = {res.iterations}  converged = {res.converged}")
    return EXIT_OK if res.converged else EXIT_CHECK


def cmd_trial_sweep(args, argv):
    if args.config:
        rc = load_config(args.config)
    else:
        rc = RunConfig(params=Params(gamma=1.0, gamma0=1.0, omega_rot=2.0, rho=1.0), grid=GridSpec(12.0, 256))
    _write_manifest(_out_dir_of(args.out), argv, rc, extra=[("m_max", args.m_max)])
    curve = vortex_energy_curve(rc.params, args.m_max)
    with open(args.out, "w") as fh:
        fh.write(TRIAL_SWEEP_HEADER + "\n")
        for row in curve:
            fh.write(row.csv_row() + "\n")
    return EXIT_OK


def cmd_stability(args, argv):
    if args.config:
        rc = load_config(args.config)
    else:
        rc = RunConfig(params=Params(gamma=1.0, omega_rot=0.5, rho=1.0), grid=GridSpec(8.0, 64))
    dt = rc.evolve.dt if rc.evolve else args.dt
    log_every = rc.evolve.log_every if rc.evolve else 100
    _write_manifest(_out_dir_of(args.out), argv, rc,
                    extra=[("delta", args.delta), ("t_end", args.t_end), ("dt", dt)])
    rep = stability_probe(rc.params, rc.flow or FlowConfig(), args.delta, args.t_end, rc.grid,
                          dt=dt, log_every=log_every, perturbation_seed=rc.seed or 1)
    with open(args.out, "w") as fh:
        fh.write("t,orbit_distance\n")
        for t, d in rep.trace:
            fh.write(f"{t!r},{d!r}\n")
    bound = 10 * args.delta if args.delta > 0 else 1e-6
    print(f"sup orbit distance = {rep.sup_orbit_distance:.3e} (bound {bound:.1e}), "
          f"ground residual = {rep.ground_residual:.2e}")
    return EXIT_OK if rep.sup_orbit_distance < bound else EXIT_CHECK


def cmd_decay(args, argv):
    rc = load_config(args.config)
    if rc.params.k3 <= 0:
        raise ConfigError("the decay subcommand needs k3 > 0", key="k3")
    if rc.evolve is None:
        raise ConfigError("the decay subcommand needs an [evolve] section")
    if rc.evolve.linear_mode:
        raise ConfigError("linear_mode is reserved for the verify subcommand", key="linear_mode")
    _write_manifest(_out_dir_of(args.out), argv, rc)
    rep = extinction_experiment(_initial_state(rc), rc.params, rc.evolve,
                                t_start=args.t_start, slope_from=args.slope_from)
    write_records_csv(args.out, rep.trajectory.records)
    ok = rep.strictly_decreasing and rep.late_slope <= 0 and rep.ode_dominates
    print(f"strictly decreasing = {rep.strictly_decreasing}  sup t^(1/4) M = {rep.fitted_bound:.4g}  "
          f"late slope = {rep.late_slope:.4f}  mass-law residual = {rep.mass_law_max:.2e}  "
          f"ODE bound holds = {rep.ode_dominates}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_verify(args, argv):
    from .verify import run_checks

    _write_manifest(args.out, argv, None,
                    extra=[("filter", args.filter), ("fault_quadrature", args.fault_quadrature)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        outcomes, first = run_checks(args.filter, args.fault_quadrature)
    if not outcomes:
        print(f"no check matches filter {args.filter!r}")
        return EXIT_CHECK
    return EXIT_OK if first is None else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotgpe", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="split-step time evolution from an INI config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="observables CSV")
    p.add_argument("--dump-every", type=int, default=0, help="write a field dump every N steps")
    p.add_argument("--dump-dir", default=None)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("minimize", help="ground state by normalised gradient flow")
    p.add_argument("--regime", choices=["sub", "critical", "critical-radial"], required=True)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--seed", default=None, help="gaussian:b, vortex:m or random:seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", default=None)
    p.add_argument("--r-max", type=float, default=25.0, help="radial solver domain")
    p.add_argument("--radial-cells", type=int, default=5000)
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("trial-sweep", help="energies of vortex trial states against winding number")
    p.add_argument("--config", default=None)
    p.add_argument("--m-max", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trial_sweep)

    p = sub.add_parser("stability", help="orbit distance of a perturbed ground state")
    p.add_argument("--config", default=None)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("decay", help="three-body loss run with the extinction checks")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--t-start", type=float, default=1.0)
    p.add_argument("--slope-from", type=float, default=10.0)
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("verify", help="closed-form and identity self-checks")
    p.add_argument("--filter", default=None, help="substring of the check names to run")
    p.add_argument("--fault-quadrature", type=float, default=None, metavar="SCALE",
                   help="multiply every quadrature weight by SCALE (fault injection)")
    p.add_argument("--out", default=".", help="directory for manifest.txt")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonexistenceRegime as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalAbort, FlowAbort) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

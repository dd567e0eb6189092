"""Command-line entry point.

    dqap-lab <experiment> --config <file> [--jobs N] [--out DIR] [--seed S]
    dqap-lab oracle --L 6 [--layers 2] [--mode real] [--boundary apbc]

The first form runs an experiment described by a JSON config and writes
CSV tables plus manifest.json.  The second form cross-checks the
determinant algebra against the brute-force occupation-basis route on a
random circuit and prints a small report.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .ansatz import DqapParams, ImagParams, build_dqap_state, build_imag_state
from .entanglement import Subsystem, entanglement_entropy
from .errors import ConfigError, DqapError
from .experiments import KINDS, ExperimentConfig, run_experiment
from .fock import FockBasis, fock_entropy, fock_expectation, slater_to_fock
from .lattice import LatticeSpec, build_hamiltonian, exact_ground_state
from .slater import SlaterState, energy_expectation, overlap

_ORACLE_TOL = 1e-10


def _add_experiment_parsers(sub):
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker processes (default: DQAP_JOBS or 1)")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.set_defaults(func=_cmd_experiment, kind=kind)


def _cmd_experiment(args):
    config = ExperimentConfig.from_json(args.config, kind=args.kind)
    if args.seed is not None:
        config.seed = args.seed
    manifest = run_experiment(config, jobs=args.jobs, out_dir=args.out)
    for rec in manifest.runs:
        status = "ok" if rec["ok"] else "FAILED"
        print(f"  [{status}] {rec['task']}")
        if not rec["ok"]:
            print("    " + rec["error"].strip().replace("\n", "\n    "))
    print(f"wrote {len(manifest.outputs)} table(s) in {manifest.wall_time_s:.1f}s:")
    for path in manifest.outputs:
        print(f"  {path}")
    return 0 if manifest.ok else 1


def _cmd_oracle(args):
    gamma = +1 if args.boundary == "pbc" else -1
    spec = LatticeSpec.half_filling(args.L, gamma=gamma, t=args.t)
    rng = np.random.default_rng(args.seed)
    table = rng.uniform(0.0, 0.3, (args.layers, 2))
    if args.mode == "real":
        params = DqapParams(table)
        state = build_dqap_state(spec, params)
    else:
        params = ImagParams(table)
        state = build_imag_state(spec, params)
    basis = FockBasis.build(spec.L, spec.N)
    vec = slater_to_fock(state, basis)
    h = build_hamiltonian(spec)
    cut = Subsystem.half_chain(spec.L)

    checks = []
    checks.append(("energy", energy_expectation(state, h), fock_expectation(vec, h)))
    norm_det = overlap(state, state).real
    checks.append(("norm", norm_det, vec.norm_sq))
    checks.append(
        ("half-chain entropy", entanglement_entropy(state, cut),
         fock_entropy(vec, list(cut.sites)))
    )
    exact_orb, _ = exact_ground_state(spec)
    exact = SlaterState(exact_orb)
    ov_det = abs(overlap(exact, state)) ** 2 / norm_det
    exact_vec = slater_to_fock(exact, basis)
    ov_fock = abs(np.vdot(exact_vec.amplitudes, vec.amplitudes)) ** 2 / vec.norm_sq
    checks.append(("ground-state weight", ov_det, ov_fock))

    print(f"oracle check: L={spec.L} N={spec.N} {spec.boundary} "
          f"layers={args.layers} mode={args.mode} seed={args.seed}")
    worst = 0.0
    for name, a, b in checks:
        diff = abs(a - b)
        worst = max(worst, diff)
        flag = "ok" if diff < _ORACLE_TOL else "MISMATCH"
        print(f"  {name:22s} det={a: .12e}  enum={b: .12e}  |diff|={diff:.2e}  {flag}")
    print(f"worst |diff| = {worst:.2e} ({'PASS' if worst < _ORACLE_TOL else 'FAIL'})")
    return 0 if worst < _ORACLE_TOL else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dqap-lab",
        description="simulate and optimize layered circuits on the free-fermion chain",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_experiment_parsers(sub)
    p = sub.add_parser("oracle", help="cross-check against the occupation-basis route")
    p.add_argument("--L", type=int, default=6, help="chain length (even, <= 12)")
    p.add_argument("--layers", type=int, default=2, help="circuit depth")
    p.add_argument("--boundary", choices=("apbc", "pbc"), default="apbc")
    p.add_argument("--mode", choices=("real", "imag"), default="real")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", type=float, default=1.0)
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DqapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

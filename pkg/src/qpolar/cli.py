"""Command-line interface.

Every subcommand prints one JSON document on stdout (or writes it to
``--out``). Exit codes: 0 success, 2 usage error, 3 validation failure,
4 reconstruction did not converge.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import moments, prep, spectral, tomo
from .fock import fidelity, purity
from .io import state_from_dict, state_to_dict

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NOT_CONVERGED = 0, 2, 3, 4
DEFAULT_SEED = 12345


class UsageError(Exception):
    pass


def _emit(doc, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def load_state_arg(spec: str) -> np.ndarray:
    """A named state, or a path to state JSON (bare, or nested under "state")."""
    if spec in prep.NAMED_STATES or spec in prep._ALIASES:
        return prep.named_state(spec)
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"unknown state {spec!r}: not a named state ({', '.join(prep.NAMED_STATES)}) "
                         "and no such file")
    doc = json.loads(path.read_text())
    return state_from_dict(doc.get("state", doc))


def _tol(args) -> float:
    if getattr(args, "tol", None) is not None:
        return args.tol
    return moments.TOLERANCE_PROFILES[args.tol_profile]


def cmd_state(args):
    if args.file:
        state = load_state_arg(args.file)
    elif args.name:
        state = load_state_arg(args.name)
    else:
        raise UsageError("give a state name or --file")
    _emit(state_to_dict(state), args.out)


def cmd_moments(args):
    state = load_state_arg(args.state)
    if args.order not in (1, 2, 3):
        raise UsageError("--order must be 1, 2 or 3")
    if args.grid == "theta_phi":
        n_theta = max(int(round(np.sqrt(args.resolution / 2))), 3)
        res = (n_theta, 2 * n_theta)
    else:
        res = args.resolution
    fld = moments.sphere_field(state, args.order, args.grid, res)
    t = moments.moment_tensors(state)
    if args.csv:
        Path(args.csv).write_text(fld.to_csv())
    _emit({
        "tensors": t.to_dict(),
        "order": args.order,
        "grid": fld.grid,
        "resolution": list(fld.resolution),
        "field": {"min": float(fld.values.min()), "max": float(fld.values.max()),
                  "abs_max": float(fld.abs_values.max())},
        "csv": args.csv,
    }, args.out)


def cmd_classify(args):
    state = load_state_arg(args.state)
    tol = _tol(args)
    inv = moments.invariance(state, tol)
    doc = {"pattern": inv.pattern, "residuals": list(inv.residuals), "tol": tol,
           "unpolarized_order": moments.unpolarized_order(state, tol)}
    if np.asarray(state).shape[0] == 4:
        doc["class"] = moments.classify(state, tol).value
    _emit(doc, args.out)


def cmd_bounds(args):
    state = load_state_arg(args.state)
    b = moments.check_bounds(state)
    pairs = {}
    for j, k in ((1, 2), (2, 3), (3, 1)):
        u = moments.uncertainty_product(state, j, k)
        pairs[f"{j}{k}"] = {"lhs": u.lhs, "rhs": u.rhs, "saturated": u.saturated}
    _emit({"variance_sum": b.variance_sum, "lower": b.lower, "upper": b.upper,
           "label": b.label, "within": b.within, "uncertainty": pairs}, args.out)


def cmd_prep(args):
    if args.chain:
        desc = prep.load_chain(args.chain)
    else:
        elements = [{"kind": "HWP", "angle": args.hwp1}, {"kind": "PPBS", "phi": args.phi},
                    {"kind": "QWP", "angle": args.qwp1}, {"kind": "HWP", "angle": args.hwp2}]
        if args.lp is not None:
            elements.append({"kind": "LP", "angle": args.lp})
        desc = {"input": "double_pair", "elements": elements}
    h = prep.run_chain(desc)
    doc = {"herald_probability": h.probability, "state": state_to_dict(h.state),
           "purity": purity(h.state)}
    target = args.target or desc.get("target")
    if target:
        doc["target"] = target
        doc["fidelity"] = fidelity(h.state, load_state_arg(target))
    _emit(doc, args.out)


def cmd_calibrate(args):
    if args.theta_step <= 0:
        raise UsageError("--theta-step must be positive")
    thetas = np.arange(args.theta_min, args.theta_max + args.theta_step / 2, args.theta_step)
    r = prep.calibrate_phase(args.phi, thetas, args.shots, args.seed)
    _emit({"phi_true": args.phi, "phi_estimate": r.phi_estimate, "theta_min": r.theta_min,
           "theta_min_grid": r.theta_min_grid, "thetas": r.thetas.tolist(),
           "counts": r.counts.tolist(), "shots": args.shots, "seed": args.seed}, args.out)


def cmd_noise(args):
    r = prep.pair_noise_report(args.p1, args.p2, args.p3, args.rep_rate)
    if args.pump_factor != 1.0:
        r = r.scaled(args.pump_factor)
    _emit({"p1": r.p1, "p2": r.p2, "p3": r.p3, "signal_rate_hz": r.signal_rate,
           "noise_rate_hz": r.noise_rate, "snr": None if r.noise_free else r.snr,
           "noise_free": r.noise_free, "monotone": r.monotone}, args.out)


def cmd_tomo_sim(args):
    state = load_state_arg(args.state)
    recs = tomo.simulate_counts(state, tomo.default_settings(), args.shots, args.seed)
    text = tomo.dump_records(recs) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_tomo_fit(args):
    recs = tomo.load_records(Path(args.counts).read_text())
    target = load_state_arg(args.target) if args.target else None
    res = tomo.mle_reconstruct(recs, tomo.MLEConfig(max_iterations=args.max_iter), target)
    doc = {"state": state_to_dict(res.rho_hat), "log_likelihood": res.log_likelihood,
           "iterations": res.iterations, "converged": res.converged}
    if target is not None:
        doc["metrics"] = tomo.evaluate(res.rho_hat, target).to_dict()
    _emit(doc, args.out)
    if not res.converged:
        return EXIT_NOT_CONVERGED


def cmd_spectral(args):
    grid = spectral.FrequencyGrid(points=args.points)
    jsa = spectral.build_jsa(spectral.PumpParams(duration_fs=args.pump_fs),
                             spectral.PhaseMatching(length_mm=args.crystal_mm), grid)
    k_raw = spectral.schmidt(jsa).K
    if args.filter_fwhm > 0:
        jsa = spectral.apply_filters(jsa, spectral.FilterSpec(fwhm_nm=args.filter_fwhm))
    sd = spectral.schmidt(jsa)
    delays = np.linspace(-args.max_delay, args.max_delay, args.delays)
    hom = spectral.hom_curve(jsa, delays, args.source)
    if args.jsa_csv:
        Path(args.jsa_csv).write_text(jsa.to_csv())
    if args.hom_csv:
        Path(args.hom_csv).write_text(hom.to_csv())
    doc = {"schmidt_K_unfiltered": k_raw, "schmidt_K": sd.K, "purity": sd.purity,
           "transmission": jsa.transmission, "hom_visibility": hom.visibility,
           "hom_source": hom.source, "hom_fit": hom.fit_params}
    if args.raw_visibility is not None:
        doc["noise_subtracted_visibility"] = spectral.noise_subtracted_visibility(
            args.raw_visibility, prep.DEFAULT_PAIR_PROBABILITIES)
    _emit(doc, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpolar", description="Quantum polarization of N-photon states")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, state=True):
        if state:
            sp.add_argument("--state", required=True, help="named state or state JSON file")
        sp.add_argument("--out", help="write JSON here instead of stdout")

    s = sub.add_parser("state", help="emit a state as JSON")
    s.add_argument("name", nargs="?")
    s.add_argument("--file")
    common(s, state=False)
    s.set_defaults(func=cmd_state)

    s = sub.add_parser("moments", help="moment tensors and a sphere field")
    common(s)
    s.add_argument("--order", type=int, default=2)
    s.add_argument("--resolution", type=int, default=2048)
    s.add_argument("--grid", choices=["fibonacci", "theta_phi"], default="fibonacci")
    s.add_argument("--csv", help="sphere field CSV path")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("classify", help="rotation-invariance class")
    common(s)
    s.add_argument("--tol-profile", choices=sorted(moments.TOLERANCE_PROFILES), default="exact")
    s.add_argument("--tol", type=float, help="override the profile tolerance")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("bounds", help="variance-sum and uncertainty bounds")
    common(s)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("prep", help="simulate the heralded preparation chain")
    common(s, state=False)
    s.add_argument("--chain", help="chain description JSON")
    s.add_argument("--hwp1", type=float, default=22.5)
    s.add_argument("--phi", type=float, default=prep.DEFAULT_PPBS_PHASE_DEG)
    s.add_argument("--qwp1", type=float, default=0.0)
    s.add_argument("--hwp2", type=float, default=0.0)
    s.add_argument("--lp", type=float)
    s.add_argument("--target", help="named state or file to compare against")
    s.set_defaults(func=cmd_prep)

    s = sub.add_parser("calibrate", help="PPBS phase from a simulated HWP2 scan")
    common(s, state=False)
    s.add_argument("--phi", type=float, default=prep.DEFAULT_PPBS_PHASE_DEG)
    s.add_argument("--theta-min", type=float, default=-45.0)
    s.add_argument("--theta-max", type=float, default=45.0)
    s.add_argument("--theta-step", type=float, default=1.0)
    s.add_argument("--shots", type=int)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("noise", help="multi-pair signal and noise rates")
    common(s, state=False)
    p1, p2, p3 = prep.DEFAULT_PAIR_PROBABILITIES
    s.add_argument("--p1", type=float, default=p1)
    s.add_argument("--p2", type=float, default=p2)
    s.add_argument("--p3", type=float, default=p3)
    s.add_argument("--rep-rate", type=float, default=prep.REPETITION_RATE_HZ)
    s.add_argument("--pump-factor", type=float, default=1.0)
    s.set_defaults(func=cmd_noise)

    s = sub.add_parser("tomo-sim", help="simulate 16-setting tomography counts")
    common(s)
    s.add_argument("--shots", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.set_defaults(func=cmd_tomo_sim)

    s = sub.add_parser("tomo-fit", help="maximum-likelihood reconstruction")
    common(s, state=False)
    s.add_argument("--counts", required=True)
    s.add_argument("--target")
    s.add_argument("--max-iter", type=int, default=tomo.MAX_ITERATIONS)
    s.set_defaults(func=cmd_tomo_fit)

    s = sub.add_parser("spectral", help="joint spectrum, Schmidt number and HOM dip")
    common(s, state=False)
    s.add_argument("--points", type=int, default=256)
    s.add_argument("--pump-fs", type=float, default=140.0)
    s.add_argument("--crystal-mm", type=float, default=0.6)
    s.add_argument("--filter-fwhm", type=float, default=3.0, help="nm; 0 disables filters")
    s.add_argument("--source", choices=["pair", "independent"], default="pair")
    s.add_argument("--delays", type=int, default=121)
    s.add_argument("--max-delay", type=float, default=1500.0)
    s.add_argument("--raw-visibility", type=float)
    s.add_argument("--jsa-csv")
    s.add_argument("--hom-csv")
    s.set_defaults(func=cmd_spectral)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except UsageError as e:
        print(f"qpolar: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as e:
        print(f"qpolar: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

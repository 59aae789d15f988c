"""Command-line front end.  Every subcommand is a thin wrapper over library calls.

Exit status: 0 on success, 1 when a reported check fails, 2 on usage errors.
Reports are assembled in full before anything is written.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

from . import equivalence, observables, rac, report, xor_game

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
MATCH_TOL = 1e-9


class UsageError(Exception):
    pass


def _positive_n(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("n must be >= 1")
    return n


def _mask(text: str) -> tuple[int, ...]:
    try:
        idx = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"mask must be comma-separated indices, got {text!r}")
    if not idx:
        raise argparse.ArgumentTypeError("empty mask")
    return idx


def _need(n: int, lo: int) -> None:
    if n < lo:
        raise UsageError(f"--n must be >= {lo}")


def _build(n: int, variant: str) -> rac.QuantumRac:
    _need(n, 2)
    return rac.build_rho_rac(n) if variant == "rho" else rac.build_sigma_rac(n)


# -- handlers: each returns (exit code, text) --------------------------------

def cmd_observables(args):
    _need(args.n, 2)
    fam = observables.build_family(args.n)
    out = {
        "n": fam.n,
        "qubits": fam.qubits,
        "dim": fam.dim,
        "members": [observables.pauli_label(g, fam.qubits) for g in fam.members],
    }
    code = EXIT_OK
    if args.check:
        checks = observables.family_checks(fam)
        out["checks"] = checks
        code = EXIT_OK if checks["passed"] else EXIT_CHECK
    return code, report.dumps(out)


def cmd_rac_build(args):
    r = _build(args.n, args.variant)
    out = {
        "n": r.n,
        "variant": args.variant,
        "dim": r.dim,
        "encodings": int(r.states.shape[0]),
        "label": r.label,
        "prior": "uniform" if r.prior is None else "custom",
    }
    return EXIT_OK, report.dumps(out)


def cmd_rac_bias(args):
    r = _build(args.n, args.variant)
    out = {"variant": args.variant, **rac.decode_bias(r).to_dict()}
    return EXIT_OK, report.dumps(out)


def cmd_rac_parity(args):
    r = _build(args.n, args.variant)
    rep = rac.parity_report(r)
    if args.out == "csv":
        rows = [(rac.subset_key(s), len(s), v) for s, v in rep.per_subset.items()]
        return EXIT_OK, report.dumps_csv(("subset", "size", "parity_bias"), rows)
    return EXIT_OK, report.dumps({"variant": args.variant, **rep.to_dict()})


def cmd_rac_compose_demo(args):
    half = rac.build_sigma_rac(3)
    r = rac.compose(half, half)
    rep = rac.parity_report(r)
    out = {
        "n": r.n,
        "dim": r.dim,
        "bias": rac.decode_bias(r).to_dict(),
        "flags": dict(rep.flags),
        "parity_bias_1_4": rep.per_subset[(1, 4)],
        "max_odd_leak": rep.max_leak(lambda k: k >= 3 and k % 2 == 1),
        "max_even_leak": rep.max_leak(lambda k: k >= 2 and k % 2 == 0),
        "hyperbit_sum": rac.hyperbit_sum(r),
    }
    ok = rep.odd_parity_oblivious and not rep.even_parity_oblivious
    return (EXIT_OK if ok else EXIT_CHECK), report.dumps(out)


def cmd_game_classical(args):
    n = args.n
    out = {
        "n": n,
        "bias": xor_game.classical_bias_exact(n),
        "asymptotic": math.sqrt(2 / (math.pi * n)),
    }
    if n <= xor_game.EXACT_RATIONAL_MAX_N:
        out["bias_fraction"] = str(xor_game.classical_bias_exact(n, exact=True))
    code = EXIT_OK
    if args.brute:
        if n > xor_game.BRUTE_FORCE_MAX_T:
            raise UsageError(f"--brute supports n <= {xor_game.BRUTE_FORCE_MAX_T}")
        bias, strat = xor_game.classical_bias_bruteforce(xor_game.index_game(n))
        out["brute_force"] = {"bias": bias, "bob_answers": list(strat.bob_answers)}
        if abs(bias - out["bias"]) > 1e-12:
            code = EXIT_CHECK
    return code, report.dumps(out)


def _sdp_dict(sol: xor_game.SdpSolution) -> dict:
    return {
        "primal": sol.primal_value,
        "dual": sol.dual_value,
        "gap": sol.gap,
        "certificate_min_eig": sol.certificate_min_eig,
        "sweeps": sol.sweeps,
        "converged": sol.converged,
        "status": "certified" if sol.certified else "uncertified",
    }


def cmd_game_quantum(args):
    n = args.n
    if args.method == "certificate":
        primal = xor_game.explicit_primal(n)
        dual = xor_game.explicit_dual(n)
        ok = dual.min_eig >= -xor_game.DUAL_FEAS_TOL and abs(dual.objective - primal.primal_value) <= xor_game.ACCEPT_GAP
        out = {
            "n": n,
            "method": "certificate",
            "value": primal.primal_value,
            "primal": primal.primal_value,
            "dual": dual.objective,
            "dual_min_eig": dual.min_eig,
            "status": "certified" if ok else "uncertified",
        }
    else:
        if args.rank is not None and args.rank < 2:
            raise UsageError("--rank must be >= 2")
        sol = xor_game.sdp_solve(xor_game.index_game(n), rank=args.rank, seed=args.seed)
        ok = sol.certified
        out = {"n": n, "method": "sdp", "seed": args.seed, "value": sol.primal_value, **_sdp_dict(sol)}
    return (EXIT_OK if ok else EXIT_CHECK), report.dumps(out)


def cmd_game_solve(args):
    try:
        game = xor_game.load_game(args.spec) if os.path.exists(args.spec) else xor_game.game_from_name(args.spec)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot load game spec {args.spec!r}: {exc}")
    sol = xor_game.sdp_solve(game, rank=args.rank, seed=args.seed)
    out = {
        "game": game.name,
        "alice_inputs": len(game.alice_inputs),
        "bob_inputs": len(game.bob_inputs),
        "quantum": _sdp_dict(sol),
    }
    if len(game.bob_inputs) <= xor_game.BRUTE_FORCE_MAX_T:
        bias, strat = xor_game.classical_bias_bruteforce(game)
        out["classical"] = {"bias": bias, "bob_answers": list(strat.bob_answers)}
    return (EXIT_OK if sol.certified else EXIT_CHECK), report.dumps(out)


def cmd_equiv_game_to_rac(args):
    _need(args.n, 2)
    n = args.n
    game = xor_game.index_game(n)
    strat = xor_game.index_strategy(n)
    game_bias = xor_game.strategy_bias(game, strat)
    r = equivalence.strategy_to_rac(strat, n)
    bias = rac.decode_bias(r)
    rep = rac.parity_report(r)
    out = {
        "n": n,
        "game_bias": game_bias,
        "rac_bias": bias.to_dict(),
        "flags": dict(rep.flags),
        "dim": r.dim,
    }
    ok = abs(bias.average_case - game_bias) <= MATCH_TOL and rep.even_parity_oblivious
    return (EXIT_OK if ok else EXIT_CHECK), report.dumps(out)


def cmd_equiv_rac_to_game(args):
    r = _build(args.n, args.variant)
    try:
        strat, fam = equivalence.rac_to_strategy(r)
    except equivalence.NotEvenParityObliviousError as exc:
        return EXIT_CHECK, report.dumps({"n": args.n, "error": str(exc)})
    except ValueError as exc:
        raise UsageError(str(exc))
    game_bias = xor_game.strategy_bias(xor_game.index_game(args.n), strat)
    rac_bias = rac.decode_bias(r).average_case
    out = {
        "n": args.n,
        "variant": args.variant,
        "rac_average_bias": rac_bias,
        "game_bias": game_bias,
        "dims": list(strat.dims),
        "reduced_state_error": fam.reduced_state_error(),
        "min_fidelity": float(fam.fidelities().min()),
    }
    ok = abs(rac_bias - game_bias) <= 1e-6
    return (EXIT_OK if ok else EXIT_CHECK), report.dumps(out)


def cmd_di_attack(args):
    _need(args.n, 2)
    if args.adversary:
        if args.mask is not None:
            raise UsageError("--adversary and --mask are exclusive")
        try:
            adv = equivalence.load_adversary(args.adversary)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot load adversary {args.adversary!r}: {exc}")
    elif args.mask is not None:
        if any(not 1 <= i <= args.n for i in args.mask):
            raise UsageError(f"mask indices must lie in 1..{args.n}")
        adv = equivalence.AdversaryModel(args.mask, args.constant, not args.no_d)
    else:
        adv = equivalence.AdversaryModel(uses_random_d=not args.no_d)
    if adv.mask is not None and any(not 1 <= i <= args.n for i in adv.mask):
        raise UsageError(f"mask indices must lie in 1..{args.n}")
    prep = equivalence.di_prepare(args.n, adv)
    leak = prep.leak
    dist = equivalence.even_parity_distances(prep.rac)
    odd = {rac.subset_key(s): v for s, v in leak.per_subset.items() if len(s) >= 3 and len(s) % 2}
    even = {rac.subset_key(s): v for s, v in leak.per_subset.items() if len(s) >= 2 and len(s) % 2 == 0}
    nosig = all(v <= equivalence.OMEGA_TOL for v in dist.values())
    out = {
        "n": args.n,
        "adversary": adv.to_dict(),
        "odd_leaks": odd,
        "even_leaks": even,
        "max_odd_leak": leak.max_leak(lambda k: k >= 3 and k % 2 == 1),
        "max_even_leak": leak.max_leak(lambda k: k >= 2 and k % 2 == 0),
        "flags": dict(leak.flags),
        "even_parity_nosignalling": nosig,
    }
    ok = leak.even_parity_oblivious and nosig
    return (EXIT_OK if ok else EXIT_CHECK), report.dumps(out)


def cmd_report_scaling(args):
    if args.n_min < 2 or args.n_max < args.n_min:
        raise UsageError("need 2 <= --n-min <= --n-max")
    rows = report.scaling_rows(args.n_min, args.n_max)
    ok = all(abs(r.violation_ratio - math.sqrt(r.n)) <= MATCH_TOL for r in rows)
    return (EXIT_OK if ok else EXIT_CHECK), report.scaling_table(rows, args.format)


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grac", description="Parity-oblivious RAC and INDEX game workbench.")
    sub = p.add_subparsers(dest="group", required=True)

    po = sub.add_parser("observables", help="anticommuting observable family")
    po.add_argument("--n", type=_positive_n, required=True)
    po.add_argument("--check", action="store_true")
    po.set_defaults(func=cmd_observables)

    pr = sub.add_parser("rac", help="random access codes").add_subparsers(dest="action", required=True)
    for name, func in (("build", cmd_rac_build), ("bias", cmd_rac_bias), ("parity", cmd_rac_parity)):
        sp = pr.add_parser(name)
        sp.add_argument("--n", type=_positive_n, required=True)
        sp.add_argument("--variant", choices=("rho", "sigma"), default="sigma")
        if name == "parity":
            sp.add_argument("--out", choices=("json", "csv"), default="json")
        sp.set_defaults(func=func)
    pr.add_parser("compose-demo").set_defaults(func=cmd_rac_compose_demo)

    pg = sub.add_parser("game", help="XOR games").add_subparsers(dest="action", required=True)
    sp = pg.add_parser("classical")
    sp.add_argument("--n", type=_positive_n, required=True)
    sp.add_argument("--brute", action="store_true")
    sp.set_defaults(func=cmd_game_classical)
    sp = pg.add_parser("quantum")
    sp.add_argument("--n", type=_positive_n, required=True)
    sp.add_argument("--method", choices=("sdp", "certificate"), default="sdp")
    sp.add_argument("--rank", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_game_quantum)
    sp = pg.add_parser("solve")
    sp.add_argument("--spec", required=True, help="game JSON file, or 'chsh' / 'index:N'")
    sp.add_argument("--rank", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_game_solve)

    pe = sub.add_parser("equiv", help="game <-> RAC conversions").add_subparsers(dest="action", required=True)
    sp = pe.add_parser("game-to-rac")
    sp.add_argument("--n", type=_positive_n, required=True)
    sp.set_defaults(func=cmd_equiv_game_to_rac)
    sp = pe.add_parser("rac-to-game")
    sp.add_argument("--n", type=_positive_n, required=True)
    sp.add_argument("--variant", choices=("rho", "sigma"), default="sigma")
    sp.set_defaults(func=cmd_equiv_rac_to_game)

    pd = sub.add_parser("di", help="device-independent preparation").add_subparsers(dest="action", required=True)
    sp = pd.add_parser("attack")
    sp.add_argument("--n", type=_positive_n, required=True)
    sp.add_argument("--mask", type=_mask, help="1-based indices whose parity the device outputs")
    sp.add_argument("--constant", type=int, choices=(0, 1), default=0)
    sp.add_argument("--no-d", action="store_true", help="skip the shared random bit d")
    sp.add_argument("--adversary", help="adversary JSON file")
    sp.set_defaults(func=cmd_di_attack)

    prp = sub.add_parser("report", help="summary tables").add_subparsers(dest="action", required=True)
    sp = prp.add_parser("scaling")
    sp.add_argument("--n-min", type=_positive_n, default=2)
    sp.add_argument("--n-max", type=_positive_n, default=8)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_report_scaling)
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        code, text = args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"grac: error: {exc}", file=stderr)
        return EXIT_USAGE
    stdout.write(text if text.endswith("\n") else text + "\n")
    return code


def main() -> None:
    sys.exit(run())

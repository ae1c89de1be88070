"""Command-line interface.

Exit codes: 0 success or verified, 1 verification failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .complex import WscError, scale_weights, validate_wsc, wsc_from_json
from .construct import (
    ConstructionError,
    change_complex_cayley,
    change_complex_constant,
    change_complex_power,
    change_group,
    invariantize_blending,
    invariantize_free,
    invariantize_strong_blending,
)
from .decomp import (
    BudgetExceeded,
    DecompositionError,
    MatrixDecomposition,
    contract,
    decomposition_from_json,
    decomposition_to_json,
    from_elementary,
    verify,
)
from .group import (
    ActionError,
    FiniteGroup,
    action_from_json,
    action_to_json,
    free_refinement,
    is_blending,
    is_free,
    is_strongly_blending,
    validate_action,
)
from .positivity import (
    PositivityError,
    evaluate_psd_decomp,
    nn_to_sep,
    psd_family_from_json,
    psd_family_to_json,
    purification_to_psd_decomp,
    purify_separable,
    sqrt_purification,
)
from .tensor import basis_expansion, tensor_from_json, tensor_to_json

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=None if out else 2)
    if out:
        Path(out).write_text(text)
    else:
        print(text)


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"expected a comma-separated list of integers, got {text!r}") from exc


def cmd_validate(args) -> int:
    w = wsc_from_json(_load(args.complex))
    rep = validate_wsc(w)
    _emit({"valid": rep.ok, "violations": rep.violations}, args.output)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _load_action(path: str, complex_path: str | None = None):
    obj = _load(path)
    w = wsc_from_json(_load(complex_path)) if complex_path else None
    return action_from_json(obj, complex=w)


def cmd_validate_action(args) -> int:
    a = _load_action(args.action, args.complex)
    rep = validate_action(a)
    _emit({"valid": rep.ok, "violations": rep.violations}, args.output)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_classify(args) -> int:
    a = _load_action(args.action, args.complex)
    if not a.report.ok:
        raise InputError("invalid action: " + "; ".join(a.report.violations[:3]))
    _emit({"free": is_free(a), "blending": is_blending(a), "strongly_blending": is_strongly_blending(a)}, args.output)
    return EXIT_OK


def cmd_refine_free(args) -> int:
    a = _load_action(args.action, args.complex)
    _emit(action_to_json(free_refinement(a)), args.output)
    return EXIT_OK


def cmd_seed(args) -> int:
    v = tensor_from_json(_load(args.tensor))
    w = wsc_from_json(_load(args.complex))
    _emit(decomposition_to_json(from_elementary(w, basis_expansion(v))), args.output)
    return EXIT_OK


def cmd_invariantize(args) -> int:
    d = decomposition_from_json(_load(args.decomposition))
    a = action_from_json(_load(args.action), complex=d.complex)
    if args.mode == "free":
        out = invariantize_free(a, d, tol=args.tol, budget=args.budget)
    elif args.mode == "blending":
        out = invariantize_blending(a, contract(d, args.budget), tol=args.tol)
    else:
        out = invariantize_strong_blending(a, d, tol=args.tol, budget=args.budget)
    _emit(decomposition_to_json(out), args.output)
    return EXIT_OK


def cmd_change_group(args) -> int:
    d = decomposition_from_json(_load(args.decomposition))
    a = action_from_json(_load(args.action), complex=d.complex)
    out = change_group(a, _ints(args.subgroup), d, tol=args.tol, budget=args.budget)
    _emit(decomposition_to_json(out), args.output)
    return EXIT_OK


def cmd_change_complex(args) -> int:
    d = decomposition_from_json(_load(args.decomposition))
    target = wsc_from_json(_load(args.target))
    mode = args.mode
    if mode == "constant":
        out = change_complex_constant(d, target)
    elif mode.startswith("power:"):
        m = int(mode.split(":", 1)[1])
        if scale_weights(d.complex, m) == target:
            out = change_complex_power(d, m, "to_multiple")
        elif scale_weights(target, m) == d.complex:
            out = change_complex_power(d, m, "from_multiple")
        else:
            raise InputError(f"target is neither {m} times the source nor the source divided by {m}")
    elif mode.startswith("cayley:"):
        S = _ints(mode.split(":", 1)[1])
        if not args.group or not args.source_gens:
            raise InputError("cayley mode needs --group and --source-gens")
        grp = _load(args.group)
        G = FiniteGroup(grp["mul"] if isinstance(grp, dict) else grp)
        out = change_complex_cayley(d, G, _ints(args.source_gens), S)
        if out.complex != target:
            raise InputError("target is not the Cayley complex of S")
    else:
        raise InputError(f"unknown mode {mode!r}")
    _emit(decomposition_to_json(out), args.output)
    return EXIT_OK


def cmd_purify(args) -> int:
    d = decomposition_from_json(_load(args.decomposition))
    if not isinstance(d, MatrixDecomposition):
        raise InputError("purify needs a matrix decomposition (meta.site_shapes)")
    _emit(decomposition_to_json(purify_separable(d)), args.output)
    return EXIT_OK


def cmd_sqrt_purify(args) -> int:
    sigma = tensor_from_json(_load(args.sigma))
    a = _load_action(args.action)
    site_dims = _ints(args.site_dims)
    out = sqrt_purification(a, sigma, site_dims, method=args.method, budget=args.budget)
    _emit(decomposition_to_json(out), args.output)
    return EXIT_OK


def cmd_nn(args) -> int:
    if args.nn_command == "convert":
        d = decomposition_from_json(_load(args.decomposition))
        sep = nn_to_sep(d)
        if args.to == "sep":
            _emit(decomposition_to_json(sep), args.output)
        else:
            _emit(psd_family_to_json(purification_to_psd_decomp(purify_separable(sep))), args.output)
        return EXIT_OK
    E = psd_family_from_json(_load(args.family))
    M = evaluate_psd_decomp(E, args.budget)
    _emit(tensor_to_json(M), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    d = decomposition_from_json(_load(args.decomposition))
    v = tensor_from_json(_load(args.against))
    ok = verify(d, v, args.tol, args.budget)
    _emit({"verified": ok, "r": d.r}, args.output)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_suite(args) -> int:
    from .suite import report_json, run_suite

    results = run_suite(args.seed, _ints(args.only) if args.only else None)
    for r in results:
        print(r.line(), file=sys.stderr)
    _emit(report_json(results), args.output)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    def flags(suppress: bool) -> argparse.ArgumentParser:
        # subcommands repeat the global flags without defaults so that values
        # given before the subcommand survive
        par = argparse.ArgumentParser(add_help=False)
        dflt = (lambda x: argparse.SUPPRESS) if suppress else (lambda x: x)
        par.add_argument("--tol", type=float, default=dflt(1e-9), help="comparison tolerance (max norm)")
        par.add_argument("--seed", type=int, default=dflt(7), help="random seed")
        par.add_argument("--budget", type=float, default=dflt(1e8), help="max scalar operations per contraction")
        par.add_argument("-o", "--output", default=dflt(None), help="output file (default: stdout)")
        return par

    top, common = flags(False), flags(True)

    p = argparse.ArgumentParser(prog="wscdecomp", parents=[top],
                                description="Invariant tensor decompositions on weighted simplicial complexes.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check the axioms of a complex")
    s.add_argument("complex")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("validate-action", parents=[common], help="check a group action")
    s.add_argument("action")
    s.add_argument("--complex")
    s.set_defaults(func=cmd_validate_action)

    s = sub.add_parser("classify", parents=[common], help="free / blending / strongly blending")
    s.add_argument("action")
    s.add_argument("--complex")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("refine-free", parents=[common], help="free refinement of an action")
    s.add_argument("action")
    s.add_argument("--complex")
    s.set_defaults(func=cmd_refine_free)

    s = sub.add_parser("seed", parents=[common], help="basis-expansion decomposition of a tensor")
    s.add_argument("tensor")
    s.add_argument("--complex", required=True)
    s.set_defaults(func=cmd_seed)

    s = sub.add_parser("invariantize", parents=[common], help="invariant decomposition from a plain one")
    s.add_argument("decomposition")
    s.add_argument("--action", required=True)
    s.add_argument("--mode", choices=["free", "blending", "strong"], default="free")
    s.set_defaults(func=cmd_invariantize)

    s = sub.add_parser("change-group", parents=[common], help="lift from a normal subgroup")
    s.add_argument("decomposition")
    s.add_argument("--action", required=True, help="action of the whole group")
    s.add_argument("--subgroup", required=True, help="comma-separated subgroup elements")
    s.set_defaults(func=cmd_change_group)

    s = sub.add_parser("change-complex", parents=[common], help="move a decomposition to another complex")
    s.add_argument("decomposition")
    s.add_argument("--target", required=True)
    s.add_argument("--mode", required=True, help="constant | power:m | cayley:s1,s2,...")
    s.add_argument("--group", help="group table JSON for cayley mode")
    s.add_argument("--source-gens", help="generators of the source Cayley complex")
    s.set_defaults(func=cmd_change_complex)

    s = sub.add_parser("purify", parents=[common], help="purification of a separable decomposition")
    s.add_argument("decomposition")
    s.set_defaults(func=cmd_purify)

    s = sub.add_parser("sqrt-purify", parents=[common], help="square-root purification of an invariant psd operator")
    s.add_argument("sigma")
    s.add_argument("action")
    s.add_argument("--site-dims", required=True)
    s.add_argument("--method", choices=["auto", "free", "blending"], default="auto")
    s.set_defaults(func=cmd_sqrt_purify)

    s = sub.add_parser("nn", parents=[common], help="nonnegative tensor conversions")
    nsub = s.add_subparsers(dest="nn_command", required=True)
    c = nsub.add_parser("convert", parents=[common])
    c.add_argument("decomposition")
    c.add_argument("--to", choices=["sep", "psd"], required=True)
    c.set_defaults(func=cmd_nn)
    e = nsub.add_parser("evaluate", parents=[common])
    e.add_argument("family")
    e.set_defaults(func=cmd_nn)

    s = sub.add_parser("verify", parents=[common], help="check a decomposition against a tensor")
    s.add_argument("decomposition")
    s.add_argument("--against", required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("suite", parents=[common], help="run the acceptance matrix")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.set_defaults(func=cmd_suite)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, WscError, ActionError, DecompositionError, PositivityError, ConstructionError,
            BudgetExceeded, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

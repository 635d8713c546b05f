"""Command-line interface.

Subcommands: bound, limit, modular, contract, oracle.  Input is a JSON
spec file (chain, modular, or network; see bell.py and network.py for the
schemas).  On success a single JSON document goes to stdout and the exit
code is 0; diagnostics go to stderr with a nonzero exit code.  Numeric
results are printed both as exact fractions and as 12-significant-digit
decimals.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from fractions import Fraction

from .bell import (ChainBellSpec, ModularBellSpec, build_transfer_matrix,
                   chain_spec_from_dict, classical_bound_chain, modular_bound,
                   modular_spec_from_dict, thermodynamic_bound,
                   to_factor_network)
from .network import (EliminationPlan, backtrack_optimum, contract_full,
                      greedy_order, network_from_dict)
from .oracle import brute_force_chain, brute_force_min, brute_force_modular
from .semiring import INF


def _fmt_exact(v) -> str:
    if v == INF:
        return "inf"
    if isinstance(v, (int, Fraction)):
        return str(v)
    return repr(float(v))


def _fmt_decimal(v) -> str:
    if v == INF:
        return "inf"
    return f"{float(v):.12g}"


def _value(v) -> dict:
    return {"exact": _fmt_exact(v), "decimal": _fmt_decimal(v)}


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()


def _load(path: str):
    with open(path) as fh:
        payload = json.load(fh)
    kind = payload.get("type")
    if kind == "chain":
        return chain_spec_from_dict(payload)
    if kind == "modular":
        return modular_spec_from_dict(payload)
    if kind == "network" or "factors" in payload:
        return network_from_dict(payload)
    raise ValueError("cannot tell the spec type: set \"type\" to \"chain\", "
                     "\"modular\" or \"network\" (or provide \"factors\")")


def _emit(result: dict, started: float) -> int:
    result["timing_seconds"] = round(time.perf_counter() - started, 6)
    json.dump(result, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _chain_with_overrides(spec: ChainBellSpec, args) -> ChainBellSpec:
    changes = {}
    if getattr(args, "boundary", None):
        changes["boundary"] = args.boundary
    if getattr(args, "n", None):
        changes["n"] = args.n
    return dataclasses.replace(spec, **changes) if changes else spec


def _network_bound(net, witness: bool, order=None):
    plan = None
    if order not in (None, "greedy"):
        plan = EliminationPlan(tuple(int(v) for v in order.split(",")))
    scalar, trace = contract_full(net, plan=plan, record_witness=witness)
    assignment = backtrack_optimum(trace) if witness else None
    return scalar.item(), assignment, trace


def cmd_bound(args) -> int:
    started = time.perf_counter()
    spec = _load(args.spec)
    result = {"command": "bound", "input_digest": _digest(args.spec)}
    if isinstance(spec, ModularBellSpec):
        raise ValueError("bound expects a chain or network spec; "
                         "use the modular subcommand")
    if isinstance(spec, ChainBellSpec):
        spec = _chain_with_overrides(spec, args)
        if spec.n is None:
            raise ValueError("finite bound needs n (in the spec or via --n)")
        use_network = not spec.translation_invariant or \
            (spec.boundary == "pbc" and spec.n % spec.corr_range != 0)
        if use_network:
            net = to_factor_network(spec)
            value, assignment, _ = _network_bound(net, args.witness)
            result["pipeline"] = "network"
        else:
            model = build_transfer_matrix(spec)
            cb = classical_bound_chain(model, spec.n, witness=args.witness)
            value, assignment = cb.value, cb.assignment
            result["pipeline"] = "transfer"
        result["n"] = spec.n
        result["boundary"] = spec.boundary
    else:
        value, assignment, _ = _network_bound(spec, args.witness)
        result["pipeline"] = "network"
    result["bound"] = _value(value)
    if args.witness:
        result["assignment"] = list(assignment)
    return _emit(result, started)


def cmd_limit(args) -> int:
    started = time.perf_counter()
    spec = _load(args.spec)
    if not isinstance(spec, ChainBellSpec):
        raise ValueError("limit expects a chain spec")
    if not spec.translation_invariant:
        raise ValueError("the thermodynamic limit needs a translation-invariant spec")
    model = build_transfer_matrix(spec)
    th = thermodynamic_bound(model, k_max=args.kmax)
    result = {
        "command": "limit",
        "input_digest": _digest(args.spec),
        "per_particle": _value(th.per_particle),
        "block_eigenvalue": _value(th.block_eigenvalue),
        "critical_cycle": list(th.critical_cycle),
    }
    if th.onset is not None:
        result["stabilization"] = {"k0": th.onset, "sigma": th.cyclicity}
    else:
        result["stabilization"] = None
        result["stabilization_notice"] = "no stabilization found within k_max"
    if args.table:
        result["table"] = [
            {"n": n, "bound": _value(b), "per_particle": _value(pp)}
            for n, b, pp in th.table
        ]
    return _emit(result, started)


def cmd_modular(args) -> int:
    started = time.perf_counter()
    spec = _load(args.spec)
    if not isinstance(spec, ModularBellSpec):
        raise ValueError("modular expects a modular spec")
    value = modular_bound(spec)
    result = {
        "command": "modular",
        "input_digest": _digest(args.spec),
        "outcomes": spec.outcomes,
        "settings": spec.settings,
        "bound": _value(value),
    }
    return _emit(result, started)


def cmd_contract(args) -> int:
    started = time.perf_counter()
    net = _load(args.network)
    if isinstance(net, (ChainBellSpec, ModularBellSpec)):
        raise ValueError("contract expects a network spec")
    value, assignment, trace = _network_bound(net, args.witness, order=args.order)
    steps = [{
        "k": s.k,
        "var": s.var,
        "skipped": s.skipped,
        "merged": [list(m) for m in s.merged],
        "absorbed": sorted(s.absorbed),
        "survivors": list(s.survivors),
    } for s in trace.steps]
    result = {
        "command": "contract",
        "input_digest": _digest(args.network),
        "bound": _value(value),
        "open_indices": list(trace.open_labels),
        "steps": steps,
    }
    if args.witness:
        result["assignment"] = list(assignment)
    return _emit(result, started)


def cmd_oracle(args) -> int:
    started = time.perf_counter()
    spec = _load(args.spec)
    result = {"command": "oracle", "input_digest": _digest(args.spec)}
    if isinstance(spec, ModularBellSpec):
        bf = brute_force_modular(spec.outcomes, spec.settings, spec.alpha)
        result["bound"] = _value(bf.value)
        result["minimizer_count"] = bf.minimizer_count
    elif isinstance(spec, ChainBellSpec):
        spec = _chain_with_overrides(spec, args)
        if spec.n is None:
            raise ValueError("the chain oracle needs n (in the spec or via --n)")
        bf = brute_force_chain(spec.inputs, spec.one_body, spec.two_body,
                               spec.n, spec.boundary)
        result["bound"] = _value(bf.value)
        result["minimizer_count"] = len(bf.minimizers)
    else:
        bf = brute_force_min(spec)
        result["bound"] = _value(bf.value)
        result["minimizer_count"] = len(bf.minimizers)
    return _emit(result, started)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tropbell",
        description="Classical bounds of Bell inequalities by tropical "
                    "tensor-network contraction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="finite-chain or network classical bound")
    p.add_argument("spec")
    p.add_argument("--n", type=int, default=None, help="override chain length")
    p.add_argument("--boundary", choices=("obc", "pbc"), default=None)
    p.add_argument("--witness", action="store_true",
                   help="also output one optimal assignment")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("limit", help="per-particle bound of the infinite chain")
    p.add_argument("spec")
    p.add_argument("--kmax", type=int, default=None,
                   help="power budget for stabilization detection")
    p.add_argument("--table", action="store_true",
                   help="emit the finite-size convergence table")
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("modular", help="d-outcome modular inequality bound")
    p.add_argument("spec")
    p.set_defaults(func=cmd_modular)

    p = sub.add_parser("contract", help="contract a factor network")
    p.add_argument("network")
    p.add_argument("--order", default="greedy",
                   help="'greedy' or a comma-separated variable list")
    p.add_argument("--witness", action="store_true")
    p.set_defaults(func=cmd_contract)

    p = sub.add_parser("oracle", help="brute-force reference bound (small inputs)")
    p.add_argument("spec")
    p.add_argument("--n", type=int, default=None, help="override chain length")
    p.add_argument("--boundary", choices=("obc", "pbc"), default=None)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

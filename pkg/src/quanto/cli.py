"""Command-line entry point: ``quanto {price,case,smile,gen-expert}``.

Bad or missing flags exit with status 2; numerical or domain failures exit with
status 1 and a one-line message on standard error. Every file-producing command
writes ``<out>.manifest`` next to its output, in the same ``key = value`` format
as market config files.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import math
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__, _rng
from ._io import atomic_write_text, format_kv
from .copula import (DEFAULT_EXPERT_ROWS, ExpertMatrix, KernelCopula, calibrate_frank_alpha,
                     generate_expert_matrix)
from .errors import QuantoError
from .experiments import (case_spec, default_strike_grid, emit_smile, implied_vol_from_samples, run_case,
                          smile_csv_text)
from .heston import PRICING_PATHS, DswParams, SimGrid, simulate_heston_terminal
from .marginals import marginal_from_samples
from .market import ContractSpec, HestonParams, MarketConfig, REFERENCE_MARKET
from .pricing import price_copula, price_dsw, price_practitioner

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    """Flag combination rejected after parsing."""


# ---------------------------------------------------------------------- helpers


def _heston(text: str) -> HestonParams:
    try:
        return HestonParams.parse(text)
    except QuantoError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _seed(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {n}")
    return n


def _floats(text: str, count: int, what: str) -> list[float]:
    parts = [p.strip() for p in text.split(",")]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise _Usage(f"{what}: expected {count} comma-separated numbers, got {text!r}") from None
    if len(values) != count:
        raise _Usage(f"{what}: expected {count} comma-separated numbers, got {len(values)}")
    return values


def _market(path) -> MarketConfig:
    return REFERENCE_MARKET if path is None else MarketConfig.from_file(path)


def _manifest(command: str, argv: list[str], seed: int, started: str, mkt: MarketConfig | None,
              extra: dict) -> str:
    items = {
        "command": command,
        "argv": shlex.join(argv),
        "engine_version": __version__,
        "started": started,
        "seed": seed,
    }
    items.update(extra)
    if mkt is not None:
        items.update({f"market.{k}": v for k, v in _kv_items(mkt.to_text())})
    return format_kv(items)


def _kv_items(text: str):
    for line in text.splitlines():
        key, _, value = line.partition("=")
        yield key.strip(), value.strip()


def _write_outputs(out: str, body: str, manifest: str) -> None:
    out_path = Path(out)
    atomic_write_text(out_path, body)
    try:
        atomic_write_text(out_path.with_name(out_path.name + ".manifest"), manifest)
    except BaseException:
        out_path.unlink(missing_ok=True)
        raise


def _parse_family_param(family: str, text: str, seed: int):
    """Returns ``(param, resolved_text)``; ``rho=<x>`` calibrates a Frank alpha."""
    if family == "t":
        rho, dof = _floats(text, 2, "--param for t")
        return (rho, dof), f"{rho!r},{dof!r}"
    if family == "frank" and text.strip().startswith("rho="):
        target = _floats(text.strip()[4:], 1, "--param rho=")[0]
        alpha = calibrate_frank_alpha(target, _rng.derive_seed(seed, "frank"))
        return alpha, repr(alpha)
    value = _floats(text, 1, f"--param for {family}")[0]
    return value, repr(value)


# ---------------------------------------------------------------------- commands


def _practitioner_vols(args, mkt: MarketConfig):
    if args.vols is not None:
        return _floats(args.vols, 3, "--vols")
    if args.phi_sf is None or args.phi_qinv is None:
        raise _Usage("--model practitioner needs --vols or both --phi-sf and --phi-qinv")
    if args.phi_sf.constant_variance and args.phi_qinv.constant_variance:
        s, q = math.sqrt(args.phi_sf.v0), math.sqrt(args.phi_qinv.v0)
        return s, q, s
    T = args.maturity
    grid = SimGrid.for_maturity(T, args.paths)
    s = simulate_heston_terminal(mkt.s0, args.phi_sf, mkt.rf, T,
                                 SimGrid(grid.n_paths, grid.n_steps, _rng.derive_seed(args.seed, "asset")))
    q = simulate_heston_terminal(mkt.qinv0, args.phi_qinv, mkt.rf - mkt.r, T,
                                 SimGrid(grid.n_paths, grid.n_steps, _rng.derive_seed(args.seed, "fx")))
    vols = (implied_vol_from_samples(s, mkt.s0, mkt.s0, mkt.rf, T)[0],
            implied_vol_from_samples(q, mkt.qinv0, mkt.qinv0, mkt.rf - mkt.r, T)[0],
            implied_vol_from_samples(s, mkt.s0, args.strike, mkt.rf, T)[0])
    if any(math.isnan(v) for v in vols):
        raise QuantoError("simulated vanilla price outside the no-arbitrage band; no implied vol exists")
    return vols


def cmd_price(args) -> int:
    mkt = _market(args.config)
    contract = ContractSpec(args.strike, args.maturity)
    if args.model == "practitioner":
        result = price_practitioner(mkt, contract, *_practitioner_vols(args, mkt))
    else:
        if args.phi_sf is None or args.phi_qinv is None:
            raise _Usage(f"--model {args.model} needs --phi-sf and --phi-qinv")
        base = SimGrid.for_maturity(args.maturity, args.paths)

        def sub(label):
            return SimGrid(base.n_paths, base.n_steps, _rng.derive_seed(args.seed, label))

        if args.model == "dsw":
            result = price_dsw(mkt, contract, DswParams.from_market(mkt, args.phi_sf, args.phi_qinv), sub("asset"))
        else:
            if args.expert_matrix is not None:
                expert = ExpertMatrix.from_csv(args.expert_matrix)
            elif args.copula_family is not None and args.copula_param is not None:
                param, _ = _parse_family_param(args.copula_family, args.copula_param, args.seed)
                expert = generate_expert_matrix(args.copula_family, param, args.expert_rows,
                                                _rng.derive_seed(args.seed, "expert"))
            else:
                raise _Usage("--model copula needs --expert-matrix or --copula-family with --copula-param")
            T = args.maturity
            s = simulate_heston_terminal(mkt.s0, args.phi_sf, mkt.rf, T, sub("asset"))
            q = simulate_heston_terminal(mkt.qinv0, args.phi_qinv, mkt.rf - mkt.r, T, sub("fx"))
            result = price_copula(mkt, contract, marginal_from_samples(s), marginal_from_samples(q),
                                  KernelCopula(expert), args.paths, _rng.derive_seed(args.seed, "copula"))
    print(f"price={result.price!r} se={result.std_error!r}")
    return EXIT_OK


def cmd_case(args, argv, started) -> int:
    mkt = _market(args.config)
    spec = case_spec(args.id, mkt)
    grid = SimGrid.for_maturity(spec.maturity, args.paths, args.seed)
    result = run_case(spec, mkt, grid, expert_rows=args.expert_rows)
    manifest = _manifest("case", argv, args.seed, started, mkt, {
        "case_id": args.id,
        "paths": grid.n_paths,
        "steps": grid.n_steps,
        "expert_rows": args.expert_rows,
        "copula_family": spec.copula_family,
        "copula_param": repr(result.resolved_param),
        "maturity": repr(spec.maturity),
        "phi_sf": str(spec.phi_sf),
        "phi_qinv": str(spec.phi_qinv),
    })
    _write_outputs(args.out, result.to_csv_text(), manifest)
    return EXIT_OK


def cmd_smile(args, argv, started) -> int:
    if args.strikes is not None:
        strikes = np.array(_floats(args.strikes, len(args.strikes.split(",")), "--strikes"))
        if np.any(strikes <= 0) or np.any(np.diff(strikes) <= 0):
            raise _Usage("--strikes must be positive and strictly increasing")
    else:
        strikes = default_strike_grid(args.spot)
    grid = SimGrid.for_maturity(args.maturity, args.paths, args.seed)
    rows = emit_smile(args.phi, args.spot, args.drift, args.maturity, strikes, grid)
    manifest = _manifest("smile", argv, args.seed, started, None, {
        "phi": str(args.phi),
        "spot": repr(args.spot),
        "drift": repr(args.drift),
        "maturity": repr(args.maturity),
        "paths": grid.n_paths,
        "steps": grid.n_steps,
        "strikes": ",".join(repr(float(k)) for k in strikes),
        "flagged_rows": sum(r.flagged for r in rows),
    })
    _write_outputs(args.out, smile_csv_text(rows), manifest)
    return EXIT_OK


def cmd_gen_expert(args, argv, started) -> int:
    param, resolved = _parse_family_param(args.family, args.param, args.seed)
    matrix = generate_expert_matrix(args.family, param, args.n, _rng.derive_seed(args.seed, "expert"))
    manifest = _manifest("gen-expert", argv, args.seed, started, None, {
        "family": args.family,
        "param": args.param,
        "resolved_param": resolved,
        "n": args.n,
    })
    _write_outputs(args.out, matrix.to_csv_text(), manifest)
    return EXIT_OK


# ---------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quanto", description="Quanto option pricing under three dependence models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("price", help="price one quanto call")
    pr.add_argument("--model", required=True, choices=("practitioner", "dsw", "copula"))
    pr.add_argument("--config", help="market config file (default: the reference market table)")
    pr.add_argument("--strike", required=True, type=float)
    pr.add_argument("--maturity", required=True, type=float)
    pr.add_argument("--phi-sf", type=_heston, help="Heston parameters rho,kappa,vbar,v0,eta for S_f")
    pr.add_argument("--phi-qinv", type=_heston, help="Heston parameters for Q^-1")
    pr.add_argument("--vols", help="practitioner vols atm_sf,atm_q,sf_at_strike")
    pr.add_argument("--expert-matrix", help="expert CSV with header s_f,q_inv")
    pr.add_argument("--copula-family", choices=("gaussian", "t", "frank"))
    pr.add_argument("--copula-param", help="rho | rho,dof | alpha | rho=<target> (frank)")
    pr.add_argument("--expert-rows", type=_positive_int, default=DEFAULT_EXPERT_ROWS)
    pr.add_argument("--paths", type=_positive_int, default=PRICING_PATHS)
    pr.add_argument("--seed", type=_seed, default=0)

    ca = sub.add_parser("case", help="run one of the numerical Cases I-VI")
    ca.add_argument("--id", required=True, type=int, choices=range(1, 7), metavar="{1..6}")
    ca.add_argument("--out", required=True)
    ca.add_argument("--seed", type=_seed, default=0)
    ca.add_argument("--paths", type=_positive_int, default=PRICING_PATHS)
    ca.add_argument("--expert-rows", type=_positive_int, default=DEFAULT_EXPERT_ROWS)
    ca.add_argument("--config")

    sm = sub.add_parser("smile", help="Monte Carlo implied-vol smile of one Heston asset")
    sm.add_argument("--phi", required=True, type=_heston)
    sm.add_argument("--spot", type=float, default=REFERENCE_MARKET.s0)
    sm.add_argument("--drift", type=float, default=REFERENCE_MARKET.rf)
    sm.add_argument("--maturity", type=float, default=3.0)
    sm.add_argument("--strikes", help="comma-separated strikes (default: 21 from 0.5 to 1.5 x spot)")
    sm.add_argument("--out", required=True)
    sm.add_argument("--seed", type=_seed, default=0)
    sm.add_argument("--paths", type=_positive_int, default=PRICING_PATHS)

    ge = sub.add_parser("gen-expert", help="synthesize an expert matrix from a parametric copula")
    ge.add_argument("--family", required=True, choices=("gaussian", "t", "frank"))
    ge.add_argument("--param", required=True)
    ge.add_argument("--n", type=int, default=DEFAULT_EXPERT_ROWS)
    ge.add_argument("--seed", type=_seed, default=0)
    ge.add_argument("--out", required=True)
    return p


# Options whose values are number lists that may start with a minus sign.
_LIST_OPTIONS = frozenset({"--phi", "--phi-sf", "--phi-qinv", "--vols", "--param", "--copula-param", "--strikes"})


def _join_negative_values(argv: list[str]) -> list[str]:
    """Rewrite ``--phi-sf -0.7,1,...`` as ``--phi-sf=-0.7,1,...`` so argparse keeps it as a value."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _LIST_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and not argv[i + 1].startswith("--"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(argv))
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    try:
        if args.command == "price":
            return cmd_price(args)
        handler = {"case": cmd_case, "smile": cmd_smile, "gen-expert": cmd_gen_expert}[args.command]
        return handler(args, argv, started)
    except _Usage as exc:
        parser.error(str(exc))
    except (QuantoError, ValueError, OSError) as exc:
        print(f"quanto {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Every subcommand writes a list of flat records, either as CSV (header row,
LF endings) or as JSON ``{"command": ..., "records": [...]}``.  Output files
are written to a temporary sibling and renamed into place, so a failed run
never leaves a partial file behind.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, RsjdError
from .hedge import efficient_frontier, solve_hedge
from .misspec import run_misspec
from .model import (
    MarketSetup,
    RegimeModel,
    apply_measure_change,
    identity_measure_change,
    load_model,
    model_from_dict,
    model_to_dict,
)
from .risk import quantile
from .simulate import SimConfig, terminal_log_returns
from .transform import DEFAULT_QUAD, QuadratureSpec, call_price, put_price

__all__ = ["main", "build_parser", "RunConfig"]

Record = dict[str, object]

SETUP_PARAMS = {"s0": "S0", "rate": "r", "horizon": "T", "alpha": "alpha", "budget": "C"}
_MODEL_PARAM = re.compile(r"^(mu|sigma|lambda|a|b|q)\[(\d+)(?:,(\d+))?\]$")


@dataclass(frozen=True)
class RunConfig:
    p_model: RegimeModel
    q_model: RegimeModel | None  # None: identity measure change of p_model
    setup: MarketSetup
    quad: QuadratureSpec
    seed: int
    paths: int

    @property
    def q(self) -> RegimeModel:
        if self.q_model is not None:
            return self.q_model
        return apply_measure_change(self.p_model, identity_measure_change(self.p_model.M), self.setup.r)


# -- parameter sweeps ---------------------------------------------------------


def _set_model_param(model: RegimeModel, name: str, value: float) -> RegimeModel:
    m = _MODEL_PARAM.match(name)
    if m is None:
        raise InputError(f"--sweep: unknown parameter {name!r}")
    field, i, j = m.group(1), int(m.group(2)) - 1, m.group(3)
    if not 0 <= i < model.M:
        raise InputError(f"--sweep {name}: regime index out of range 1..{model.M}")
    doc = model_to_dict(model)
    if field == "q":
        gen = np.array(doc["generator"], dtype=float)
        if j is not None:
            k = int(j) - 1
            if not 0 <= k < model.M or k == i:
                raise InputError(f"--sweep {name}: needs two distinct regime indices in 1..{model.M}")
            gen[i, k] = value
        else:
            # exit rate of regime i; off-diagonal mix kept, split evenly when the row is empty
            off = np.delete(gen[i], i)
            w = off / off.sum() if off.sum() > 0 else np.full(off.size, 1.0 / max(off.size, 1))
            gen[i] = np.insert(w * value, i, 0.0)
        gen[i, i] = 0.0
        gen[i, i] = -gen[i].sum()
        doc["generator"] = gen.tolist()
    elif field in ("a", "b"):
        if j is not None:
            raise InputError(f"--sweep {name}: takes a single regime index")
        doc["regimes"][i]["jump"][field] = value
    else:
        if j is not None:
            raise InputError(f"--sweep {name}: takes a single regime index")
        doc["regimes"][i][field] = value
    return model_from_dict(doc)


def _apply_sweep(cfg: RunConfig, name: str, value: float) -> RunConfig:
    if name in SETUP_PARAMS:
        s = cfg.setup
        fields = {"S0": s.S0, "r": s.r, "T": s.T, "alpha": s.alpha, "C": s.C}
        fields[SETUP_PARAMS[name]] = value
        setup = MarketSetup(**fields)
        q_model = cfg.q_model
        if name == "rate" and q_model is not None:
            doc = model_to_dict(q_model)
            doc["measure"] = {"Q": {"r": value}}
            q_model = model_from_dict(doc)
        return replace(cfg, setup=setup, q_model=q_model)
    p = _set_model_param(cfg.p_model, name, value)
    q = _set_model_param(cfg.q_model, name, value) if cfg.q_model is not None else None
    return replace(cfg, p_model=p, q_model=q)


# -- commands -------------------------------------------------------------------


def cmd_quantile(cfg: RunConfig, args) -> list[Record]:
    s = cfg.setup
    q = quantile(s.alpha, s.T, cfg.p_model, s.S0, cfg.quad)
    return [{"alpha": s.alpha, "q": q, "var_unhedged": s.S0 - math.exp(-s.r * s.T) * q}]


def cmd_price(cfg: RunConfig, args) -> list[Record]:
    s, qm = cfg.setup, cfg.q
    out = []
    for K in _floats(args.strike, "--strike"):
        out.append({"K": K, "T": s.T, "put": put_price(K, s.T, qm, s.S0, cfg.quad), "call": call_price(K, s.T, qm, s.S0, cfg.quad)})
    return out


def cmd_hedge(cfg: RunConfig, args) -> list[Record]:
    sol = solve_hedge(cfg.setup, cfg.p_model, cfg.q, cfg.quad)
    return [
        {
            "K": sol.strike,
            "h": sol.fraction,
            "var": sol.hedged_var,
            "var_unhedged": sol.unhedged_var,
            "R": sol.reduction,
            "boundary": sol.boundary.value,
            "quantile": sol.quantile,
            "premium": sol.premium,
        }
    ]


def cmd_frontier(cfg: RunConfig, args) -> list[Record]:
    fr = efficient_frontier(cfg.setup, cfg.p_model, cfg.q, _floats(args.budgets, "--budgets"), cfg.quad)
    return [
        {"C": pt.budget, "var": pt.var, "boundary": pt.boundary.value, "K": fr.strike, "intercept": fr.intercept, "slope": fr.slope}
        for pt in fr.points
    ]


def cmd_misspec(cfg: RunConfig, args) -> list[Record]:
    s = cfg.setup
    strikes = _floats(args.strikes, "--strikes") if args.strikes else None
    maturities = _floats(args.maturities, "--maturities") if args.maturities else None
    rep = run_misspec(
        cfg.p_model, cfg.q, s, strikes, maturities, gbm_drift=args.gbm_drift, premium=args.premium, quad=cfg.quad
    )
    g, t = rep.gbm_strategy, rep.true_strategy
    return [
        {
            "T": s.T,
            "K_true": t.strike,
            "h_true": t.fraction,
            "var_true": t.hedged_var,
            "K_gbm": g.strike,
            "h_gbm": g.fraction,
            "var_gbm": g.hedged_var,
            "sigma_hat": rep.sigma_hat,
            "mu_hat": rep.mu_hat,
            "beta": rep.beta,
        }
    ]


def cmd_simulate(cfg: RunConfig, args) -> list[Record]:
    s = cfg.setup
    model = cfg.q if args.measure == "Q" else cfg.p_model
    x = terminal_log_returns(model, s.T, SimConfig(cfg.paths, cfg.seed, args.antithetic))
    return [{"path": i, "log_return": float(v), "S_T": s.S0 * math.exp(v)} for i, v in enumerate(x)]


def cmd_tables(cfg: RunConfig | None, args) -> list[Record]:
    from .diagnostics import run_all

    out = []
    for row in run_all():
        c = row.case
        rec: Record = {"table": c.table, "T": c.T}
        rec.update(zip(("K_rsjd", "h_rsjd", "var_rsjd"), row.rsjd))
        rec.update(zip(("K_gbm", "h_gbm", "var_gbm"), row.gbm))
        rec.update(sigma_hat=row.sigma_hat, beta=row.beta)
        rec.update({f"published_{k}": v for k, v in zip(("K_rsjd", "h_rsjd", "var_rsjd"), c.rsjd)})
        rec.update({f"published_{k}": v for k, v in zip(("K_gbm", "h_gbm", "var_gbm"), c.gbm)})
        rec.update(published_sigma_hat=c.sigma_hat, published_beta=c.beta)
        rec.update({f"reldev_{k}": v for k, v in row.deviations().items()})
        out.append(rec)
    return out


COMMANDS: dict[str, Callable] = {
    "quantile": cmd_quantile,
    "price": cmd_price,
    "hedge": cmd_hedge,
    "frontier": cmd_frontier,
    "misspec": cmd_misspec,
    "simulate": cmd_simulate,
    "tables": cmd_tables,
}


# -- parsing and output ---------------------------------------------------------


def _floats(text: str, flag: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"{flag}: expected comma-separated numbers, got {text!r}") from exc


def _quad(args) -> QuadratureSpec:
    nu_price, nu_prob = DEFAULT_QUAD.nu_price, DEFAULT_QUAD.nu_prob
    if args.nu:
        vals = _floats(args.nu, "--nu")
        if len(vals) not in (1, 2):
            raise InputError("--nu: expected PRICE or PRICE,PROB")
        nu_price = vals[0]
        if len(vals) == 2:
            nu_prob = vals[1]
    return QuadratureSpec(
        nu_price=nu_price,
        nu_prob=nu_prob,
        rel_tol=args.rel_tol if args.rel_tol is not None else DEFAULT_QUAD.rel_tol,
        abs_tol=args.abs_tol if args.abs_tol is not None else DEFAULT_QUAD.abs_tol,
    )


def _config(args) -> RunConfig:
    if args.model is None:
        raise InputError(f"{args.command}: --model is required")
    p = load_model(args.model)
    q = load_model(args.q_model) if args.q_model else None
    if q is not None and not q.risk_neutral:
        raise InputError(f"{args.q_model}: --q-model must declare measure Q")
    rate = args.rate
    if rate is None:
        rate = q.rate if q is not None else 0.0
    elif q is not None and abs(q.rate - rate) > 1e-14:
        raise InputError(f"--rate {rate} differs from the Q-model rate {q.rate}")
    if args.paths < 1:
        raise InputError("--paths must be >= 1")
    if args.seed < 0:
        raise InputError("--seed must be non-negative")
    setup = MarketSetup(args.s0, rate, args.horizon, args.alpha, args.budget)
    return RunConfig(p, q, setup, _quad(args), args.seed, args.paths)


def _fmt(value, table: bool) -> object:
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    x = float(value)
    if not math.isfinite(x):
        return None
    return round(x, 4) if table else float(f"{x:.12g}")


def _csv_cell(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(command: str, records: Sequence[Record], fmt: str, table: bool) -> str:
    rows = [{k: _fmt(v, table) for k, v in r.items()} for r in records]
    if fmt == "json":
        return json.dumps({"command": command, "records": rows}, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    header = list(rows[0]) if rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if table:
            w.writerow([f"{v:.4f}" if isinstance(v, float) else _csv_cell(v) for v in r.values()])
        else:
            w.writerow([_csv_cell(v) for v in r.values()])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rsjdvar-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="historical (P) model JSON")
    common.add_argument("--q-model", help="risk-neutral model JSON; default is the identity measure change of P")
    common.add_argument("--s0", type=float, default=100.0)
    common.add_argument("--rate", type=float, default=None, help="riskless rate; default from --q-model, else 0")
    common.add_argument("--horizon", type=float, default=1.0, help="T in years")
    common.add_argument("--alpha", type=float, default=0.01, help="tail level, P(S_T < q) = alpha")
    common.add_argument("--budget", type=float, default=0.0)
    common.add_argument("--nu", help="contour heights PRICE[,PROB]")
    common.add_argument("--rel-tol", type=float, default=None)
    common.add_argument("--abs-tol", type=float, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--paths", type=int, default=100_000)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--sweep", nargs=2, metavar=("PARAM", "VALUES"), help="e.g. --sweep q[1] 0.5,1,2")
    common.add_argument("--table-format", action="store_true", help="round to 4 decimals")

    parser = argparse.ArgumentParser(prog="rsjdvar", description="VaR hedging under regime-switching jump-diffusions")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("quantile", parents=[common], help="alpha-quantile of S_T and unhedged VaR")
    sp = sub.add_parser("price", parents=[common], help="European put/call prices")
    sp.add_argument("--strike", required=True, help="comma-separated strikes")
    sub.add_parser("hedge", parents=[common], help="optimal put hedge for the budget")
    sp = sub.add_parser("frontier", parents=[common], help="minimal VaR across budgets")
    sp.add_argument("--budgets", required=True, help="comma-separated ascending budgets")
    sp = sub.add_parser("misspec", parents=[common], help="hedge with a calibrated GBM, score under the true model")
    sp.add_argument("--strikes", help="calibration strikes (default 0.8..1.2 S0)")
    sp.add_argument("--maturities", help="calibration maturities (default the horizon)")
    sp.add_argument("--gbm-drift", choices=("moment", "rate"), default="moment")
    sp.add_argument("--premium", choices=("true", "gbm"), default="true")
    sp = sub.add_parser("simulate", parents=[common], help="exact terminal draws, one row per path")
    sp.add_argument("--measure", choices=("P", "Q"), default="P")
    sp.add_argument("--antithetic", action="store_true")
    sub.add_parser("tables", parents=[common], help="reproduce the published hedging tables")
    return parser


def run(args) -> str:
    command = COMMANDS[args.command]
    if args.command == "tables":
        records = command(None, args)
    else:
        cfg = _config(args)
        if args.sweep:
            name, values = args.sweep
            records = []
            for v in _floats(values, "--sweep"):
                for rec in command(_apply_sweep(cfg, name, v), args):
                    records.append({name: v, **rec})
        else:
            records = command(cfg, args)
    return render(args.command, records, args.format, args.table_format)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = run(args)
        if args.out:
            write_atomic(args.out, text)
        else:
            sys.stdout.write(text)
    except RsjdError as exc:
        print(f"rsjdvar {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())

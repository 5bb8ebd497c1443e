"""Command-line front end.

Every command writes CSV or JSON to stdout (or --output). Failures print a
JSON error record to stderr and exit with status 2.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sources
from .aux_search import CACHE_ENV, BudgetError, SearchGrid
from .info_kernels import JointPmf, PmfError, conditional_entropy, mutual_information

COMMANDS = ("ceo-curve", "mtsc-check", "mtsc-sandwich", "daily-double", "gap-audit",
            "extreme-points")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    source_path: str | None = None
    generator: str | None = None
    mesh: int = 20
    seed: int = 0
    output_path: str | None = None
    format: str = "csv"
    threads: int = 1
    cache: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.mesh < 2:
            raise UsageError("--mesh must be at least 2")
        if self.threads < 1:
            raise UsageError("--threads must be positive")
        for p in (self.source_path, self.output_path):
            if p is not None and not p:
                raise UsageError("paths must be non-empty")

    @property
    def grid(self) -> SearchGrid:
        return SearchGrid(self.mesh)


def load_source(cfg: RunConfig, default: str | None = None) -> JointPmf:
    if cfg.source_path:
        return JointPmf.from_json(Path(cfg.source_path).read_text())
    gen = cfg.generator or default
    if gen is None:
        raise UsageError("give --source FILE or --gen NAME:PARAM")
    return sources.parse_source(gen)


def _floats(text: str, n: int, what: str) -> list:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what} must be {n} comma-separated numbers") from None
    if len(vals) != n:
        raise UsageError(f"{what} must be {n} comma-separated numbers")
    return vals


def _config_json(c) -> dict:
    return {"q": [float(v) for v in c.q_weights],
            "channels": [w.tolist() for w in c.channels]}


def _ceo_curve(cfg: RunConfig) -> str:
    from .ceo_region import CeoInstance, ceo_sweep
    o = cfg.options
    gen = cfg.generator or (f"bsc-ceo:{o['alpha']}" if o.get("alpha") is not None else None)
    joint = load_source(RunConfig(**{**cfg.__dict__, "generator": gen}))
    inst = CeoInstance(joint)
    sweep = ceo_sweep(inst, cfg.grid, cfg.threads, cfg.cache)
    curve = sweep.curve(o.get("mode", "slice"))
    zeta = float(o.get("zeta", 0.1))
    step, r_max = float(o.get("r_step", 0.01)), float(o.get("r_max", 1.0))
    rs = np.round(np.arange(0.0, r_max + step / 2, step), 12)
    d = curve(rs)
    h = sweep.h_x_given_y
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["R_bits", "D_bits", "epsilon_star_bits", f"kl_exceed_fraction_bound_zeta_{zeta:g}"])
    for r, dv in zip(rs, d):
        eps = max(float(dv) - h, 0.0)
        w.writerow([f"{r:.6f}", f"{dv:.12f}", f"{eps:.12f}", f"{eps / zeta:.12f}"])
    return buf.getvalue()


def _mtsc_check(cfg: RunConfig) -> str:
    from .mtsc_region import mtsc_membership, mtsc_sweep
    joint = load_source(cfg)
    point = _floats(cfg.options["point"], 4, "--point")
    sweep = mtsc_sweep(joint, cfg.grid, cfg.threads, cfg.cache)
    member, witness = mtsc_membership(joint, point, sweep=sweep)
    out = {"query_bits": point, "member": member,
           "witness": _config_json(witness) if witness is not None else None}
    return json.dumps(out, indent=2) + "\n"


def _mtsc_sandwich(cfg: RunConfig) -> str:
    from .mtsc_region import mtsc_sweep, sandwich_report
    joint = load_source(cfg)
    step = float(cfg.options.get("step", 0.1))
    band = float(cfg.options.get("band", 0.02))
    sweep = mtsc_sweep(joint, cfg.grid, cfg.threads, cfg.cache)
    report = sandwich_report(sweep, step, band)
    return json.dumps(report, indent=2) + "\n"


def _parse_odds(text: str | None, shape) -> np.ndarray:
    if text is None:
        return np.full(shape, float(np.prod(shape)))
    if os.path.exists(text):
        return np.asarray(json.loads(Path(text).read_text()), dtype=float).reshape(shape)
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError("--odds must be a JSON file, one number, or a row-major list") from None
    if len(vals) == 1:
        return np.full(shape, vals[0])
    return np.asarray(vals).reshape(shape)


def _daily_double(cfg: RunConfig) -> str:
    from .gambling import RaceSpec, doubling_rates, gap_solver, maximal_correlation
    joint = load_source(cfg)
    race = RaceSpec(joint, _parse_odds(cfg.options.get("odds"), joint.shape))
    r1, r2 = _floats(cfg.options["rates"], 2, "--rates")
    solver = gap_solver(joint, cfg.grid, cfg.threads, cfg.cache)
    res = doubling_rates(race, r1, r2, solver=solver)
    rho = maximal_correlation(joint)
    bets = []
    from .info_kernels import extend_with_aux
    mass = extend_with_aux(joint, res.witness).marginal(["Q", "U1", "U2"]).probs
    for (q, u1, u2), m in np.ndenumerate(mass):
        if m > 1e-15:
            bets.append({"q": q, "u1": u1, "u2": u2, "prob": float(m),
                         "joint_bet": res.bets.joint_bet[q, u1, u2].tolist(),
                         "bet1": res.bets.product_bet[0][q, u1, u2].tolist(),
                         "bet2": res.bets.product_bet[1][q, u1, u2].tolist()})
    out = {
        "rates_bits": [r1, r2],
        "W_jw": res.W_jw,
        "W_pw": res.W_pw,
        "Delta": res.delta,
        "rho_m": rho,
        "bound": mutual_information(joint, "Y1", "Y2") - rho ** 2 * (r1 + r2),
        "sum_rate_slack": res.sum_rate_slack,
        "witness_bets": bets,
    }
    return json.dumps(out, indent=2) + "\n"


def _gap_audit(cfg: RunConfig) -> str:
    from .general_distortion import hamming_gap_audit
    joint = load_source(cfg, default="dsbs:0.1")
    res = hamming_gap_audit(joint, cfg.grid, int(cfg.options.get("samples", 10_000)), cfg.seed)
    out = {
        "worst_gap": res.worst_gap,
        "saddle_value": res.saddle.value,
        "saddle_alpha": res.saddle.alpha,
        "saddle_H": res.saddle.H,
        "argmax_config": _config_json(res.argmax_config),
        "argmax_source": res.argmax_source,
        "samples": res.samples,
    }
    return json.dumps(out, indent=2) + "\n"


def _extreme_points(cfg: RunConfig) -> str:
    from .rate_polytope import SetFunction, enumerate_extreme_points, is_supermodular
    text = cfg.options.get("values")
    if text is None:
        if not cfg.source_path:
            raise UsageError("give --set-function FILE or --values v0,v1,...")
        obj = json.loads(Path(cfg.source_path).read_text())
        values = obj["values"]
    else:
        values = [float(v) for v in text.split(",")]
    m = int(np.log2(len(values)))
    if 1 << m != len(values):
        raise UsageError("a set function needs 2^m values in bitmask order")
    s = SetFunction(m, np.asarray(values, dtype=float))
    ok, pair = is_supermodular(s)
    if not ok:
        raise UsageError(f"set function is not supermodular: witness {sorted(pair[0])}, "
                         f"{sorted(pair[1])}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ordering"] + [f"R{i + 1}_bits" for i in range(m)])
    for x, order in enumerate_extreme_points(s):
        w.writerow([">".join(str(i + 1) for i in order)] + [f"{v:.12f}" for v in x])
    return buf.getvalue()


HANDLERS = {
    "ceo-curve": _ceo_curve,
    "mtsc-check": _mtsc_check,
    "mtsc-sandwich": _mtsc_sandwich,
    "daily-double": _daily_double,
    "gap-audit": _gap_audit,
    "extreme-points": _extreme_points,
}


def run(cfg: RunConfig) -> int:
    try:
        text = HANDLERS[cfg.command](cfg)
    except (PmfError, UsageError, BudgetError, ValueError, KeyError, OSError) as exc:
        kind = type(exc).__name__
        msg = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
        sys.stderr.write(json.dumps({"error": msg, "kind": kind}) + "\n")
        return 2
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logloss-rd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, source=True):
        if source:
            sp.add_argument("--source", help="JointPmf JSON file")
            sp.add_argument("--gen", help="built-in source: dsbs:A, bsc-ceo:A, uniform:N")
        sp.add_argument("--mesh", type=int, default=20, help="mesh resolution K (default 20)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--output", help="write here instead of stdout")
        sp.add_argument("--no-cache", action="store_true",
                        help=f"ignore the sweep cache (location from ${CACHE_ENV})")

    sp = sub.add_parser("ceo-curve", help="symmetric-rate CEO curve; CSV columns "
                        "R_bits, D_bits, epsilon_star_bits, kl_exceed_fraction_bound")
    common(sp)
    sp.add_argument("--alpha", type=float, help="shortcut for --gen bsc-ceo:ALPHA")
    sp.add_argument("--mode", choices=["slice", "max"], default="slice")
    sp.add_argument("--r-max", type=float, default=1.0)
    sp.add_argument("--r-step", type=float, default=0.01)
    sp.add_argument("--zeta", type=float, default=0.1)

    sp = sub.add_parser("mtsc-check", help="membership of R1,R2,D1,D2; JSON verdict and witness")
    common(sp)
    sp.add_argument("--point", required=True)

    sp = sub.add_parser("mtsc-sandwich", help="inner sweep vs outer description; JSON report")
    common(sp)
    sp.add_argument("--step", type=float, default=0.1)
    sp.add_argument("--band", type=float, default=0.02)

    sp = sub.add_parser("daily-double", help="doubling rates and the product-wager gap; JSON")
    common(sp)
    sp.add_argument("--odds", help="JSON file, a constant, or a row-major list")
    sp.add_argument("--rates", required=True)

    sp = sub.add_parser("gap-audit", help="binary Hamming gap audit; JSON")
    common(sp)
    sp.add_argument("--samples", type=int, default=10_000)

    sp = sub.add_parser("extreme-points", help="greedy vertices of a supermodular set function; "
                        "CSV columns ordering, R1_bits..Rm_bits")
    common(sp, source=False)
    sp.add_argument("--set-function", dest="source", help='JSON {"values": [...]} in bitmask order')
    sp.add_argument("--values", help="comma-separated values in bitmask order")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    d = vars(args)
    opts = {k: d[k] for k in ("alpha", "mode", "r_max", "r_step", "zeta", "point", "step",
                              "band", "odds", "rates", "samples", "values") if k in d}
    cache = None
    if not d["no_cache"]:
        cache = os.environ.get(CACHE_ENV) or str(Path.home() / ".cache" / "logloss-rd")
    try:
        cfg = RunConfig(command=d["command"], source_path=d.get("source"),
                        generator=d.get("gen"), mesh=d["mesh"], seed=d["seed"],
                        output_path=d["output"], threads=d["threads"], cache=cache,
                        format="csv" if d["command"] in ("ceo-curve", "extreme-points") else "json",
                        options=opts)
    except UsageError as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "kind": "UsageError"}) + "\n")
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

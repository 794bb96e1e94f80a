"""Command-line interface.

Subcommands::

    simulate        draw a synthetic dataset and write it as CSV
    calibrate       tune eta on a dataset (bootstrap + Robbins-Monro)
    infer           run the sampler at a fixed eta and emit posterior draws
    table1          replicated benchmark experiment (summary + per-replicate CSV)
    risk-curve      scaled population/empirical risk curves on a theta grid
    coverage-curve  Monte Carlo coverage of the credible interval vs eta
    center-sweep    distribution of the posterior mean vs eta

Shared flags: ``--config <json>``, ``--seed``, ``--workers``, ``--out``.
Flags override config-file values.  All outputs are deterministic given the
seed, independent of the worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import Dataset
from .experiments import (ExperimentConfig, coverage_curve, posterior_center_sweep,
                          risk_curve, run_experiment)
from .generators import generator_from_config, working_tau
from .gibbs import ChainConfig, PriorSpec, credible_interval, mcid_draws, run_chain
from .gpc import GpcConfig, calibrate
from .losses import LossSpec
from .quadrature import QuadratureConfig
from .reference import REFERENCE_TABLE
from .rng import RngStream


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _parse_grid(text: str) -> np.ndarray:
    lo, hi, num = text.split(":")
    return np.linspace(float(lo), float(hi), int(num))


def _load_config(args) -> dict:
    if args.config:
        with open(args.config) as fh:
            return json.load(fh)
    return {}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _generator(args, doc: dict):
    if getattr(args, "example", None):
        return generator_from_config({"variant": f"example{args.example}"})
    if getattr(args, "pi", None) is not None:
        return generator_from_config({"variant": "population", "pi": args.pi})
    if "generator" in doc:
        return generator_from_config(doc["generator"])
    raise SystemExit("specify --example, --pi, or a config file with a generator")


def _prior(doc: dict, q: int) -> PriorSpec:
    if "prior" in doc:
        return PriorSpec(np.asarray(doc["prior"]["mu0"]),
                         np.asarray(doc["prior"]["sigma0"]))
    return PriorSpec.standard(q)


def _chain_config(args, doc: dict) -> ChainConfig:
    chain = dict(doc.get("chain", {}))
    if getattr(args, "m_total", None):
        chain["total"] = args.m_total
    if getattr(args, "burn", None):
        chain["burn"] = args.burn
    chain.setdefault("total", 4000)
    chain.setdefault("burn", 1000)
    return ChainConfig(**chain)


def _gpc_config(args, doc: dict) -> GpcConfig:
    gpc = dict(doc.get("gpc", {}))
    if getattr(args, "b", None):
        gpc["b_boot"] = args.b
    if getattr(args, "eta0", None):
        gpc["eta0"] = args.eta0
    if getattr(args, "t_max", None):
        gpc["t_max"] = args.t_max
    if getattr(args, "alpha", None):
        gpc["alpha"] = args.alpha
    return GpcConfig(**gpc)


def _cmd_simulate(args) -> None:
    doc = _load_config(args)
    gen = _generator(args, doc)
    data = gen.generate(args.n, RngStream(args.seed).child(0))
    out = _out_dir(args)
    path = out / "dataset.csv"
    data.to_csv(path)
    true = gen.true_mcid()
    info = {"variant": gen.variant, "n": args.n, "seed": args.seed,
            "true_mcid_kind": true.kind}
    if true.kind == "linear":
        info["beta_star"] = true.beta_star.tolist()
    print(json.dumps(info))
    print(f"wrote {path}")


def _cmd_calibrate(args) -> None:
    doc = _load_config(args)
    data = Dataset.from_csv(args.data)
    z_tilde = np.asarray(_parse_floats(args.z_tilde)) if args.z_tilde else None
    if z_tilde is None:
        z_tilde = np.asarray(doc.get("z_tilde", np.r_[1.0, data.z[:, 1:].mean(axis=0)]))
    prior = _prior(doc, data.q)
    chain = _chain_config(args, doc)
    gpc = _gpc_config(args, doc)
    map_fn = map
    pool = None
    if args.workers > 1:
        pool = ProcessPoolExecutor(max_workers=args.workers)
        map_fn = pool.map
    try:
        result = calibrate(data, z_tilde, prior, chain, gpc,
                           RngStream(args.seed).child(0), map_fn=map_fn)
    finally:
        if pool is not None:
            pool.shutdown()
    out = _out_dir(args)
    with open(out / "calibration.json", "w") as fh:
        json.dump({"eta_hat": result.eta_hat, "terminated_by": result.terminated_by,
                   "z_tilde": z_tilde.tolist(),
                   "trace": [{"t": t, "eta": e, "c_hat": c} for t, e, c in result.trace]},
                  fh, indent=2)
        fh.write("\n")
    print(f"eta_hat={result.eta_hat!r} ({result.terminated_by}, "
          f"{len(result.trace)} iterations); wrote {out / 'calibration.json'}")


def _cmd_infer(args) -> None:
    doc = _load_config(args)
    data = Dataset.from_csv(args.data)
    prior = _prior(doc, data.q)
    chain = replace(_chain_config(args, doc), rng=RngStream(args.seed).child(0))
    tau = working_tau(data)
    draws = run_chain(data, prior, tau, args.eta, chain)
    out = _out_dir(args)
    z_tilde = np.asarray(_parse_floats(args.z_tilde)) if args.z_tilde else None
    path = out / "draws.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"beta{j + 1}" for j in range(data.q)]
        if z_tilde is not None:
            header.append("theta_tilde")
        writer.writerow(header)
        theta = mcid_draws(draws, z_tilde) if z_tilde is not None else None
        for m in range(draws.m):
            row = [repr(v) for v in draws.betas[m]]
            if theta is not None:
                row.append(repr(theta[m]))
            writer.writerow(row)
    summary = {"eta": args.eta, "tau": tau, "retained": draws.m,
               "beta_mean": draws.betas.mean(axis=0).tolist()}
    if z_tilde is not None:
        lo, hi = credible_interval(theta, args.alpha)
        summary.update({"z_tilde": z_tilde.tolist(),
                        "theta_mean": float(theta.mean()),
                        "ci": [lo, hi], "alpha": args.alpha})
    with open(out / "posterior_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(json.dumps(summary))
    print(f"wrote {path}")


def _render_report(summary, gen_variant: str) -> str:
    lines = [f"{'method':<22}{'eta':>8}{'coverage':>10}{'length':>16}{'bias':>10}{'mse':>10}"]
    ref = REFERENCE_TABLE.get(gen_variant, {})
    for name, row in ref.items():
        eta = "--" if row["eta"] is None else f"{row['eta']:.2f}"
        lines.append(f"{name + ' (reported)':<22}{eta:>8}{row['coverage']:>10.2f}"
                     f"{row['length_mean']:>8.3f} ({row['length_sd']:.3f})"
                     f"{row['bias']:>10.4f}{row['mse']:>10.4f}")
    lines.append(f"{'bqr_gpc (this run)':<22}{summary.mean_eta:>8.3f}{summary.coverage:>10.2f}"
                 f"{summary.mean_length:>8.3f} ({summary.sd_length:.3f})"
                 f"{summary.mean_bias:>10.4f}{summary.mse:>10.4f}")
    return "\n".join(lines) + "\n"


def _cmd_table1(args) -> None:
    doc = _load_config(args)
    gen = _generator(args, doc)
    chain = _chain_config(args, doc)
    gpc = _gpc_config(args, doc)
    replicates = args.r or doc.get("replicates", 100)
    n = args.n or doc.get("n", 200)
    if args.full:
        replicates = 250
        chain = replace(chain, total=6000, burn=1000)
    config = ExperimentConfig(
        generator=gen, n=n, replicates=replicates,
        z_tilde=np.asarray(doc["z_tilde"]) if "z_tilde" in doc else None,
        chain=chain, gpc=gpc, seed=args.seed, workers=args.workers,
        timings=args.timings)
    out = _out_dir(args)
    summary, _ = run_experiment(config, out_dir=out)
    report = _render_report(summary, gen.variant)
    (out / "report.txt").write_text(report)
    print(report, end="")
    print(f"wrote {out / 'replicates.csv'}, {out / 'summary.json'}, {out / 'report.txt'}")


def _cmd_risk_curve(args) -> None:
    doc = _load_config(args)
    gen = _generator(args, doc)
    tau = 1.0 - gen.pi
    losses = [LossSpec.zero_one(),                  # unweighted 0-1
              LossSpec.zero_one(pi=gen.pi),         # inverse-class weighted 0-1
              LossSpec.bqr_spec(tau=tau, eta=args.eta)]
    if args.delta:
        losses += [LossSpec.linear(args.delta),
                   LossSpec.quadratic(args.delta, pi=gen.pi)]
    data = Dataset.from_csv(args.data) if args.data else None
    out = _out_dir(args)
    path = out / "risk_curve.csv"
    risk_curve(gen, losses, _parse_grid(args.grid), QuadratureConfig(),
               data=data, out_path=path)
    print(f"wrote {path}")


def _cmd_coverage_curve(args) -> None:
    doc = _load_config(args)
    gen = _generator(args, doc)
    chain = _chain_config(args, doc)
    out = _out_dir(args)
    path = out / "coverage_curve.csv"
    rows = coverage_curve(gen, _parse_floats(args.etas), n=args.n,
                          replicates=args.r, alpha=args.alpha, chain=chain,
                          seed=args.seed, workers=args.workers, out_path=path)
    for eta, cov, se, _ in rows:
        print(f"eta={eta:<8g} coverage={cov:.3f} (se {se:.3f})")
    print(f"wrote {path}")


def _cmd_center_sweep(args) -> None:
    doc = _load_config(args)
    gen = _generator(args, doc)
    chain = _chain_config(args, doc)
    out = _out_dir(args)
    path = out / "center_sweep.csv"
    rows = posterior_center_sweep(gen, _parse_floats(args.etas), n=args.n,
                                  replicates=args.r, chain=chain,
                                  seed=args.seed, workers=args.workers, out_path=path)
    for eta, m, s, _ in rows:
        print(f"eta={eta:<8g} mean_center={m:+.4f} (sd {s:.4f})")
    print(f"wrote {path}")


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (schema_version 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcidbayes", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset CSV")
    p.add_argument("--example", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--pi", type=float, help="population study with this P(Y=+1)")
    p.add_argument("--n", type=int, default=200)
    _add_shared(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("calibrate", help="tune eta on a dataset")
    p.add_argument("--data", required=True, help="dataset CSV (x,y,z1..zq)")
    p.add_argument("--z-tilde", dest="z_tilde", help="comma-separated profile, e.g. 1,1")
    p.add_argument("--b", type=int, help="bootstrap replicates per iteration")
    p.add_argument("--eta0", type=float)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--m-total", dest="m_total", type=int)
    p.add_argument("--burn", type=int)
    _add_shared(p)
    p.set_defaults(fn=_cmd_calibrate)

    p = sub.add_parser("infer", help="posterior draws at a fixed eta")
    p.add_argument("--data", required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--z-tilde", dest="z_tilde")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m-total", dest="m_total", type=int)
    p.add_argument("--burn", type=int)
    _add_shared(p)
    p.set_defaults(fn=_cmd_infer)

    p = sub.add_parser("table1", help="replicated benchmark experiment")
    p.add_argument("--example", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--pi", type=float)
    p.add_argument("--full", action="store_true",
                   help="published scale: R=250, 6000 sweeps (multi-hour)")
    p.add_argument("--r", type=int, help="replicates (default 100)")
    p.add_argument("--n", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--eta0", type=float)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--m-total", dest="m_total", type=int)
    p.add_argument("--burn", type=int)
    p.add_argument("--timings", action="store_true",
                   help="record real wall times in replicates.csv (breaks byte-level "
                        "reproducibility of the file)")
    _add_shared(p)
    p.set_defaults(fn=_cmd_table1)

    p = sub.add_parser("risk-curve", help="population risk curves on a theta grid")
    p.add_argument("--pi", type=float, required=True)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--delta", type=float, help="also emit smoothed-loss curves")
    p.add_argument("--grid", default="-3:3:121", help="lo:hi:points")
    p.add_argument("--data", help="dataset CSV for empirical curves")
    _add_shared(p)
    p.set_defaults(fn=_cmd_risk_curve)

    p = sub.add_parser("coverage-curve", help="Monte Carlo coverage vs eta")
    p.add_argument("--pi", type=float)
    p.add_argument("--example", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--etas", required=True, help="comma-separated eta grid")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--r", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m-total", dest="m_total", type=int)
    p.add_argument("--burn", type=int)
    _add_shared(p)
    p.set_defaults(fn=_cmd_coverage_curve)

    p = sub.add_parser("center-sweep", help="posterior-mean distribution vs eta")
    p.add_argument("--pi", type=float)
    p.add_argument("--example", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--etas", required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--r", type=int, default=100)
    p.add_argument("--m-total", dest="m_total", type=int)
    p.add_argument("--burn", type=int)
    _add_shared(p)
    p.set_defaults(fn=_cmd_center_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.fn(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())

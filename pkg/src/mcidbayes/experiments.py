"""Replicated simulation experiments and curve emission.

Everything here is deterministic given (config, seed): replicate r derives
its streams from ``RngStream(seed).child(r)`` and the worker pool only
affects scheduling, never results.  Output files are written once by the
parent process after aggregation.

Emitted files and schemas:

* ``replicates.csv`` -- ``rep,eta_hat,theta_mean,ci_lo,ci_hi,covered,bias,sq_err,wall_ms``
* ``summary.json``   -- ``coverage,mean_length,sd_length,mean_bias,mse,mean_eta,failures,R,n,B,seed``
* ``failures.csv``   -- ``rep,error`` (only when some replicate failed)
* ``risk_curve.csv`` -- ``theta,loss,population_scaled,empirical_scaled``
* ``coverage_curve.csv`` -- ``eta,coverage,se,R``
* ``center_sweep.csv``   -- ``eta,mean_center,sd_center,R``

``wall_ms`` is 0 unless timings are explicitly requested: wall times are the
one nondeterministic field, and the determinism contract (byte-identical
outputs for a fixed seed, any worker count) takes precedence by default.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset
from .generators import GeneratorSpec, generator_from_config, working_tau
from .gibbs import ChainConfig, PriorSpec, credible_interval, mcid_draws, run_chain
from .gpc import GpcConfig, calibrate
from .losses import LossSpec, McidCoef, empirical_risk, population_risk_1d
from .quadrature import QuadratureConfig
from .rng import RngStream

__all__ = [
    "ExperimentConfig",
    "ReplicateRecord",
    "SummaryReport",
    "ExperimentError",
    "run_experiment",
    "risk_curve",
    "coverage_curve",
    "posterior_center_sweep",
]

SCHEMA_VERSION = 1
FAILURE_BUDGET = 0.02  # abort if >= 2% of replicates fail

REPLICATE_COLUMNS = ("rep", "eta_hat", "theta_mean", "ci_lo", "ci_hi",
                     "covered", "bias", "sq_err", "wall_ms")


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorSpec
    n: int = 200
    replicates: int = 100
    z_tilde: np.ndarray | None = None      # default: covariate-law center
    prior: PriorSpec | None = None         # default: N(0, I_q)
    chain: ChainConfig = field(default_factory=lambda: ChainConfig(total=4000, burn=1000))
    gpc: GpcConfig = field(default_factory=GpcConfig)
    seed: int = 0
    workers: int = 1
    timings: bool = False

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if self.n < self.generator.q + 1:
            raise ValueError(f"need n >= q+1 = {self.generator.q + 1}, got {self.n}")
        if self.z_tilde is not None:
            object.__setattr__(self, "z_tilde", np.asarray(self.z_tilde, dtype=float))

    def resolved_z_tilde(self) -> np.ndarray:
        return self.z_tilde if self.z_tilde is not None else self.generator.z_tilde_default()

    def resolved_prior(self) -> PriorSpec:
        return self.prior if self.prior is not None else PriorSpec.standard(self.generator.q)

    def to_dict(self) -> dict:
        gen = {"variant": self.generator.variant, "pi": self.generator.pi}
        prior = self.resolved_prior()
        return {
            "schema_version": SCHEMA_VERSION,
            "generator": gen,
            "n": self.n,
            "replicates": self.replicates,
            "z_tilde": self.resolved_z_tilde().tolist(),
            "prior": {"mu0": prior.mu0.tolist(), "sigma0": prior.sigma0.tolist()},
            "chain": {"total": self.chain.total, "burn": self.chain.burn,
                      "thin": self.chain.thin},
            "gpc": {"alpha": self.gpc.alpha, "b_boot": self.gpc.b_boot,
                    "eta0": self.gpc.eta0, "k0": self.gpc.k0, "decay": self.gpc.decay,
                    "eps": self.gpc.eps, "t_max": self.gpc.t_max,
                    "eta_min": self.gpc.eta_min,
                    "max_step_frac": self.gpc.max_step_frac,
                    "sign_mode": self.gpc.sign_mode},
            "seed": self.seed,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema_version {version!r}")
        gen = generator_from_config(doc["generator"])
        prior = None
        if "prior" in doc:
            prior = PriorSpec(np.asarray(doc["prior"]["mu0"]),
                              np.asarray(doc["prior"]["sigma0"]))
        chain = ChainConfig(**doc.get("chain", {"total": 4000, "burn": 1000}))
        gpc = GpcConfig(**doc.get("gpc", {}))
        return cls(generator=gen, n=doc.get("n", 200),
                   replicates=doc.get("replicates", 100),
                   z_tilde=np.asarray(doc["z_tilde"]) if "z_tilde" in doc else None,
                   prior=prior, chain=chain, gpc=gpc,
                   seed=doc.get("seed", 0), workers=doc.get("workers", 1))


@dataclass(frozen=True)
class ReplicateRecord:
    rep: int
    eta_hat: float
    theta_mean: float
    ci_lo: float
    ci_hi: float
    covered: bool
    bias: float
    sq_err: float
    wall_ms: int


@dataclass(frozen=True)
class SummaryReport:
    coverage: float
    mean_length: float
    sd_length: float
    mean_bias: float
    mse: float
    mean_eta: float
    failures: int
    R: int
    n: int
    B: int
    seed: int

    def to_dict(self) -> dict:
        return {"coverage": self.coverage, "mean_length": self.mean_length,
                "sd_length": self.sd_length, "mean_bias": self.mean_bias,
                "mse": self.mse, "mean_eta": self.mean_eta,
                "failures": self.failures, "R": self.R, "n": self.n,
                "B": self.B, "seed": self.seed}


def _one_replicate(args: tuple) -> ReplicateRecord | tuple:
    """Full pipeline for one replicate; returns a record or (rep, error)."""
    config, r = args
    t0 = time.perf_counter()
    try:
        gen = config.generator
        z_tilde = config.resolved_z_tilde()
        prior = config.resolved_prior()
        stream = RngStream(config.seed).child(r)
        data = gen.generate(config.n, stream.child(0))
        cal = calibrate(data, z_tilde, prior, config.chain, config.gpc, stream.child(1))
        draws = run_chain(data, prior, working_tau(data), cal.eta_hat,
                          replace(config.chain, rng=stream.child(2)))
        theta = mcid_draws(draws, z_tilde)
        mean = float(theta.mean())
        lo, hi = credible_interval(theta, config.gpc.alpha)
        true_theta = gen.true_mcid().value(z_tilde)
        bias = mean - true_theta
        wall = int(round((time.perf_counter() - t0) * 1000)) if config.timings else 0
        return ReplicateRecord(rep=r, eta_hat=cal.eta_hat, theta_mean=mean,
                               ci_lo=lo, ci_hi=hi,
                               covered=bool(lo <= true_theta <= hi),
                               bias=bias, sq_err=bias * bias, wall_ms=wall)
    except Exception as exc:  # recorded, counted against the failure budget
        return (r, repr(exc))


def _map_jobs(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=1))


def _write_csv(path: Path, header: tuple[str, ...], rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def run_experiment(config: ExperimentConfig,
                   out_dir: str | Path | None = None
                   ) -> tuple[SummaryReport, list[ReplicateRecord]]:
    """Run R replicates of generate -> calibrate -> sample -> interval.

    Aggregates are over successful replicates; the run aborts if the failure
    fraction reaches ``FAILURE_BUDGET``.  With ``out_dir`` set, writes
    ``replicates.csv`` and ``summary.json`` (and ``failures.csv`` if needed).
    """
    jobs = [(config, r) for r in range(1, config.replicates + 1)]
    results = _map_jobs(_one_replicate, jobs, config.workers)

    records = [r for r in results if isinstance(r, ReplicateRecord)]
    failures = [r for r in results if not isinstance(r, ReplicateRecord)]
    if len(failures) / config.replicates >= FAILURE_BUDGET:
        detail = "; ".join(f"rep {r}: {err}" for r, err in failures[:5])
        raise ExperimentError(
            f"{len(failures)}/{config.replicates} replicates failed: {detail}")

    lengths = np.array([r.ci_hi - r.ci_lo for r in records])
    summary = SummaryReport(
        coverage=float(np.mean([r.covered for r in records])),
        mean_length=float(lengths.mean()),
        sd_length=float(lengths.std(ddof=1)) if len(records) > 1 else 0.0,
        mean_bias=float(np.mean([r.bias for r in records])),
        mse=float(np.mean([r.sq_err for r in records])),
        mean_eta=float(np.mean([r.eta_hat for r in records])),
        failures=len(failures),
        R=config.replicates, n=config.n, B=config.gpc.b_boot, seed=config.seed)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = [tuple(_fmt(getattr(r, c)) for c in REPLICATE_COLUMNS) for r in records]
        _write_csv(out / "replicates.csv", REPLICATE_COLUMNS, rows)
        with open(out / "summary.json", "w") as fh:
            json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        if failures:
            _write_csv(out / "failures.csv", ("rep", "error"),
                       [(r, err) for r, err in failures])
    return summary, records


# ---------------------------------------------------------------------------
# curve emission
# ---------------------------------------------------------------------------


def risk_curve(gen: GeneratorSpec, losses: list[LossSpec], theta_grid: np.ndarray,
               quad: QuadratureConfig = QuadratureConfig(),
               data: Dataset | None = None,
               out_path: str | Path | None = None) -> list[tuple]:
    """Scaled population risk curves (and optional empirical curves) on a grid.

    Each curve is divided by its own minimum over the grid so the plotted
    minimum is 1; scaling is presentation-only.  Rows are
    (theta, label, population_scaled, empirical_scaled-or-"").
    """
    if gen.q != 1:
        raise ValueError("risk_curve requires a covariate-free generator")
    theta_grid = np.asarray(theta_grid, dtype=float)
    rows = []
    for spec in losses:
        pop = np.array([population_risk_1d(spec, gen, t, quad) for t in theta_grid])
        pop_scaled = pop / pop.min()
        emp_scaled = None
        if data is not None:
            emp = np.array([empirical_risk(spec, data, McidCoef.from_theta(t))
                            for t in theta_grid])
            emp_scaled = emp / emp.min()
        for i, t in enumerate(theta_grid):
            rows.append((t, spec.label(), pop_scaled[i],
                         emp_scaled[i] if emp_scaled is not None else ""))
    if out_path is not None:
        _write_csv(Path(out_path), ("theta", "loss", "population_scaled", "empirical_scaled"),
                   [(repr(float(t)), lab, repr(float(p)),
                     repr(float(e)) if e != "" else "") for t, lab, p, e in rows])
    return rows


def _one_coverage(args: tuple) -> bool:
    gen, n, eta, alpha, chain, prior, z_tilde, stream, true_theta = args
    data = gen.generate(n, stream.child(0))
    draws = run_chain(data, prior, working_tau(data), eta,
                      replace(chain, rng=stream.child(1)))
    lo, hi = credible_interval(mcid_draws(draws, z_tilde), alpha)
    return bool(lo <= true_theta <= hi)


def coverage_curve(gen: GeneratorSpec, etas: list[float], n: int, replicates: int,
                   alpha: float = 0.05,
                   chain: ChainConfig = ChainConfig(total=4000, burn=1000),
                   prior: PriorSpec | None = None,
                   z_tilde: np.ndarray | None = None,
                   seed: int = 0, workers: int = 1,
                   out_path: str | Path | None = None) -> list[tuple]:
    """True Monte Carlo coverage of the credible interval at each fixed eta.

    No calibration: ``replicates`` fresh datasets per eta, one chain each,
    and containment is checked against the generator's true threshold.
    Rows are (eta, coverage, binomial_se, replicates).
    """
    prior = prior or PriorSpec.standard(gen.q)
    z_tilde = np.asarray(z_tilde, dtype=float) if z_tilde is not None else gen.z_tilde_default()
    true_theta = gen.true_mcid().value(z_tilde)
    master = RngStream(seed)
    jobs = [(gen, n, float(eta), alpha, chain, prior, z_tilde,
             master.child(i, r), true_theta)
            for i, eta in enumerate(etas) for r in range(replicates)]
    hits = _map_jobs(_one_coverage, jobs, workers)
    rows = []
    for i, eta in enumerate(etas):
        block = hits[i * replicates:(i + 1) * replicates]
        c = float(np.mean(block))
        se = math.sqrt(max(c * (1.0 - c), 1e-12) / replicates)
        rows.append((float(eta), c, se, replicates))
    if out_path is not None:
        _write_csv(Path(out_path), ("eta", "coverage", "se", "R"),
                   [(repr(e), repr(c), repr(s), R) for e, c, s, R in rows])
    return rows


def _one_center(args: tuple) -> float:
    gen, n, eta, chain, prior, z_tilde, stream = args
    data = gen.generate(n, stream.child(0))
    draws = run_chain(data, prior, working_tau(data), eta,
                      replace(chain, rng=stream.child(1)))
    return float(mcid_draws(draws, z_tilde).mean())


def posterior_center_sweep(gen: GeneratorSpec, etas: list[float], n: int,
                           replicates: int,
                           chain: ChainConfig = ChainConfig(total=4000, burn=1000),
                           prior: PriorSpec | None = None,
                           z_tilde: np.ndarray | None = None,
                           seed: int = 0, workers: int = 1,
                           out_path: str | Path | None = None) -> list[tuple]:
    """Distribution of the posterior mean across replicates, per eta.

    Rows are (eta, mean_center, sd_center, replicates); shows how mildly the
    posterior center moves with the scale parameter.
    """
    prior = prior or PriorSpec.standard(gen.q)
    z_tilde = np.asarray(z_tilde, dtype=float) if z_tilde is not None else gen.z_tilde_default()
    master = RngStream(seed)
    jobs = [(gen, n, float(eta), chain, prior, z_tilde, master.child(i, r))
            for i, eta in enumerate(etas) for r in range(replicates)]
    centers = _map_jobs(_one_center, jobs, workers)
    rows = []
    for i, eta in enumerate(etas):
        block = np.array(centers[i * replicates:(i + 1) * replicates])
        sd = float(block.std(ddof=1)) if len(block) > 1 else 0.0
        rows.append((float(eta), float(block.mean()), sd, replicates))
    if out_path is not None:
        _write_csv(Path(out_path), ("eta", "mean_center", "sd_center", "R"),
                   [(repr(e), repr(m), repr(s), R) for e, m, s, R in rows])
    return rows

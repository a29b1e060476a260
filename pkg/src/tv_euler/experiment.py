"""Configuration-driven convergence experiments.

An experiment fixes an SDE, a list of time steps ``T / n`` and a comparison
mode, then for every step runs ``R`` independent Monte Carlo batches of
``sample -> KDE -> trapezoid L1`` and aggregates them. The configuration is a
TOML document; see ``configs/README.md`` for the schema.
"""

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .convergence import fit_order, theoretical_ratio
from .drift import DriftSpec, SdeProblem
from .errors import ConfigError, TvEulerError
from .euler import SamplerConfig, coupled_endpoints, sample_endpoints
from .exact import ClosedFormDensity
from .kde import BandwidthRule, KdeModel, KernelSpec
from .metrics import aggregate_runs, trapezoid_l1, trapezoid_l1_self, trapezoid_l1_vs_exact
from .mild import PicardConfig, picard_solve

__all__ = [
    "MODES",
    "ExperimentConfig",
    "ReportRow",
    "ErrorReport",
    "closed_form_for",
    "run_experiment",
    "emit_outputs",
    "load_config",
    "dump_config",
]

MODES = ("vs_exact", "self_halving", "vs_mild_solver")
CSV_HEADER = "h,estimate,precision,ratio,theoretical_ratio"
LOW_R2 = 0.9
_EXPERIMENT_KEYS = {"name", "x0", "T", "steps", "n_samples", "n_runs", "mode",
                    "master_seed", "coupling"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One convergence table.

    ``steps`` are the denominators ``n`` of ``h = T / n`` (powers of two,
    listed in increasing order so that ``h`` decreases down the table).
    """

    name: str
    drift: DriftSpec
    x0: float
    T: float
    steps: tuple
    n_samples: int
    n_runs: int
    mode: str = "vs_exact"
    kernel: str = "epanechnikov"
    bandwidth: str = "mise"
    split: float = 0.0
    coupling: str = "brownian"
    master_seed: int = 0
    output_dir: str = "results"
    mild: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(int(s) for s in self.steps))
        if not self.name or any(c in self.name for c in "/\\"):
            raise ConfigError(f"invalid experiment name {self.name!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if not self.steps:
            raise ConfigError("at least one time step is required")
        for s in self.steps:
            if s < 1 or s & (s - 1):
                raise ConfigError(f"step denominator {s} is not a power of two")
        if list(self.steps) != sorted(set(self.steps)):
            raise ConfigError("step denominators must be strictly increasing")
        if self.n_samples < 2:
            raise ConfigError("n_samples must be at least 2")
        if self.n_runs < 2:
            raise ConfigError("n_runs must be at least 2 to estimate a precision")
        if self.drift.dimension != 1:
            raise ConfigError("experiments are one-dimensional")
        try:
            KernelSpec.from_name(self.kernel)
        except TvEulerError as exc:
            raise ConfigError(str(exc)) from None
        if self.bandwidth not in ("mise", "silverman", "silverman_per_mode"):
            raise ConfigError(f"unknown bandwidth rule {self.bandwidth!r}")
        if self.coupling not in ("brownian", "independent"):
            raise ConfigError(f"unknown coupling {self.coupling!r}")
        if self.mode == "vs_exact" and self.reference() is None:
            raise ConfigError(f"no closed-form density for drift kind {self.drift.kind!r}; "
                              "use mode 'self_halving' or 'vs_mild_solver'")
        if self.bandwidth == "mise" and self.reference() is None:
            raise ConfigError("the MISE bandwidth needs a drift with a closed-form density")
        unknown = set(self.mild) - {"n_time_steps", "n_points", "max_iterations", "tolerance"}
        if unknown:
            raise ConfigError(f"unknown [mild] keys {sorted(unknown)}")

    @property
    def problem(self):
        return SdeProblem(self.drift, self.x0, self.T)

    def h_values(self):
        return [self.T / s for s in self.steps]

    def reference(self):
        return closed_form_for(self.drift, self.x0, self.T)

    def kernel_spec(self):
        return KernelSpec.from_name(self.kernel)

    def bandwidth_rule(self):
        if self.bandwidth == "mise":
            return BandwidthRule.mise(self.reference())
        if self.bandwidth == "silverman":
            return BandwidthRule.silverman()
        return BandwidthRule.per_mode(self.split)

    def to_dict(self):
        return {
            "experiment": {
                "name": self.name, "mode": self.mode, "T": self.T, "x0": self.x0,
                "steps": list(self.steps), "n_samples": self.n_samples,
                "n_runs": self.n_runs, "master_seed": self.master_seed,
                "coupling": self.coupling,
            },
            "drift": self.drift.to_dict(),
            "kde": {"kernel": self.kernel, "bandwidth": self.bandwidth, "split": self.split},
            "mild": dict(self.mild),
            "output": {"dir": self.output_dir},
        }

    @classmethod
    def from_dict(cls, data):
        extra = sorted(set(data) - {"experiment", "drift", "kde", "mild", "output"})
        exp = dict(data.get("experiment", {}))
        kde = dict(data.get("kde", {}))
        out = dict(data.get("output", {}))
        extra += [f"experiment.{k}" for k in exp if k not in _EXPERIMENT_KEYS]
        extra += [f"kde.{k}" for k in kde if k not in ("kernel", "bandwidth", "split")]
        extra += [f"output.{k}" for k in out if k != "dir"]
        if extra:
            raise ConfigError(f"unknown keys {extra}")
        try:
            return cls(
                name=str(exp["name"]),
                drift=DriftSpec.from_dict(data["drift"]),
                x0=float(exp.get("x0", 0.0)),
                T=float(exp["T"]),
                steps=tuple(exp["steps"]),
                n_samples=int(exp["n_samples"]),
                n_runs=int(exp["n_runs"]),
                mode=str(exp.get("mode", "vs_exact")),
                master_seed=int(exp.get("master_seed", 0)),
                coupling=str(exp.get("coupling", "brownian")),
                kernel=str(kde.get("kernel", "epanechnikov")),
                bandwidth=str(kde.get("bandwidth", "mise")),
                split=float(kde.get("split", 0.0)),
                output_dir=str(out.get("dir", "results")),
                mild=dict(data.get("mild", {})),
            )
        except ConfigError:
            raise
        except KeyError as exc:
            raise ConfigError(f"missing required key {exc}") from None
        except (TypeError, ValueError, TvEulerError) as exc:
            raise ConfigError(str(exc)) from None

    def hash(self):
        return hashlib.sha256(dump_config(self).encode()).hexdigest()[:16]


def load_config(path):
    """Parse a TOML experiment file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return ExperimentConfig.from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dump_config(cfg):
    """TOML text that :func:`load_config` maps back to ``cfg``."""
    return tomli_w.dumps(cfg.to_dict())


def closed_form_for(drift, x0, T):
    """Exact law at ``T`` when one is known, else ``None``.

    Known cases: inward two-valued drift ``theta, -theta`` (including
    bang-bang), zero drift and constant drift.
    """
    p = drift.params
    if drift.kind == "bang_bang":
        return ClosedFormDensity.bang_bang(p["theta"], T, x0)
    if drift.kind == "two_valued" and p["alpha"] == -p["beta"] and p["alpha"] > 0:
        return ClosedFormDensity.bang_bang(p["alpha"], T, x0)
    if drift.kind == "zero":
        return ClosedFormDensity.gaussian(x0, T)
    if drift.kind == "constant" and len(p["c"]) == 1:
        return ClosedFormDensity.gaussian(x0 + p["c"][0] * T, T)
    return None


@dataclass
class ReportRow:
    """One line of a convergence table.

    ``ratio`` compares with the previous (twice larger) step and
    ``theoretical_ratio`` is ``2 (1 + ln(T/h)) / (1 + ln(2T/h))``; both are
    ``None`` on the first row. Invalid rows carry ``error`` and NaN values.
    """

    h: float
    denominator: int
    estimate: float
    precision: float
    ratio: float = None
    theoretical_ratio: float = None
    run_values: tuple = ()
    bandwidths: tuple = ()
    error: str = None

    @property
    def valid(self):
        return self.error is None


@dataclass
class ErrorReport:
    rows: list
    fit: object
    provenance: dict

    @property
    def valid(self):
        return all(r.valid for r in self.rows)

    def to_dict(self):
        fit = None
        if self.fit is not None:
            fit = {**self.fit.to_dict(), "low_r_squared": self.fit.r_squared < LOW_R2}
        return {"rows": [asdict(r) for r in self.rows], "fit": fit,
                "provenance": self.provenance}


class _Reference:
    """Callable reference density for the vs-exact and vs-solver modes."""

    def __init__(self, cfg):
        if cfg.mode == "vs_exact":
            self.pdf = cfg.reference().pdf
        elif cfg.mode == "vs_mild_solver":
            grid = picard_solve(cfg.problem, PicardConfig(**cfg.mild))
            pts, vals = grid.points, grid.values

            def pdf(z):
                return np.interp(z, pts, vals, left=0.0, right=0.0)
            self.pdf = pdf
        else:
            self.pdf = None


def _bandwidth_record(model):
    b = model.bandwidth
    return tuple(b) if isinstance(b, tuple) else (b,)


def _one_run(cfg, h, run, reference, jobs):
    kernel, rule = cfg.kernel_spec(), cfg.bandwidth_rule()
    sc = SamplerConfig(cfg.problem, h, cfg.n_samples, cfg.master_seed, stream=(run,))
    if cfg.mode == "self_halving":
        coarse, fine = coupled_endpoints(sc, cfg.coupling, jobs)
        kc = KdeModel.fit(coarse.values, kernel, rule)
        kf = KdeModel.fit(fine.values, kernel, rule)
        return trapezoid_l1_self(coarse, kc, kf), _bandwidth_record(kc)
    sample = sample_endpoints(sc, jobs)
    model = KdeModel.fit(sample.values, kernel, rule)
    if cfg.mode == "vs_exact":
        return trapezoid_l1_vs_exact(sample, model, reference.pdf), _bandwidth_record(model)
    return trapezoid_l1(sample, model.evaluate_many, reference.pdf), _bandwidth_record(model)


def run_experiment(cfg, jobs=None, log=None):
    """Run every row of ``cfg`` and assemble the table.

    A row whose runs raise is kept with its error message and NaN values;
    the remaining rows still run. The result depends only on ``cfg``.
    """
    start = time.perf_counter()
    reference = _Reference(cfg)
    rows = []
    for n, h in zip(cfg.steps, cfg.h_values()):
        try:
            runs, bws = [], []
            for r in range(cfg.n_runs):
                value, bw = _one_run(cfg, h, r, reference, jobs)
                runs.append(value)
                bws.append(bw)
            agg = aggregate_runs(runs)
            bw_mean = tuple(float(np.mean([b[i] for b in bws])) for i in range(len(bws[0])))
            row = ReportRow(h, n, agg.estimate, float(agg.precision),
                            run_values=agg.run_values, bandwidths=bw_mean)
        except (TvEulerError, MemoryError, FloatingPointError, ValueError) as exc:
            row = ReportRow(h, n, math.nan, math.nan, error=f"{type(exc).__name__}: {exc}")
        rows.append(row)
        if log is not None:
            log(f"T/{n}: " + (f"{row.estimate:.4f} +- {row.precision:.2e}" if row.valid
                              else f"invalid ({row.error})"))
    for prev, row in zip(rows[:-1], rows[1:]):
        row.theoretical_ratio = float(theoretical_ratio(cfg.T, row.h))
        if prev.valid and row.valid and row.estimate > 0:
            row.ratio = prev.estimate / row.estimate
    good = [(r.h, r.estimate) for r in rows if r.valid and r.estimate > 0]
    fit = fit_order(good) if len(good) >= 3 else None
    prov = {"seed": cfg.master_seed, "config_hash": cfg.hash(),
            "wall_time": time.perf_counter() - start}
    return ErrorReport(rows, fit, prov)


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def emit_outputs(report, cfg, out_dir=None):
    """Write ``<name>.csv``, ``<name>_summary.json`` and ``<name>_plot.csv``.

    Returns the three paths. The results CSV is a pure function of the
    configuration; the summary also records the wall time.
    """
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    paths = (out / f"{cfg.name}.csv", out / f"{cfg.name}_summary.json",
             out / f"{cfg.name}_plot.csv")
    try:
        out.mkdir(parents=True, exist_ok=True)
        lines = [CSV_HEADER]
        for r in report.rows:
            lines.append(",".join([_fmt(r.h), _fmt(r.estimate), _fmt(r.precision),
                                   _fmt(r.ratio), _fmt(r.theoretical_ratio)]))
        paths[0].write_text("\n".join(lines) + "\n")
        summary = {"config": cfg.to_dict(), **report.to_dict()}
        paths[1].write_text(json.dumps(summary, indent=2, allow_nan=True) + "\n")
        plot = ["ln_h,ln_estimate"]
        plot += [f"{math.log(r.h)!r},{math.log(r.estimate)!r}"
                 for r in report.rows if r.valid and r.estimate > 0]
        paths[2].write_text("\n".join(plot) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results: {exc.strerror}",
                      exc.filename) from exc
    return paths


def with_overrides(cfg, seed=None, out_dir=None):
    """Copy of ``cfg`` with the CLI overrides applied."""
    changes = {}
    if seed is not None:
        changes["master_seed"] = int(seed)
    if out_dir is not None:
        changes["output_dir"] = str(out_dir)
    return replace(cfg, **changes) if changes else cfg

"""Benchmark harness: the ``qnbench`` command line.

Subcommands:

* ``qnbench run``: execute one experiment configuration (matrix
  approximation, quadratic, log-sum-exp, or logistic regression), one run
  per seed, and write per-iteration CSV traces plus a summary CSV of means
  across seeds.
* ``qnbench compare``: check trace files against a closed-form envelope
  and flag any step where the bound is violated.

Configurations are flat ``key = value`` text files; every key can also be
set or overridden on the command line.  The environment variable
``QNBENCH_OUTPUT_DIR`` overrides the output directory (command-line flag
still wins).  Trace columns are fixed:

    k,grad_norm,lambda,sigma,tau,r,envelope,elapsed_s

with absent metrics written as empty fields.  Data rows are byte-identical
across reruns of the same configuration and seeds; wall-clock timings
would break that, so ``elapsed_s`` stays empty unless ``timing = true``.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bounds import bound_envelope
from .directions import DirectionStrategy, VARIANTS
from .linalg import random_spd
from .objectives import LogisticObjective, QuadraticObjective, \
    initial_point_on_sphere, load_libsvm, make_logsumexp_synthetic, samples_to_dense
from .rng import gaussians, rng_from_seed, split
from .solvers import InvariantViolation, StopRule, approx_matrix, newton_warm_start, \
    solve_general, solve_quadratic
from .updates import UpdateRule

EXPERIMENTS = ("matrix_approx", "quadratic", "logsumexp", "logistic")
CSV_COLUMNS = ("k", "grad_norm", "lambda", "sigma", "tau", "r", "envelope", "elapsed_s")
OUTPUT_ENV_VAR = "QNBENCH_OUTPUT_DIR"


class ConfigError(ValueError):
    """Configuration is invalid; the CLI reports usage and exits 2."""


class RunFailed(RuntimeError):
    """A run aborted (invariant breach); partial traces were preserved."""


@dataclass
class RunConfig:
    experiment: str = "matrix_approx"
    d: int = 10
    m_or_n: int = 10
    gamma: float = 1.0
    kappa: float = 100.0
    rule: UpdateRule = field(default_factory=UpdateRule.sr1)
    direction: str = "greedy_sr1"
    seeds: tuple = (0,)
    m_const: float = 0.0
    warm_start_steps: int = 0
    max_iters: int = 30
    grad_tol: Optional[float] = None
    lambda_tol: Optional[float] = 1e-12
    dataset_path: Optional[str] = None
    output_dir: str = "qnbench_out"
    instance_seed: int = 0
    g0: str = "lmax_identity"
    allow_expensive: bool = False
    timing: bool = False

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"choose from {', '.join(EXPERIMENTS)}")
        if self.direction not in VARIANTS:
            raise ConfigError(f"unknown direction {self.direction!r}; "
                              f"choose from {', '.join(VARIANTS)}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.d < 1:
            raise ConfigError("d must be at least 1")
        if self.experiment == "logistic" and not self.dataset_path:
            raise ConfigError("logistic experiment needs dataset_path")
        if self.g0 not in ("lmax_identity", "hessian"):
            raise ConfigError("g0 must be 'lmax_identity' or 'hessian'")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be nonnegative")

    def stop_rule(self) -> StopRule:
        return StopRule(max_iters=self.max_iters, grad_tol=self.grad_tol,
                        lambda_tol=self.lambda_tol)

    def echo(self) -> str:
        pairs = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "rule":
                value = value.label
            elif f.name == "seeds":
                value = ",".join(str(s) for s in value)
            pairs.append(f"{f.name}={value}")
        return " ".join(pairs)


_BOOL_VALUES = {"true": True, "1": True, "yes": True, "on": True,
                "false": False, "0": False, "no": False, "off": False}


def _parse_bool(text: str) -> bool:
    try:
        return _BOOL_VALUES[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {text!r}") from None


def _parse_seeds(text: str) -> tuple:
    try:
        return tuple(int(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"bad seeds list {text!r}") from None


def load_config_file(path) -> dict:
    """Parse a flat ``key = value`` file ('#' comments, blank lines ok)."""
    values = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
            values[key.strip()] = value.strip()
    return values


_INT_KEYS = ("d", "m_or_n", "warm_start_steps", "max_iters", "instance_seed")
_FLOAT_KEYS = ("gamma", "kappa", "m_const")
_OPT_FLOAT_KEYS = ("grad_tol", "lambda_tol")
_BOOL_KEYS = ("allow_expensive", "timing")


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge config-file values and overrides (overrides win) into a RunConfig."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    config = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    for key, value in merged.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            if key in _INT_KEYS:
                value = int(value)
            elif key in _FLOAT_KEYS:
                value = float(value)
            elif key in _OPT_FLOAT_KEYS:
                value = None if str(value).lower() in ("none", "") else float(value)
            elif key in _BOOL_KEYS:
                value = value if isinstance(value, bool) else _parse_bool(value)
            elif key == "rule":
                value = value if isinstance(value, UpdateRule) else UpdateRule.parse(value)
            elif key == "seeds":
                value = value if isinstance(value, tuple) else _parse_seeds(value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
        config = replace(config, **{key: value})
    config.validate()
    return config


# ---------------------------------------------------------------------------
# trace files
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _record_rows(records, envelope_values, timing: bool):
    rows = []
    for i, rec in enumerate(records):
        env = envelope_values[i] if envelope_values is not None else None
        rows.append((
            str(rec.k), _fmt(rec.grad_norm), _fmt(rec.lambda_k), _fmt(rec.sigma_k),
            _fmt(rec.tau_k), _fmt(rec.r_k), _fmt(env),
            _fmt(rec.elapsed) if timing else "",
        ))
    return rows


def _write_trace(path: Path, config: RunConfig, seed, rows, instance_note: str,
                 aborted: str | None = None):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("# qnbench trace\n")
        handle.write(f"# version: {__version__}\n")
        handle.write(f"# config: {config.echo()}\n")
        handle.write(f"# instance: {instance_note}\n")
        handle.write(f"# seed: {seed}\n")
        if aborted:
            handle.write(f"# aborted: {aborted}\n")
        handle.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            handle.write(",".join(row) + "\n")


def _write_summary(path: Path, config: RunConfig, per_seed_rows, instance_note: str):
    """Mean across seeds, per step, of every numeric column present."""
    by_k: dict = {}
    order = []
    for rows in per_seed_rows:
        for row in rows:
            k = row[0]
            if k not in by_k:
                by_k[k] = []
                order.append(k)
            by_k[k].append(row)
    out_rows = []
    for k in order:
        group = by_k[k]
        means = [k]
        for col in range(1, len(CSV_COLUMNS)):
            values = [float(r[col]) for r in group if r[col] != ""]
            means.append(repr(float(np.mean(values))) if values else "")
        out_rows.append(tuple(means))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("# qnbench summary (means across seeds)\n")
        handle.write(f"# version: {__version__}\n")
        handle.write(f"# config: {config.echo()}\n")
        handle.write(f"# instance: {instance_note}\n")
        handle.write(f"# seeds: {','.join(str(s) for s in config.seeds)}\n")
        handle.write(",".join(CSV_COLUMNS) + "\n")
        for row in out_rows:
            handle.write(",".join(row) + "\n")


def _matrix_envelope_kind(rule: UpdateRule, experiment: str) -> str:
    suffix = "_matrix" if experiment == "matrix_approx" else "_quadratic"
    if rule.kind == "sr1":
        return "sr1" + suffix
    if rule.kind == "bfgs":
        return "bfgs" + suffix
    return "broyden" + suffix


def _envelope_for(records, rule, experiment, d, kappa, mu):
    kind = _matrix_envelope_kind(rule, experiment)
    steps = len(records) - 1
    first = records[0]
    if rule.kind == "sr1":
        if experiment == "matrix_approx":
            return bound_envelope(kind, steps, d=d, tau0=first.tau_k).values
        return bound_envelope(kind, steps, d=d, tau0=first.tau_k, mu=mu).values
    if rule.kind == "bfgs":
        return bound_envelope(kind, steps, d=d, sigma0=first.sigma_k).values
    return bound_envelope(kind, steps, d=d, kappa=kappa, sigma0=first.sigma_k).values


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def run(config: RunConfig) -> list:
    """Execute all seeds of a configuration; returns the written paths."""
    config.validate()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = f"{config.experiment}_{config.rule.label}_{config.direction}"
    written = []
    per_seed_rows = []
    failure = None

    if config.experiment == "matrix_approx":
        state = rng_from_seed(config.instance_seed)
        a = random_spd(config.d, config.kappa, state)
        g0 = config.kappa * np.eye(config.d) if config.g0 == "lmax_identity" else a.mat
        instance_note = f"d={config.d} kappa={config.kappa} mu=1.0 L={config.kappa}"

        def one_seed(seed):
            strategy = DirectionStrategy(config.direction, seed)
            records = approx_matrix(a, g0, config.rule, strategy, config.max_iters,
                                    allow_expensive=config.allow_expensive)
            env = _envelope_for(records, config.rule, "matrix_approx",
                                config.d, config.kappa, 1.0)
            return records, env

    elif config.experiment == "quadratic":
        state = rng_from_seed(config.instance_seed)
        state_a, state = split(state)
        state_b, state = split(state)
        a = random_spd(config.d, config.kappa, state_a)
        b, _ = gaussians(config.d, state_b)
        obj = QuadraticObjective(a, b)
        g0 = obj.lip_L * np.eye(config.d) if config.g0 == "lmax_identity" else obj.a
        x0 = np.zeros(config.d)
        instance_note = f"d={config.d} kappa={obj.kappa} mu={obj.mu} L={obj.lip_L}"

        def one_seed(seed):
            strategy = DirectionStrategy(config.direction, seed)
            _, records = solve_quadratic(obj, x0, g0, config.rule, strategy,
                                         config.stop_rule(),
                                         allow_expensive=config.allow_expensive)
            env = _envelope_for(records, config.rule, "quadratic",
                                config.d, obj.kappa, obj.mu)
            return records, env

    else:
        if config.experiment == "logsumexp":
            obj = make_logsumexp_synthetic(config.d, config.m_or_n, config.gamma,
                                           config.instance_seed)
            x0 = initial_point_on_sphere(obj.dim, 1.0 / obj.dim, config.instance_seed + 1)
        else:
            samples, dim = load_libsvm(config.dataset_path)
            x, y = samples_to_dense(samples, dim)
            obj = LogisticObjective(x, y, config.gamma)
            x0 = np.zeros(obj.dim)
        if config.warm_start_steps:
            x0 = newton_warm_start(obj, x0, config.warm_start_steps)
        instance_note = (f"d={obj.dim} kappa={obj.kappa} mu={obj.mu} L={obj.lip_L} "
                         f"M={obj.self_concordant_M}")

        def one_seed(seed):
            strategy = DirectionStrategy(config.direction, seed)
            _, records = solve_general(obj, x0, config.rule, strategy, config.m_const,
                                       config.stop_rule(),
                                       allow_expensive=config.allow_expensive)
            return records, None

    for seed in config.seeds:
        path = out_dir / f"{base}_seed{seed}.csv"
        try:
            records, env = one_seed(seed)
        except InvariantViolation as exc:
            rows = _record_rows(exc.records, None, config.timing)
            _write_trace(path, config, seed, rows, instance_note, aborted=str(exc))
            written.append(path)
            failure = f"seed {seed}: {exc}"
            break
        rows = _record_rows(records, env, config.timing)
        _write_trace(path, config, seed, rows, instance_note)
        written.append(path)
        per_seed_rows.append(rows)

    if failure is not None:
        raise RunFailed(f"run aborted ({failure}); partial traces kept in {out_dir}")

    summary_path = out_dir / f"{base}_summary.csv"
    _write_summary(summary_path, config, per_seed_rows, instance_note)
    written.append(summary_path)
    return written


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

_MEASURED_COLUMN = {
    "sr1_matrix": "tau",
    "bfgs_matrix": "sigma",
    "broyden_matrix": "sigma",
    "sr1_quadratic": "lambda",
    "bfgs_quadratic": "lambda",
    "broyden_quadratic": "lambda",
}


def _read_trace(path):
    meta = {}
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        header = None
        for raw in handle:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                key, sep, value = body.partition(":")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(dict(zip(header, line.split(","))))
    if header is None:
        raise ValueError(f"{path}: no data found")
    return meta, rows


def _meta_floats(meta) -> dict:
    out = {}
    for part in meta.get("instance", "").split():
        key, sep, value = part.partition("=")
        if sep:
            try:
                out[key] = float(value)
            except ValueError:
                pass
    return out


def compare(paths, kind: str, slack: float = 1.0, atol: float | None = None,
            out=sys.stdout):
    """Mean the trace files, rebuild the envelope, and flag violations.

    For the matrix kinds the measured series is the recorded measure (tau
    or sigma); for the quadratic kinds it is the per-step ratio
    lambda_{k+1}/lambda_k, checked while lambda is above its stopping
    floor.  Returns the number of flagged steps.
    """
    if kind not in _MEASURED_COLUMN:
        raise ValueError(f"unknown envelope kind {kind!r} for compare")
    if not paths:
        raise ValueError("no trace files given")
    column = _MEASURED_COLUMN[kind]
    metas, all_rows = [], []
    for path in paths:
        meta, rows = _read_trace(path)
        metas.append(meta)
        all_rows.append(rows)
    grid = [row["k"] for row in all_rows[0]]
    for path, rows in zip(paths, all_rows):
        if [row["k"] for row in rows] != grid:
            raise ValueError(f"{path}: step grid does not match {paths[0]}")

    measured = []
    for i in range(len(grid)):
        values = [float(rows[i][column]) for rows in all_rows if rows[i][column] != ""]
        if not values:
            raise ValueError(f"column {column!r} is empty at step {grid[i]}")
        measured.append(float(np.mean(values)))
    measured = np.array(measured)

    inst = _meta_floats(metas[0])
    d = int(inst.get("d", 0))
    kappa = inst.get("kappa", 0.0)
    mu = inst.get("mu", 1.0)
    if d <= 0:
        raise ValueError("trace metadata is missing the instance dimension")

    if kind.endswith("_matrix"):
        series = measured
        params = {"d": d, "kappa": kappa}
        if kind == "sr1_matrix":
            params["tau0"] = series[0]
        else:
            params["sigma0"] = series[0]
        envelope = bound_envelope(kind, len(series) - 1, **params).values
        labels = grid
    else:
        lam = measured
        floor = 1e-12 * lam[0] if lam[0] > 0 else 0.0
        series = []
        labels = []
        keep = []
        for i in range(len(lam) - 1):
            if lam[i] > floor:
                series.append(lam[i + 1] / lam[i])
                labels.append(grid[i])
                keep.append(i)
        series = np.array(series)
        params = {"d": d, "kappa": kappa, "mu": mu}
        env_all = bound_envelope(
            kind, len(lam) - 1,
            **({"tau0": _first_column(all_rows, "tau"), **params} if kind == "sr1_quadratic"
               else {"sigma0": _first_column(all_rows, "sigma"), **params})
        ).values
        envelope = env_all[keep]

    base = abs(series[0]) if len(series) else 1.0
    tol = atol if atol is not None else 1e-12 * max(base, 1.0)
    violations = 0
    print(f"# compare kind={kind} slack={slack} files={len(paths)}", file=out)
    print("k,measured,envelope,ratio,violation", file=out)
    for label, m, e in zip(labels, series, envelope):
        m = float(m)
        e = float(e)
        bad = m > slack * e + tol
        violations += bad
        ratio = m / e if e != 0.0 else float("inf")
        print(f"{label},{m!r},{e!r},{ratio:.6g},{int(bad)}", file=out)
    print(f"# violations: {violations}", file=out)
    return violations


def _first_column(all_rows, column) -> float:
    values = [float(rows[0][column]) for rows in all_rows if rows[0][column] != ""]
    if not values:
        raise ValueError(f"column {column!r} missing from step 0")
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnbench",
        description="Quasi-Newton update benchmarks with per-iteration CSV traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute one experiment configuration")
    runp.add_argument("--config", help="flat key = value config file")
    runp.add_argument("--experiment", choices=EXPERIMENTS)
    runp.add_argument("--d", type=int)
    runp.add_argument("--m-or-n", dest="m_or_n", type=int)
    runp.add_argument("--gamma", type=float)
    runp.add_argument("--kappa", type=float)
    runp.add_argument("--rule", help="sr1 | bfgs | dfp | broyden:<tau>")
    runp.add_argument("--direction", choices=VARIANTS)
    runp.add_argument("--seeds", help="comma-separated seed list")
    runp.add_argument("--m-const", dest="m_const", type=float)
    runp.add_argument("--warm-start-steps", dest="warm_start_steps", type=int)
    runp.add_argument("--max-iters", dest="max_iters", type=int)
    runp.add_argument("--grad-tol", dest="grad_tol")
    runp.add_argument("--lambda-tol", dest="lambda_tol")
    runp.add_argument("--dataset", dest="dataset_path")
    runp.add_argument("--output-dir", dest="output_dir")
    runp.add_argument("--instance-seed", dest="instance_seed", type=int)
    runp.add_argument("--g0", choices=("lmax_identity", "hessian"))
    runp.add_argument("--allow-expensive", dest="allow_expensive",
                      action="store_const", const=True)
    runp.add_argument("--timing", action="store_const", const=True)

    cmp = sub.add_parser("compare", help="check traces against a bound envelope")
    cmp.add_argument("files", nargs="*", help="trace CSV files on a shared step grid")
    cmp.add_argument("--kind", required=True, help="envelope kind, e.g. sr1_matrix")
    cmp.add_argument("--slack", type=float, default=1.0,
                     help="multiplier on the envelope (for sampled means)")
    cmp.add_argument("--atol", type=float, default=None)
    return parser


_RUN_KEYS = ("experiment", "d", "m_or_n", "gamma", "kappa", "rule", "direction",
             "seeds", "m_const", "warm_start_steps", "max_iters", "grad_tol",
             "lambda_tol", "dataset_path", "output_dir", "instance_seed", "g0",
             "allow_expensive", "timing")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            file_values = load_config_file(args.config) if args.config else {}
            overrides = {key: getattr(args, key) for key in _RUN_KEYS}
            if overrides.get("output_dir") is None and os.environ.get(OUTPUT_ENV_VAR):
                overrides["output_dir"] = os.environ[OUTPUT_ENV_VAR]
            config = build_config(file_values, overrides)
            paths = run(config)
            for path in paths:
                print(path)
            return 0
        violations = compare(args.files, args.kind, slack=args.slack, atol=args.atol)
        return 1 if violations else 0
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"qnbench: error: {exc}", file=sys.stderr)
        return 2
    except (RunFailed, InvariantViolation, ValueError, OSError) as exc:
        print(f"qnbench: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

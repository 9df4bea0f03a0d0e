"""Command-line driver for ridge, LASSO and non-negative PCA experiments.

Subcommands ``run``, ``compare``, ``sweep`` write one CSV per
(estimator, theta, seed) with header

    iter,oracle_calls,objective,gap,avg_gap,dist_sq,gen_grad_norm

and ``reference`` writes a reference solution file

    f_star=<decimal>
    residual=<decimal>
    x= <p decimals>

Options may also come from ``--config FILE`` (flat ``key = value`` lines);
command-line flags take precedence over the file, which takes precedence
over the built-in defaults.

Exit codes: 0 success, 1 configuration or input error, 2 divergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import LibsvmParseError, load_libsvm, rescale_features
from .estimators import EstimatorSpec
from .objective import LEAST_SQUARES, NEG_SQUARE, FiniteSumObjective
from .regularizer import L1, L2Sq, NonnegBall
from .rng import SplitMix64
from .solver import (
    CONVEX, NONCONVEX, REGIMES, STRONGLY_CONVEX, DivergenceError, ReferenceSolution,
    SolverConfig, reference_solution, run,
)

log = logging.getLogger("vrsgd")

CSV_HEADER = "iter,oracle_calls,objective,gap,avg_gap,dist_sq,gen_grad_norm"
PROBLEMS = ("ridge", "lasso", "nnpca")
DEFAULT_REGIME = {"ridge": STRONGLY_CONVEX, "lasso": CONVEX, "nnpca": NONCONVEX}

DEFAULTS = {
    "problem": "ridge",
    "estimator": "sarge",
    "theta": "1",
    "epoch_len": None,
    "step": "paper",
    "regime": None,
    "seed": "0",
    "init_seed": "0",
    "epochs": "20",
    "beta": "auto",
    "ref": None,
    "out": "results",
    "tol": "1e-12",
    "ref_tol": "1e-10",
    "max_iters": "1000000",
    "jobs": "1",
    "cold_start": "false",
}


class ConfigError(ValueError):
    pass


def _fmt(value):
    return format(float(value), ".17g")


@dataclass
class ExperimentSpec:
    problem: str
    data_path: str
    estimators: list
    steps: list
    regime: str
    epochs: int
    seeds: list
    init_seed: int = 0
    beta: str = "auto"
    ref_path: str | None = None
    out: str = "results"
    ref_tol: float = 1e-10
    max_iters: int = 1_000_000
    jobs: int = 1
    record_every: int | None = None
    labels: list = field(default_factory=list)


@dataclass
class Problem:
    objective: FiniteSumObjective
    regularizer: object
    x0: np.ndarray


def build_problem(problem, data, beta="auto", init_seed=0):
    """Objective, regularizer and starting point for one of the three problems."""
    if problem not in PROBLEMS:
        raise ConfigError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")
    n = data.n_samples
    beta_value = 1.0 / n if str(beta) == "auto" else float(beta)
    if beta_value < 0:
        raise ConfigError("beta must be non-negative")
    if problem == "nnpca":
        obj = FiniteSumObjective(data, NEG_SQUARE)
        x0 = SplitMix64(init_seed).normal_vector(obj.p)
        return Problem(obj, NonnegBall(), x0)
    obj = FiniteSumObjective(data, LEAST_SQUARES)
    reg = L2Sq(beta_value) if problem == "ridge" else L1(beta_value)
    return Problem(obj, reg, np.zeros(obj.p))


def resolve_step(step, problem, prob, spec, regime):
    """Turn a step token into (fixed step or None, regime for theory step)."""
    L = prob.objective.lipschitz
    n = prob.objective.n
    if step == "theory":
        if spec.name == "sgd":
            raise ConfigError("no theory step size for sgd")
        return None, regime
    if step == "paper":
        return (1.0 / (5 * L * n) if problem == "nnpca" else 1.0 / (5 * L)), None
    if step == "paper-body":
        return (1.0 / (5 * n) if problem == "nnpca" else 1.0 / (5 * L)), None
    try:
        eta = float(step)
    except ValueError:
        raise ConfigError(f"invalid step {step!r}") from None
    if not eta > 0:
        raise ConfigError("step size must be positive")
    return eta, None


def reference_default_step(problem, prob):
    L = prob.objective.lipschitz
    return 1.0 / (10 * L * prob.objective.n) if problem == "nnpca" else 1.0 / L


def solve_reference(problem, prob, tol, max_iters):
    """Proximal gradient reference point.

    For nnpca the problem is non-convex, so PGD is started both from the shared
    x0 and from the uniform direction 1/sqrt(p); the lower objective wins.
    """
    eta = reference_default_step(problem, prob)
    if problem != "nnpca":
        return reference_solution(prob.objective, prob.regularizer, tol, max_iters, eta)
    starts = (prob.x0, np.full(prob.objective.p, 1.0 / np.sqrt(prob.objective.p)))
    refs = [reference_solution(prob.objective, prob.regularizer, tol, max_iters, eta, x0) for x0 in starts]
    return min(refs, key=lambda r: r.f_star)


def write_reference(path, ref):
    text = (
        f"f_star={_fmt(ref.f_star)}\n"
        f"residual={_fmt(ref.residual)}\n"
        "x= " + " ".join(_fmt(v) for v in ref.x_star) + "\n"
    )
    _atomic_write(Path(path), text)


def read_reference(path):
    fields = {}
    for line in Path(path).read_text().splitlines():
        key, sep, value = line.partition("=")
        if sep:
            fields[key.strip()] = value.strip()
    try:
        x = np.array([float(v) for v in fields["x"].split()])
        residual = float(fields["residual"])
        return ReferenceSolution(x, float(fields["f_star"]), residual, True, 0)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed reference file {path}: {exc}") from None


def trajectory_csv(traj):
    lines = [CSV_HEADER]
    for c in traj.checkpoints:
        lines.append(
            ",".join(
                [str(c.iteration), str(c.oracle_calls)]
                + [_fmt(v) for v in (c.objective, c.gap, c.avg_gap, c.dist_sq, c.gen_grad_norm)]
            )
        )
    return "\n".join(lines) + "\n"


def _atomic_write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_problem(exp):
    try:
        data = rescale_features(load_libsvm(exp.data_path))
    except OSError as exc:
        raise ConfigError(f"cannot read data file: {exc}") from None
    return build_problem(exp.problem, data, exp.beta, exp.init_seed)


def _reference_for(exp, prob):
    if exp.ref_path and Path(exp.ref_path).exists():
        ref = read_reference(exp.ref_path)
        if ref.x_star.shape != (prob.objective.p,):
            raise ConfigError("reference dimension does not match the data")
        return ref
    return solve_reference(exp.problem, prob, exp.ref_tol, exp.max_iters)


def _run_task(task):
    exp, spec, step, seed, path, ref = task
    prob = _load_problem(exp)
    fixed, regime = resolve_step(step, exp.problem, prob, spec, exp.regime)
    config = SolverConfig(
        estimator=spec, step_size=fixed, regime=regime,
        max_iterations=exp.epochs * prob.objective.n,
        record_every=exp.record_every or prob.objective.n, seed=seed, x0=prob.x0,
    )
    traj = run(prob.objective, prob.regularizer, config, ref)
    _atomic_write(Path(path), trajectory_csv(traj))
    return path, traj.step_size, ref.residual


def run_experiment(exp):
    """Run every (estimator, seed) pair of ``exp``; returns the written CSV paths."""
    if not exp.estimators:
        raise ConfigError("no estimator given")
    prob = _load_problem(exp)
    for spec, step in zip(exp.estimators, exp.steps):
        resolve_step(step, exp.problem, prob, spec, exp.regime)  # fail fast on bad combinations
    ref = _reference_for(exp, prob)
    tasks = []
    for spec, step, label in zip(exp.estimators, exp.steps, exp.labels):
        for seed in exp.seeds:
            path = Path(exp.out) / f"{exp.problem}_{label}_seed{seed}.csv"
            tasks.append((exp, spec, step, seed, str(path), ref))

    if exp.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=exp.jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    for path, eta, residual in results:
        print(f"{path}: eta={_fmt(eta)} reference_residual={_fmt(residual)}", file=sys.stderr)
    return [r[0] for r in results]


def parse_theta_list(text, n):
    values = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        value = float(n) if token == "n" else float(token)
        if not value > 0:
            raise ConfigError(f"theta must be positive, got {token}")
        values.append(value)
    if not values:
        raise ConfigError("empty theta list")
    return values


def read_config_file(path):
    """Flat ``key = value`` file; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        if key not in DEFAULTS and key != "data":
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _merged(args):
    opts = dict(DEFAULTS)
    opts["data"] = None
    if args.config:
        try:
            opts.update(read_config_file(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config"):
            opts[key] = value
    return opts


def _int_list(text):
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"invalid integer list {text!r}") from None


def _bool(text):
    return str(text).lower() in ("1", "true", "yes", "on")


def experiment_from_options(command, opts):
    if not opts.get("data"):
        raise ConfigError("--data is required")
    problem = opts["problem"]
    if problem not in PROBLEMS:
        raise ConfigError(f"unknown problem {problem!r}")
    regime = opts["regime"] or DEFAULT_REGIME[problem]
    if regime not in REGIMES:
        raise ConfigError(f"unknown regime {regime!r}")
    epoch_len = int(opts["epoch_len"]) if opts["epoch_len"] else None
    cold = _bool(opts["cold_start"])
    names = [s.strip() for s in str(opts["estimator"]).split(",") if s.strip()]
    step_tokens = [s.strip() for s in str(opts["step"]).split(",") if s.strip()]
    if not names:
        raise ConfigError("no estimator given")

    # theta may contain the token "n", resolved once the data size is known
    try:
        n = load_libsvm(opts["data"]).n_samples
    except OSError as exc:
        raise ConfigError(f"cannot read data file: {exc}") from None
    thetas = parse_theta_list(opts["theta"], n)

    specs = []
    if command == "sweep":
        if len(names) != 1 or names[0] not in ("bsaga", "bsvrg"):
            raise ConfigError("sweep needs exactly one of bsaga, bsvrg")
        specs = [EstimatorSpec(names[0], theta=t, epoch_length=epoch_len) for t in thetas]
    elif command == "run":
        if len(names) != 1 or len(thetas) != 1:
            raise ConfigError("run takes one estimator and one theta; use compare or sweep")
        specs = [EstimatorSpec(names[0], thetas[0], epoch_len, cold)]
    else:
        if len(thetas) not in (1, len(names)):
            raise ConfigError("give one theta or one per estimator")
        for i, name in enumerate(names):
            theta = thetas[i] if len(thetas) > 1 else thetas[0]
            specs.append(EstimatorSpec(name, theta, epoch_len, cold))

    if len(step_tokens) == 1:
        step_tokens = step_tokens * len(specs)
    if len(step_tokens) != len(specs):
        raise ConfigError("give one step or one per estimator")
    seeds = _int_list(opts["seed"])
    if not seeds:
        raise ConfigError("no seed given")
    epochs = int(opts["epochs"])
    if epochs < 1:
        raise ConfigError("epochs must be >= 1")
    return ExperimentSpec(
        problem=problem, data_path=opts["data"], estimators=specs, steps=step_tokens,
        regime=regime, epochs=epochs, seeds=seeds, init_seed=int(opts["init_seed"]),
        beta=opts["beta"], ref_path=opts["ref"], out=opts["out"],
        ref_tol=float(opts["ref_tol"]), max_iters=int(opts["max_iters"]),
        jobs=int(opts["jobs"]), labels=[s.label for s in specs],
    )


def cmd_reference(opts):
    if not opts.get("data"):
        raise ConfigError("--data is required")
    tol = float(opts["tol"])
    if not tol > 0:
        raise ConfigError("tol must be positive")
    exp = ExperimentSpec(
        problem=opts["problem"], data_path=opts["data"], estimators=[], steps=[],
        regime="", epochs=1, seeds=[], init_seed=int(opts["init_seed"]), beta=opts["beta"],
    )
    prob = _load_problem(exp)
    ref = solve_reference(exp.problem, prob, tol, int(opts["max_iters"]))
    out = opts["ref"] or opts["out"]
    if out == DEFAULTS["out"]:
        out = "reference.txt"
    write_reference(out, ref)
    if not ref.converged:
        print(f"warning: reference not converged (residual {_fmt(ref.residual)})", file=sys.stderr)
    print(f"{out}: f_star={_fmt(ref.f_star)} residual={_fmt(ref.residual)}", file=sys.stderr)
    return ref


def build_parser():
    parser = argparse.ArgumentParser(prog="vrsgd", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "single estimator, one CSV per seed"),
        ("compare", "several estimators side by side"),
        ("sweep", "bias-parameter sweep for bsaga or bsvrg"),
        ("reference", "high-accuracy reference solution"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value file")
        p.add_argument("--data", help="LIBSVM data file")
        p.add_argument("--problem", choices=PROBLEMS)
        p.add_argument("--beta", help="regularization weight or 'auto' for 1/n")
        p.add_argument("--ref", help="reference file (read by run/compare/sweep, written by reference)")
        p.add_argument("--out", help="output directory (reference: output file)")
        p.add_argument("--init-seed", dest="init_seed", help="seed of the nnpca starting point")
        p.add_argument("--max-iters", dest="max_iters", help="reference solver iteration budget")
        p.add_argument("--jobs", help="parallel runs")
        if name == "reference":
            p.add_argument("--tol", help="generalized-gradient tolerance")
            continue
        p.add_argument("--estimator", help="sgd, bsaga, bsvrg, sarah, sarge (comma list for compare)")
        p.add_argument("--theta", help="bias parameter(s); 'n' means the sample count")
        p.add_argument("--epoch-len", dest="epoch_len", help="epoch length m (default n)")
        p.add_argument("--step", help="'theory', 'paper', 'paper-body' or a positive number")
        p.add_argument("--regime", choices=REGIMES)
        p.add_argument("--seed", help="sampling seed(s), comma separated")
        p.add_argument("--epochs", help="passes over the data (iterations = epochs * n)")
        p.add_argument("--ref-tol", dest="ref_tol", help="tolerance when computing the reference")
        p.add_argument("--cold-start", dest="cold_start", action="store_const", const="true",
                       help="SARGE without the initial full gradient")
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        opts = _merged(args)
        if args.command == "reference":
            cmd_reference(opts)
        else:
            run_experiment(experiment_from_options(args.command, opts))
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, LibsvmParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

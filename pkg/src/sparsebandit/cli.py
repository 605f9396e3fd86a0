"""Configuration-driven experiment runner.

Config grammar: plain text, one `key value` pair per line, `#` starts a
comment. List-valued keys take comma-separated entries without spaces.

    algorithm    param-elim | design-elim | benign-elim | general-features |
                 random-baseline   (comma list allowed with the sweep command)
    source       random-sparse | explicit-file | hard-instance
    instance_file  path            (explicit-file source)
    d            grid list of feature dimensions
    s            grid list of sparsities
    epsilon      grid list; misspecification bound, or the orthogonality
                 level when source = hard-instance
    k            grid list of action counts (hard-instance: 0 = threshold)
    delta        grid list of reward gaps (hard-instance embedding and the
                 random-baseline target)
    seeds        list of seeds
    c_const      threshold constant for benign elimination (default 2.0)
    c_jl         compression dimension constant (default 8.0)
    c            hard-instance regime constant (default 2.0)
    tau          hard-instance slack (default 0.1)
    hard_delta   hard-instance failure budget (default 0.25)
    i_star       hidden index for hard-instance embedding (default 0)
    budget       query budget for benign elimination (default 50*k)
    kappa        bound constant for the compressed algorithms (default 10.0)
    pool_size    net pool override for param-elim (default: library default)
    seed_net     1 to plant the true restriction in the net when it is a
                 unit vector (default 1)
    measure_time 1 to record real wall-clock times in the CSV; the default 0
                 keeps output byte-reproducible
    output       CSV path (default experiment.csv)
    log_output   optional CSV path for per-step detail rows (elimination
                 steps, per-round records, pipeline summaries)

CSV columns, fixed order: algorithm, d, s, epsilon, k, seed, queries,
uniform_error, suboptimality, bound, bound_satisfied, wall_ms. Exit codes:
0 success, 1 config error, 2 guard violation, 3 invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .compressed_elim import compressed_uniform_error, run_benign_elimination
from .compression import build_map
from .design_elim import run_design_elimination
from .errors import (
    ConfigError,
    GuardExceededError,
    OverflowGuardError,
    SparseBanditError,
    ValidationError,
)
from .hardness import (
    HardMatrixSpec,
    embed_index_query,
    generate_validated,
    random_search,
)
from .model import (
    NORM_TOL,
    QueryLedger,
    load_instance,
    random_sparse_instance,
    save_instance,
)
from .net import build_separated_net, include_point
from .param_elim import TRIPLE_GUARD, run_parameter_elimination
from .sparse_recovery import RECOVERY_GUARD, run_general_features

ALGORITHMS = ("param-elim", "design-elim", "benign-elim", "general-features",
              "random-baseline")
SOURCES = ("random-sparse", "explicit-file", "hard-instance")
CSV_COLUMNS = ("algorithm", "d", "s", "epsilon", "k", "seed", "queries",
               "uniform_error", "suboptimality", "bound", "bound_satisfied",
               "wall_ms")

# bound constants for the compressed algorithms, frozen by one calibration
# sweep (see tests/test_acceptance.py)
KAPPA_DEFAULT = 10.0


@dataclass
class ExperimentConfig:
    algorithms: list
    source: str = "random-sparse"
    instance_file: str | None = None
    d: list = field(default_factory=lambda: [4])
    s: list = field(default_factory=lambda: [1])
    epsilon: list = field(default_factory=lambda: [0.1])
    k: list = field(default_factory=lambda: [16])
    delta: list = field(default_factory=lambda: [0.5])
    seeds: list = field(default_factory=lambda: [0])
    c_const: float = 2.0
    c_jl: float = 8.0
    c: float = 2.0
    tau: float = 0.1
    hard_delta: float = 0.25
    i_star: int = 0
    budget: int | None = None
    kappa: float = KAPPA_DEFAULT
    pool_size: int | None = None
    seed_net: bool = True
    measure_time: bool = False
    output: str = "experiment.csv"
    log_output: str | None = None


@dataclass
class RunRecord:
    algorithm: str
    d: int
    s: int
    epsilon: float
    k: int
    seed: int
    queries: int
    uniform_error: float
    suboptimality: float
    bound: float
    bound_satisfied: bool
    wall_ms: int

    def row(self):
        def fmt(x):
            if isinstance(x, bool):
                return "true" if x else "false"
            if isinstance(x, float):
                return f"{x:.17g}"
            return str(x)
        return [fmt(getattr(self, col)) for col in CSV_COLUMNS]


_INT_LIST = {"d", "s", "k", "seeds"}
_FLOAT_LIST = {"epsilon", "delta"}
_FLOATS = {"c_const", "c_jl", "c", "tau", "hard_delta", "kappa"}
_INTS = {"i_star", "budget", "pool_size"}
_BOOLS = {"seed_net", "measure_time"}
_STRINGS = {"source", "instance_file", "output", "log_output"}


def parse_config(path) -> ExperimentConfig:
    """Parse the flat key/value grammar; errors carry 1-based line numbers."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"{path}:{line_no}: expected 'key value', got {line!r}")
            key, value = parts[0], parts[1].strip()
            if key in values:
                raise ConfigError(f"{path}:{line_no}: duplicate key {key!r}")
            values[(key)] = (value, line_no)

    cfg = ExperimentConfig(algorithms=[])

    def take(key):
        return values.pop(key, (None, None))

    value, line_no = take("algorithm")
    if value is None:
        raise ConfigError(f"{path}: missing required key 'algorithm'")
    cfg.algorithms = value.split(",")
    for alg in cfg.algorithms:
        if alg not in ALGORITHMS:
            raise ConfigError(
                f"{path}:{line_no}: unknown algorithm {alg!r} "
                f"(expected one of {', '.join(ALGORITHMS)})")

    for key in list(values):
        value, line_no = values.pop(key)
        try:
            if key in _INT_LIST:
                setattr(cfg, "seeds" if key == "seeds" else key,
                        [int(v) for v in value.split(",")])
            elif key in _FLOAT_LIST:
                setattr(cfg, key, [float(v) for v in value.split(",")])
            elif key in _FLOATS:
                setattr(cfg, key, float(value))
            elif key in _INTS:
                setattr(cfg, key, int(value))
            elif key in _BOOLS:
                if value not in ("0", "1"):
                    raise ValueError("expected 0 or 1")
                setattr(cfg, key, value == "1")
            elif key in _STRINGS:
                if key == "source" and value not in SOURCES:
                    raise ValueError(f"expected one of {', '.join(SOURCES)}")
                setattr(cfg, key, value)
            else:
                raise ValueError("unknown key")
        except ValueError as exc:
            raise ConfigError(f"{path}:{line_no}: bad value for {key!r}: {exc}") from None

    if cfg.source == "explicit-file" and not cfg.instance_file:
        raise ConfigError(f"{path}: source explicit-file needs 'instance_file'")
    return cfg


def _grid(cfg: ExperimentConfig):
    """Deterministic grid enumeration order: d, s, epsilon, k, delta, seed."""
    for d in cfg.d:
        for s in cfg.s:
            for eps in cfg.epsilon:
                for k in cfg.k:
                    for delta in cfg.delta:
                        for seed in cfg.seeds:
                            yield d, s, eps, k, delta, seed


def _build_point_instance(cfg, d, s, eps, k, delta, seed):
    if cfg.source == "explicit-file":
        return load_instance(cfg.instance_file)
    if cfg.source == "hard-instance":
        spec = HardMatrixSpec(d=d, s=s, epsilon=eps, tau=cfg.tau,
                              delta=cfg.hard_delta, seed=seed,
                              k=k if k > 0 else None, c=cfg.c)
        features, _, _ = generate_validated(spec)
        return embed_index_query(features, cfg.i_star, delta,
                                 epsilon=2.0 * delta * eps)
    return random_sparse_instance(d, s, k, eps, seed)


def _net_for(cfg, instance, seed):
    net = build_separated_net(instance.s, instance.epsilon, seed,
                              pool_size=cfg.pool_size)
    if cfg.seed_net:
        restriction = instance.theta_star.coords[list(instance.theta_star.support)]
        if abs(np.linalg.norm(restriction) - 1.0) <= NORM_TOL:
            net = include_point(net, restriction)
    return net


def check_guards(cfg: ExperimentConfig):
    """Evaluate every grid point's guard before any query is issued.

    Returns the list of violations as (point, message); building nets and
    instances issues no queries, so this phase is side-effect free.
    """
    violations = []
    for alg in cfg.algorithms:
        for point in _grid(cfg):
            d, s, eps, k, delta, seed = point
            try:
                if alg == "param-elim":
                    instance = _build_point_instance(cfg, *point)
                    net = _net_for(cfg, instance, seed)
                    triples = net.size ** 2 * math.comb(instance.d, net.s)
                    if triples > TRIPLE_GUARD:
                        raise GuardExceededError(
                            f"{triples} candidate triples exceed {TRIPLE_GUARD}")
                elif alg in ("design-elim", "general-features"):
                    guard = 10 ** 5 if alg == "design-elim" else RECOVERY_GUARD
                    if math.comb(d, s) > guard:
                        raise GuardExceededError(
                            f"{math.comb(d, s)} subsets exceed {guard}")
            except GuardExceededError as exc:
                violations.append((alg, point, str(exc)))
            except OverflowGuardError as exc:
                violations.append((alg, point, str(exc)))
    return violations


def _payload(**kwargs):
    return ";".join(f"{key}={value}" for key, value in kwargs.items())


def _run_point(cfg, alg, point):
    d, s, eps, k, delta, seed = point
    instance = _build_point_instance(cfg, *point)
    ledger = QueryLedger()
    t0 = time.perf_counter()
    nan = float("nan")
    details = []

    if alg == "param-elim":
        net = _net_for(cfg, instance, seed)
        res = run_parameter_elimination(instance, ledger, net=net)
        err = res.final_error
        preds = instance.features.matrix[:, list(res.index_set)] @ res.theta_hat
        chosen = int(np.argmax(preds))
        bound = 4.0 * instance.epsilon
        for e in res.log:
            details.append(("elimination", e.step, _payload(
                action=e.action, reward=f"{e.reward:.17g}",
                anchor=f"{e.anchor_value:.17g}", primary=e.primary,
                rival=e.rival, killed=e.killed)))
        details.append(("summary", len(res.log), _payload(
            triples_initial=res.initial_triples,
            triples_remaining=res.remaining_triples,
            queries=res.queries, final_error=f"{err:.17g}")))
    elif alg == "design-elim":
        res = run_design_elimination(instance, ledger)
        err = res.final_error
        preds = instance.features.matrix[:, list(res.index_set)] @ res.theta_hat
        chosen = int(np.argmax(preds))
        bound = 3.0 * instance.epsilon * (1.0 + math.sqrt(2.0 * instance.s))
        for e in res.log:
            details.append(("elimination", e.step, _payload(
                action=e.action, reward=f"{e.reward:.17g}",
                primary=e.primary, rival=e.rival, killed=e.killed)))
        details.append(("summary", len(res.log), _payload(
            queries=res.queries, phase1_queries=res.phase1_queries,
            final_error=f"{err:.17g}")))
    elif alg == "benign-elim":
        cmap = build_map(instance.d, instance.d, 0)
        budget = cfg.budget if cfg.budget is not None else 50 * instance.k
        res = run_benign_elimination(instance, cmap, budget, ledger,
                                     C_const=cfg.c_const)
        err = compressed_uniform_error(instance, cmap, res.theta_f)
        frows = cmap.apply(instance.features.matrix)
        surviving_preds = frows[res.surviving] @ res.theta_f
        chosen = int(res.surviving[int(np.argmax(surviving_preds))])
        bound = cfg.kappa * (math.log(instance.k) ** 0.25
                             * math.sqrt(instance.epsilon) + instance.epsilon)
        for r in res.log:
            details.append(("round", r.round, _payload(
                active_before=r.active_before, active_after=r.active_after,
                threshold=f"{r.threshold:.17g}",
                cumulative_queries=r.cumulative_queries)))
        details.append(("summary", res.rounds, _payload(
            queries=res.queries, surviving=len(res.surviving),
            soundness_ok=res.soundness_ok, final_error=f"{err:.17g}")))
    elif alg == "general-features":
        res = run_general_features(instance, ledger, c_jl=cfg.c_jl,
                                   C_const=cfg.c_const, budget=cfg.budget)
        err = res.final_error
        preds = instance.features.matrix @ res.theta_hat
        chosen = int(np.argmax(preds))
        bound = cfg.kappa * ((instance.s * math.log(instance.d)) ** 0.25
                             * math.sqrt(instance.s * instance.epsilon)
                             + instance.epsilon)
        details.append(("summary", 0, _payload(
            phi=f"{res.phi:.17g}", q=res.q, psi_rows=res.psi_rows,
            recovery_objective=f"{res.recovery_objective:.17g}",
            support="|".join(str(i) for i in res.recovered_support),
            error=f"{err:.17g}", bound=f"{bound:.17g}",
            queries=res.queries, map_seed=res.map_seed)))
    elif alg == "random-baseline":
        _, chosen = random_search(instance, seed, ledger)
        err = nan
        bound = delta
    else:  # pragma: no cover - guarded by config validation
        raise ConfigError(f"unknown algorithm {alg}")

    wall_ms = int(round((time.perf_counter() - t0) * 1000)) if cfg.measure_time else 0
    best_reward = float(np.max(instance.rewards))
    subopt = best_reward - float(instance.rewards[chosen])
    satisfied = subopt <= bound if alg == "random-baseline" else err <= bound
    record = RunRecord(
        algorithm=alg, d=instance.d, s=instance.s, epsilon=instance.epsilon,
        k=instance.k, seed=seed, queries=len(ledger), uniform_error=err,
        suboptimality=subopt, bound=bound, bound_satisfied=bool(satisfied),
        wall_ms=wall_ms)
    prefix = [alg, instance.d, instance.s, f"{instance.epsilon:.17g}",
              instance.k, seed]
    detail_rows = [prefix + [kind, step, payload]
                   for kind, step, payload in details]
    return record, detail_rows


def run_experiment(cfg: ExperimentConfig):
    """Execute every grid point for every algorithm; guard check first."""
    violations = check_guards(cfg)
    if violations:
        lines = [f"{alg} {point}: {msg}" for alg, point, msg in violations]
        raise GuardExceededError("guard violations:\n" + "\n".join(lines))
    records, details = [], []
    for alg in cfg.algorithms:
        for point in _grid(cfg):
            record, detail_rows = _run_point(cfg, alg, point)
            records.append(record)
            details.extend(detail_rows)
    if cfg.log_output:
        write_detail_csv(details, cfg.log_output)
    return records


def write_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record.row())


DETAIL_COLUMNS = ("algorithm", "d", "s", "epsilon", "k", "seed", "kind",
                  "step", "payload")


def write_detail_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DETAIL_COLUMNS)
        for row in rows:
            writer.writerow(row)


def validate_instance_file(path):
    """Re-check every model invariant of a serialized instance.

    Returns (ok, messages). Hard-instance files (orthogonality header) also
    re-run the exhaustive pairwise scan at the recorded level.
    """
    messages = []
    instance = load_instance(path)  # raises on any invariant violation
    messages.append(f"parsed: k={instance.k} d={instance.d} s={instance.s} "
                    f"epsilon={instance.epsilon:.6g}")
    recomputed = instance.features.matrix @ instance.theta_star.coords + instance.misspec
    if not np.array_equal(recomputed, instance.rewards):
        return False, messages + ["reward table mismatch"]
    messages.append("reward table consistent")
    if np.max(np.abs(instance.misspec)) > instance.epsilon:
        return False, messages + ["misspecification exceeds epsilon"]
    messages.append("misspecification within epsilon")
    if instance.orthogonality is not None:
        gram = instance.features.matrix @ instance.features.matrix.T
        iu = np.triu_indices(instance.k, k=1)
        level = float(np.max(np.abs(gram[iu]))) if iu[0].size else 0.0
        if level > instance.orthogonality + 1e-12:
            return False, messages + [
                f"pairwise level {level:.6g} exceeds recorded "
                f"{instance.orthogonality:.6g}"]
        messages.append(f"pairwise scan ok at level {level:.6g}")
    return True, messages


def generate_hard_file(cfg: ExperimentConfig, out_path):
    d, s = cfg.d[0], cfg.s[0]
    eps, delta, seed = cfg.epsilon[0], cfg.delta[0], cfg.seeds[0]
    k = cfg.k[0]
    spec = HardMatrixSpec(d=d, s=s, epsilon=eps, tau=cfg.tau,
                          delta=cfg.hard_delta, seed=seed,
                          k=k if k > 0 else None, c=cfg.c)
    features, attempts, reports = generate_validated(spec)
    instance = embed_index_query(features, cfg.i_star, delta,
                                 epsilon=2.0 * delta * eps)
    save_instance(instance, out_path)
    with open(f"{out_path}.rejections.csv", "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("seed", "norm_failures", "sparsity_failures",
                         "pairwise_failures", "accepted"))
        for report in reports:
            writer.writerow((report.seed, report.norm_failures,
                             report.sparsity_failures,
                             report.pairwise_failures,
                             "true" if report.accepted else "false"))
    return instance, attempts


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sparsebandit",
        description="misspecified sparse linear bandit harness")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one algorithm over a config grid")
    p_run.add_argument("config")
    p_sweep = sub.add_parser("sweep", help="run a comma list of algorithms")
    p_sweep.add_argument("config")
    p_val = sub.add_parser("validate", help="re-check an instance file")
    p_val.add_argument("instance_file")
    p_gen = sub.add_parser("generate-hard", help="generate an embedded hard instance")
    p_gen.add_argument("config")
    p_gen.add_argument("out")
    args = parser.parse_args(argv)

    try:
        if args.command in ("run", "sweep"):
            cfg = parse_config(args.config)
            if args.command == "run" and len(cfg.algorithms) != 1:
                raise ConfigError("run expects exactly one algorithm; use sweep")
            records = run_experiment(cfg)
            write_csv(records, cfg.output)
            print(f"wrote {len(records)} records to {cfg.output}")
            return 0
        if args.command == "validate":
            ok, messages = validate_instance_file(args.instance_file)
            for message in messages:
                print(message)
            print("OK" if ok else "INVARIANT FAILURE")
            return 0 if ok else 3
        if args.command == "generate-hard":
            cfg = parse_config(args.config)
            instance, attempts = generate_hard_file(cfg, args.out)
            print(f"validated matrix after {attempts} attempt(s); "
                  f"k={instance.k} epsilon={instance.epsilon:.6g} -> {args.out}")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (GuardExceededError, OverflowGuardError) as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, SparseBanditError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

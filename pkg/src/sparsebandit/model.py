"""Bandit environment: feature matrices, sparse ground truth, rewards, ledgers.

The instance is the only source of rewards in the package. Rewards are
precomputed at construction (reward_i = <row_i, theta*> + misspec_i) and
immutable, so every bound check downstream is exact and repeatable. Instances
are safe to share read-only across runs; each run owns its own QueryLedger
(and, for noisy instances, the ledger owns the run's private noise stream).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    MisspecificationBoundError,
    NormBoundError,
    SparsityError,
    ValidationError,
)

NORM_TOL = 1e-9


@dataclass(frozen=True)
class NoiseModel:
    """Reward noise. kind="none" keeps queries deterministic and repeatable;
    kind="gaussian" adds one fresh unit-variance draw per query."""

    kind: str = "none"
    scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ValidationError(f"unknown noise kind {self.kind!r}")


@dataclass(frozen=True)
class FeatureMatrix:
    """Ordered action features, one row per action, each with norm <= 1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.float64))
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] < 1:
            raise DimensionMismatchError("feature matrix must be 2-d with k >= 1 rows")
        if not np.all(np.isfinite(m)):
            raise ValidationError("feature matrix has non-finite entries")
        norms = np.linalg.norm(m, axis=1)
        if np.any(norms > 1.0 + NORM_TOL):
            worst = int(np.argmax(norms))
            raise NormBoundError(
                f"action row {worst} has norm {norms[worst]:.12g} > 1")

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class SparseParameter:
    """Ground-truth parameter with exactly |support| nonzero coordinates."""

    coords: np.ndarray
    support: tuple = field(init=False)

    # The norm bound is waived for embedded lower-bound instances, which
    # plant a parameter of norm 2*Delta; the instance records the bypass.
    skip_norm_check: bool = False

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.coords, dtype=np.float64))
        object.__setattr__(self, "coords", c)
        if c.ndim != 1:
            raise DimensionMismatchError("parameter must be a vector")
        if not np.all(np.isfinite(c)):
            raise ValidationError("parameter has non-finite entries")
        support = tuple(int(i) for i in np.nonzero(c)[0])
        object.__setattr__(self, "support", support)
        if not support:
            raise SparsityError("parameter has empty support")
        if not self.skip_norm_check and np.linalg.norm(c) > 1.0 + NORM_TOL:
            raise NormBoundError(
                f"parameter norm {np.linalg.norm(c):.12g} exceeds 1")

    @property
    def s(self) -> int:
        return len(self.support)

    @property
    def d(self) -> int:
        return self.coords.shape[0]


class QueryLedger:
    """Append-only record of (action index, reward, counter) per query.

    One ledger per run; its length is the run's sample complexity. For noisy
    instances the ledger also owns the run's private noise stream.
    """

    def __init__(self, noise_seed: int | None = None):
        self.entries: list[tuple[int, float, int]] = []
        self.noise_seed = noise_seed
        self._rng = None

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, index: int, reward: float) -> None:
        self.entries.append((int(index), float(reward), len(self.entries)))

    def noise_rng(self, default_seed: int):
        if self._rng is None:
            seed = self.noise_seed if self.noise_seed is not None else default_seed
            self._rng = np.random.default_rng(seed)
        return self._rng


@dataclass(frozen=True)
class BanditInstance:
    """Deterministic reward table r_i = <row_i, theta*> + misspec_i.

    max_i |misspec_i| <= epsilon is enforced at construction. Optional
    metadata records how lower-bound embeddings deviate from the default
    parameter invariants.
    """

    features: FeatureMatrix
    theta_star: SparseParameter
    misspec: np.ndarray
    epsilon: float
    noise: NoiseModel = NoiseModel()
    rewards: np.ndarray = field(init=False)
    theta_norm_bypassed: bool = False
    orthogonality: float | None = None
    seed: int = 0

    def __post_init__(self):
        nu = np.ascontiguousarray(np.asarray(self.misspec, dtype=np.float64))
        object.__setattr__(self, "misspec", nu)
        if self.theta_star.d != self.features.d:
            raise DimensionMismatchError(
                f"parameter dimension {self.theta_star.d} != feature dimension {self.features.d}")
        if nu.shape != (self.features.k,):
            raise DimensionMismatchError(
                f"misspecification length {nu.shape} != number of actions {self.features.k}")
        if not (self.epsilon > 0):
            raise ValidationError("epsilon must be positive")
        if np.max(np.abs(nu)) > self.epsilon:
            raise MisspecificationBoundError(
                f"misspecification exceeds epsilon: max |nu| = "
                f"{np.max(np.abs(nu)):.12g} > {self.epsilon:.12g}")
        rewards = self.features.matrix @ self.theta_star.coords + nu
        rewards.setflags(write=False)
        object.__setattr__(self, "rewards", rewards)

    @property
    def k(self) -> int:
        return self.features.k

    @property
    def d(self) -> int:
        return self.features.d

    @property
    def s(self) -> int:
        return self.theta_star.s

    @property
    def deterministic(self) -> bool:
        return self.noise.kind == "none"


def build_instance(features, theta_star, misspec, epsilon, noise=None) -> BanditInstance:
    """Validate all model invariants and precompute the reward table."""
    if not isinstance(features, FeatureMatrix):
        features = FeatureMatrix(np.asarray(features))
    if not isinstance(theta_star, SparseParameter):
        theta_star = SparseParameter(np.asarray(theta_star))
    return BanditInstance(
        features=features,
        theta_star=theta_star,
        misspec=np.asarray(misspec, dtype=np.float64),
        epsilon=float(epsilon),
        noise=noise if noise is not None else NoiseModel(),
    )


def query(instance: BanditInstance, index: int, ledger: QueryLedger) -> float:
    """Query one action; returns its reward and appends one ledger entry."""
    index = int(index)
    if not 0 <= index < instance.k:
        raise IndexError(f"action index {index} out of range [0, {instance.k})")
    reward = float(instance.rewards[index])
    if instance.noise.kind == "gaussian":
        rng = ledger.noise_rng(instance.noise.seed)
        reward += instance.noise.scale * float(rng.normal())
    ledger.record(index, reward)
    return reward


def brute_force_best(instance: BanditInstance) -> tuple[int, float]:
    """Argmax over the full reward table; ties broken by lowest index.

    Harness-side oracle only (reads the table without querying); requires a
    deterministic instance.
    """
    if not instance.deterministic:
        raise ValidationError("brute_force_best requires a deterministic instance")
    best = int(np.argmax(instance.rewards))
    return best, float(instance.rewards[best])


def uniform_error(instance: BanditInstance, theta_hat, index_set) -> float:
    """max over actions of |r_a - <a_L, theta_hat>| for L = index_set."""
    idx = np.asarray(list(index_set), dtype=np.intp)
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    if theta_hat.shape != (idx.size,):
        raise DimensionMismatchError(
            f"estimator length {theta_hat.shape} != index set size {idx.size}")
    if idx.size and (idx.min() < 0 or idx.max() >= instance.d):
        raise DimensionMismatchError("index set outside feature dimensions")
    preds = instance.features.matrix[:, idx] @ theta_hat
    return float(np.max(np.abs(instance.rewards - preds)))


def predicted_best(instance: BanditInstance, theta_hat, index_set) -> int:
    """Action maximizing the estimated reward <a_L, theta_hat>; first on ties."""
    idx = np.asarray(list(index_set), dtype=np.intp)
    preds = instance.features.matrix[:, idx] @ np.asarray(theta_hat, dtype=np.float64)
    return int(np.argmax(preds))


def random_sparse_instance(d, s, k, epsilon, seed, *, noise=None,
                           basis_probes=True, unit_theta=True) -> BanditInstance:
    """Seeded random instance for the harness.

    Rows are unit vectors; with basis_probes the first 2d rows are the signed
    standard basis (these populate every restriction's extreme values, which
    keeps elimination runs informative). theta* sits on a random support of
    size s, unit norm by default so nets can be seeded with its restriction.
    """
    if k < (2 * d if basis_probes else 1):
        raise ValidationError("k too small for the requested probe rows")
    rng = np.random.default_rng(seed)
    rows = []
    if basis_probes:
        eye = np.eye(d)
        rows.extend(eye)
        rows.extend(-eye)
    n_random = k - len(rows)
    g = rng.normal(size=(n_random, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rows.extend(g)
    phi = np.asarray(rows)

    support = np.sort(rng.choice(d, size=s, replace=False))
    vals = rng.normal(size=s)
    vals /= np.linalg.norm(vals)
    if not unit_theta:
        vals *= rng.uniform(0.5, 0.95)
    theta = np.zeros(d)
    theta[support] = vals

    nu = rng.uniform(-epsilon, epsilon, size=k)
    return build_instance(phi, theta, nu, epsilon, noise=noise)


# -- serialization -----------------------------------------------------------

_MAGIC = "sparse-bandit-instance v1"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def save_instance(instance: BanditInstance, path) -> None:
    """Write the instance as structured text, 17 significant digits per real.

    The decimal format round-trips IEEE doubles bit-exactly.
    """
    lines = [_MAGIC,
             f"k {instance.k}",
             f"d {instance.d}",
             f"s {instance.s}",
             f"epsilon {_fmt(instance.epsilon)}",
             f"noise {instance.noise.kind}",
             f"noise_scale {_fmt(instance.noise.scale)}",
             f"seed {instance.noise.seed}"]
    if instance.orthogonality is not None:
        lines.append(f"orthogonality {_fmt(instance.orthogonality)}")
    if instance.theta_norm_bypassed:
        lines.append("theta_norm_bypassed 1")
    lines.append("phi")
    for row in instance.features.matrix:
        lines.append(" ".join(_fmt(v) for v in row))
    lines.append("theta")
    lines.append(" ".join(_fmt(v) for v in instance.theta_star.coords))
    lines.append("nu")
    lines.append(" ".join(_fmt(v) for v in instance.misspec))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


class InstanceParseError(ValidationError):
    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def load_instance(path) -> BanditInstance:
    """Parse an instance file; errors carry 1-based line numbers."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != _MAGIC:
        raise InstanceParseError(f"expected header {_MAGIC!r}", 1)

    header = {}
    pos = 1
    while pos < len(raw) and raw[pos].strip() != "phi":
        parts = raw[pos].split()
        if len(parts) != 2:
            raise InstanceParseError(f"expected 'key value', got {raw[pos]!r}", pos + 1)
        header[parts[0]] = parts[1]
        pos += 1
    if pos >= len(raw):
        raise InstanceParseError("missing 'phi' section", len(raw))

    def need_int(key):
        if key not in header:
            raise InstanceParseError(f"missing header key {key!r}", pos)
        try:
            return int(header[key])
        except ValueError:
            raise InstanceParseError(f"key {key!r} is not an integer", pos) from None

    def need_float(key):
        if key not in header:
            raise InstanceParseError(f"missing header key {key!r}", pos)
        try:
            return float(header[key])
        except ValueError:
            raise InstanceParseError(f"key {key!r} is not a real", pos) from None

    k = need_int("k")
    d = need_int("d")
    s = need_int("s")
    epsilon = need_float("epsilon")
    noise_kind = header.get("noise", "none")
    noise_scale = need_float("noise_scale") if "noise_scale" in header else 1.0
    seed = need_int("seed") if "seed" in header else 0
    orthogonality = need_float("orthogonality") if "orthogonality" in header else None
    bypass = header.get("theta_norm_bypassed", "0") == "1"

    def parse_row(line_idx, expected_len, what):
        try:
            vals = [float(v) for v in raw[line_idx].split()]
        except (ValueError, IndexError):
            raise InstanceParseError(f"bad {what} row", line_idx + 1) from None
        if len(vals) != expected_len:
            raise InstanceParseError(
                f"{what} row has {len(vals)} values, expected {expected_len}",
                line_idx + 1)
        return vals

    pos += 1  # past 'phi'
    phi = np.asarray([parse_row(pos + i, d, "phi") for i in range(k)])
    pos += k
    if pos >= len(raw) or raw[pos].strip() != "theta":
        raise InstanceParseError("missing 'theta' section", pos + 1)
    theta = np.asarray(parse_row(pos + 1, d, "theta"))
    pos += 2
    if pos >= len(raw) or raw[pos].strip() != "nu":
        raise InstanceParseError("missing 'nu' section", pos + 1)
    nu = np.asarray(parse_row(pos + 1, k, "nu"))

    inst = BanditInstance(
        features=FeatureMatrix(phi),
        theta_star=SparseParameter(theta, skip_norm_check=bypass),
        misspec=nu,
        epsilon=epsilon,
        noise=NoiseModel(kind=noise_kind, scale=noise_scale, seed=seed),
        theta_norm_bypassed=bypass,
        orthogonality=orthogonality,
    )
    if inst.s != s:
        raise InstanceParseError(
            f"declared sparsity {s} != parameter support size {inst.s}", pos + 1)
    return inst

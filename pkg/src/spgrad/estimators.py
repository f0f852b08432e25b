"""Likelihood-ratio policy-gradient estimators and their error bounds.

Two estimators over a batch of N trajectories:

  REINFORCE:  mean_i (sum_t gamma^t r_t^i - b) * (sum_t score_t^i)
  GPOMDP:     mean_i sum_t (gamma^t r_t^i - b_t) * (sum_{h<=t} score_h^i)

with either a zero baseline or the component-wise variance-minimizing
baselines of Peters & Schaal estimated from the batch.  Single-trajectory
variance is bounded by a closed-form nu^2 (so Var <= nu^2 / N), which a
Chebyshev argument turns into the high-probability estimation error
eps_delta = sqrt(nu^2 / delta).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, NumericError
from .mdp import MdpSpec, Trajectory

_PETERS_DENOM_FLOOR = 1e-12


class EstimatorKind(str, Enum):
    REINFORCE = "reinforce"
    GPOMDP = "gpomdp"


class BaselineKind(str, Enum):
    ZERO = "zero"
    PETERS = "peters"


@dataclass
class GradientEstimate:
    vector: np.ndarray
    batch_size: int
    estimator_kind: EstimatorKind
    baseline_kind: BaselineKind

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


@dataclass(frozen=True)
class VarianceBound:
    """Single-trajectory bound: Var of the N-sample estimate is <= nu_squared / N."""

    nu_squared: float

    def __post_init__(self) -> None:
        if self.nu_squared < 0:
            raise ConfigurationError("nu_squared must be non-negative")


@dataclass(frozen=True)
class ErrorBound:
    """With probability 1 - delta the estimate is within eps_delta / sqrt(N) of the gradient."""

    delta: float
    eps_delta: float


# ---------------------------------------------------------------------------
# Per-trajectory terms
# ---------------------------------------------------------------------------


def trajectory_scores(traj: Trajectory, policy, theta: np.ndarray) -> np.ndarray:
    """(T, m) array of per-step scores along the trajectory."""
    return np.stack(
        [policy.score(theta, s, a) for s, a in zip(traj.states, traj.actions)]
    )


def reinforce_terms(
    traj: Trajectory, policy, theta: np.ndarray, gamma: float
) -> tuple[float, np.ndarray]:
    """Discounted return G and summed score S for one trajectory."""
    rewards = np.asarray(traj.rewards, dtype=float)
    g = float(np.dot(gamma ** np.arange(rewards.size), rewards))
    s = trajectory_scores(traj, policy, theta).sum(axis=0)
    return g, s


def gpomdp_terms(
    traj: Trajectory, policy, theta: np.ndarray, gamma: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-step discounted rewards gamma^t r_t and cumulative scores (T, m)."""
    rewards = np.asarray(traj.rewards, dtype=float)
    disc = gamma ** np.arange(rewards.size) * rewards
    cum = np.cumsum(trajectory_scores(traj, policy, theta), axis=0)
    return disc, cum


def peters_baseline_reinforce(
    returns: np.ndarray, score_sums: np.ndarray, weights: np.ndarray | None = None
) -> np.ndarray:
    """Component-wise b_j = E[G * S_j^2] / E[S_j^2] over the batch (or weights)."""
    returns = np.asarray(returns, dtype=float)
    score_sums = np.asarray(score_sums, dtype=float)
    w = np.ones(returns.size) if weights is None else np.asarray(weights, dtype=float)
    sq = score_sums**2
    num = (w[:, None] * returns[:, None] * sq).sum(axis=0)
    den = (w[:, None] * sq).sum(axis=0)
    return np.where(den > _PETERS_DENOM_FLOOR, num / np.maximum(den, _PETERS_DENOM_FLOOR), 0.0)


def peters_baseline_gpomdp(
    disc_rewards: np.ndarray, cum_scores: np.ndarray, weights: np.ndarray | None = None
) -> np.ndarray:
    """Per-timestep, component-wise b_tj = E[gamma^t r_t C_tj^2] / E[C_tj^2].

    disc_rewards: (N, T), cum_scores: (N, T, m); returns (T, m).
    """
    disc_rewards = np.asarray(disc_rewards, dtype=float)
    cum_scores = np.asarray(cum_scores, dtype=float)
    w = np.ones(disc_rewards.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    sq = cum_scores**2
    num = (w[:, None, None] * disc_rewards[:, :, None] * sq).sum(axis=0)
    den = (w[:, None, None] * sq).sum(axis=0)
    return np.where(den > _PETERS_DENOM_FLOOR, num / np.maximum(den, _PETERS_DENOM_FLOOR), 0.0)


# ---------------------------------------------------------------------------
# Incremental accumulation
# ---------------------------------------------------------------------------


class GradientAccumulator:
    """Streaming sufficient statistics for a gradient estimate.

    Adding trajectories one at a time and finalizing matches the batch
    functions bit-for-bit with the zero baseline; Peters baselines are
    recomputed from the stored statistics at finalize time.  Two
    accumulators over disjoint trajectory sets may be merged.
    """

    def __init__(
        self,
        policy,
        theta: np.ndarray,
        gamma: float,
        kind: EstimatorKind,
        baseline: BaselineKind = BaselineKind.ZERO,
    ):
        self.policy = policy
        self.theta = np.asarray(theta, dtype=float)
        self.gamma = gamma
        self.kind = EstimatorKind(kind)
        self.baseline = BaselineKind(baseline)
        self.count = 0
        self.horizon: int | None = None
        self.return_sum = 0.0  # running sum of discounted returns, for J-hat logging
        m = policy.dim
        self._sum_g = np.zeros(m)  # per-trajectory gradient terms, zero baseline
        if self.baseline is BaselineKind.PETERS:
            if self.kind is EstimatorKind.REINFORCE:
                self._sum_s = np.zeros(m)
                self._sum_s2 = np.zeros(m)
                self._sum_gs2 = np.zeros(m)
            else:
                self._peters_arrays: tuple[np.ndarray, ...] | None = None

    def _ensure_gpomdp_arrays(self, horizon: int) -> None:
        if self._peters_arrays is None:
            m = self.policy.dim
            self._peters_arrays = (
                np.zeros((horizon, m)),  # sum of gamma^t r_t * C
                np.zeros((horizon, m)),  # sum of C
                np.zeros((horizon, m)),  # sum of gamma^t r_t * C^2
                np.zeros((horizon, m)),  # sum of C^2
            )

    def add_trajectory(self, traj: Trajectory) -> "GradientAccumulator":
        if self.horizon is None:
            self.horizon = len(traj)
        elif len(traj) != self.horizon:
            raise ValueError(
                f"trajectory has horizon {len(traj)}, accumulator expects {self.horizon}"
            )
        if self.kind is EstimatorKind.REINFORCE:
            g, s = reinforce_terms(traj, self.policy, self.theta, self.gamma)
            self.return_sum += g
            self._sum_g += g * s
            if self.baseline is BaselineKind.PETERS:
                self._sum_s += s
                self._sum_s2 += s**2
                self._sum_gs2 += g * s**2
        else:
            disc, cum = gpomdp_terms(traj, self.policy, self.theta, self.gamma)
            self.return_sum += float(disc.sum())
            self._sum_g += (disc[:, None] * cum).sum(axis=0)
            if self.baseline is BaselineKind.PETERS:
                self._ensure_gpomdp_arrays(len(traj))
                sum_rc, sum_c, sum_rc2, sum_c2 = self._peters_arrays
                sq = cum**2
                sum_rc += disc[:, None] * cum
                sum_c += cum
                sum_rc2 += disc[:, None] * sq
                sum_c2 += sq
        self.count += 1
        return self

    def merge(self, other: "GradientAccumulator") -> "GradientAccumulator":
        if (self.kind, self.baseline) != (other.kind, other.baseline):
            raise ValueError("cannot merge accumulators of different estimator settings")
        if other.count == 0:
            return self
        if self.horizon is None:
            self.horizon = other.horizon
        elif other.horizon is not None and other.horizon != self.horizon:
            raise ValueError("cannot merge accumulators with different horizons")
        self.count += other.count
        self.return_sum += other.return_sum
        self._sum_g += other._sum_g
        if self.baseline is BaselineKind.PETERS:
            if self.kind is EstimatorKind.REINFORCE:
                self._sum_s += other._sum_s
                self._sum_s2 += other._sum_s2
                self._sum_gs2 += other._sum_gs2
            elif other._peters_arrays is not None:
                self._ensure_gpomdp_arrays(self.horizon)
                for mine, theirs in zip(self._peters_arrays, other._peters_arrays):
                    mine += theirs
        return self

    def mean_return(self) -> float:
        if self.count == 0:
            raise ValueError("no trajectories accumulated")
        return self.return_sum / self.count

    def finalize(self) -> GradientEstimate:
        if self.count == 0:
            raise ValueError("cannot finalize an empty accumulator")
        n = self.count
        if self.baseline is BaselineKind.ZERO:
            vector = self._sum_g / n
        elif self.kind is EstimatorKind.REINFORCE:
            b = np.where(
                self._sum_s2 > _PETERS_DENOM_FLOOR,
                self._sum_gs2 / np.maximum(self._sum_s2, _PETERS_DENOM_FLOOR),
                0.0,
            )
            vector = (self._sum_g - b * self._sum_s) / n
        else:
            sum_rc, sum_c, sum_rc2, sum_c2 = self._peters_arrays
            b = np.where(
                sum_c2 > _PETERS_DENOM_FLOOR, sum_rc2 / np.maximum(sum_c2, _PETERS_DENOM_FLOOR), 0.0
            )
            vector = (sum_rc - b * sum_c).sum(axis=0) / n
        if not np.all(np.isfinite(vector)):
            raise NumericError("gradient estimate is not finite")
        return GradientEstimate(
            vector=vector, batch_size=n, estimator_kind=self.kind, baseline_kind=self.baseline
        )


# ---------------------------------------------------------------------------
# Batch estimators
# ---------------------------------------------------------------------------


def _batch_estimate(batch, policy, theta, gamma, kind, baseline) -> GradientEstimate:
    acc = GradientAccumulator(policy, theta, gamma, kind, baseline)
    for traj in batch:
        acc.add_trajectory(traj)
    if acc.count == 0:
        raise ValueError("empty batch")
    return acc.finalize()


def reinforce_gradient(
    batch, policy, theta: np.ndarray, gamma: float, baseline: BaselineKind = BaselineKind.ZERO
) -> GradientEstimate:
    """REINFORCE estimate over a batch of trajectories."""
    return _batch_estimate(batch, policy, theta, gamma, EstimatorKind.REINFORCE, baseline)


def gpomdp_gradient(
    batch, policy, theta: np.ndarray, gamma: float, baseline: BaselineKind = BaselineKind.ZERO
) -> GradientEstimate:
    """GPOMDP estimate over a batch of trajectories."""
    return _batch_estimate(batch, policy, theta, gamma, EstimatorKind.GPOMDP, baseline)


# ---------------------------------------------------------------------------
# Variance and estimation-error bounds
# ---------------------------------------------------------------------------


def variance_bound(kind: EstimatorKind, spec: MdpSpec, kappa: float) -> VarianceBound:
    """Closed-form nu^2 such that the N-sample trace variance is <= nu^2 / N.

    REINFORCE grows linearly with the horizon; GPOMDP stays bounded in T.
    """
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    gamma, r, t = spec.gamma, spec.r_max, spec.horizon
    truncation = 1.0 - gamma**t
    if EstimatorKind(kind) is EstimatorKind.REINFORCE:
        nu2 = t * kappa * r * r * truncation**2 / (1.0 - gamma) ** 2
    else:
        nu2 = kappa * r * r * truncation / (1.0 - gamma) ** 3
    return VarianceBound(nu_squared=nu2)


def error_bound(vb: VarianceBound, delta: float) -> ErrorBound:
    """Chebyshev: with probability 1 - delta, ||error|| <= sqrt(nu^2 / delta) / sqrt(N)."""
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must be in (0, 1), got {delta}")
    return ErrorBound(delta=delta, eps_delta=float(np.sqrt(vb.nu_squared / delta)))

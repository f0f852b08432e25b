"""MDP abstractions, trajectory sampling, and desk-scale environments.

An environment is any object with an ``spec`` attribute (an :class:`MdpSpec`)
and two pure sampling operations::

    reset(rng) -> state
    step(state, action, rng) -> (next_state, reward)

``step`` is stateless: identical inputs and rng stream yield identical
outputs.  Episodes always run exactly ``spec.horizon`` steps; there are no
absorbing states or early terminations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np

from .errors import ConfigurationError, NumericError

_STOCHASTIC_ATOL = 1e-12


@dataclass(frozen=True)
class MdpSpec:
    """The scalars every bound is parameterized by.

    gamma: discount factor in (0, 1).
    r_max: bound on the absolute value of every reward the environment emits.
    horizon: episode length T; the effective horizon of the task.
    """

    gamma: float
    r_max: float
    horizon: int

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma must be in (0, 1), got {self.gamma}")
        if not self.r_max > 0.0:
            raise ConfigurationError(f"r_max must be positive, got {self.r_max}")
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")


@dataclass
class Trajectory:
    """A fixed-horizon episode: per-step states, actions and rewards."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    def __post_init__(self) -> None:
        if not (len(self.states) == len(self.actions) == len(self.rewards)):
            raise ValueError("states, actions and rewards must have equal length")
        if len(self.rewards) == 0:
            raise ValueError("trajectory must contain at least one step")

    def __len__(self) -> int:
        return len(self.rewards)


class Environment(Protocol):
    spec: MdpSpec

    def reset(self, rng: np.random.Generator) -> Any: ...

    def step(self, state: Any, action: Any, rng: np.random.Generator) -> tuple[Any, float]: ...


def discounted_return(traj: Trajectory, gamma: float) -> float:
    """Sum of gamma^t * reward_t over the trajectory."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    rewards = np.asarray(traj.rewards, dtype=float)
    if rewards.size == 0:
        raise ValueError("empty trajectory")
    return float(np.dot(gamma ** np.arange(rewards.size), rewards))


def sample_trajectory(
    env: Environment, policy, theta: np.ndarray, rng: np.random.Generator
) -> Trajectory:
    """Roll out one episode of exactly ``env.spec.horizon`` steps.

    The initial state is drawn from the environment, each action from
    ``policy`` at ``theta``, each transition from the environment kernel.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (policy.dim,):
        raise ConfigurationError(
            f"theta has shape {theta.shape}, policy expects ({policy.dim},)"
        )
    horizon = env.spec.horizon
    states, actions, rewards = [], [], []
    state = env.reset(rng)
    for _ in range(horizon):
        action = policy.sample_action(theta, state, rng)
        next_state, reward = env.step(state, action, rng)
        states.append(state)
        actions.append(action)
        rewards.append(reward)
        state = next_state
    return Trajectory(
        states=np.asarray(states),
        actions=np.asarray(actions),
        rewards=np.asarray(rewards, dtype=float),
    )


@dataclass
class EnumerableMdp:
    """A finite MDP given by explicit tables; the substrate for exact oracles.

    transition[s, a, s'] holds the transition probabilities, reward[s, a]
    the (deterministic) rewards, initial[s] the start distribution.
    """

    n_states: int
    n_actions: int
    transition: np.ndarray
    reward: np.ndarray
    initial: np.ndarray
    spec: MdpSpec

    def __post_init__(self) -> None:
        self.transition = np.asarray(self.transition, dtype=float)
        self.reward = np.asarray(self.reward, dtype=float)
        self.initial = np.asarray(self.initial, dtype=float)
        expected = (self.n_states, self.n_actions, self.n_states)
        if self.transition.shape != expected:
            raise ConfigurationError(
                f"transition tensor has shape {self.transition.shape}, expected {expected}"
            )
        if self.reward.shape != (self.n_states, self.n_actions):
            raise ConfigurationError(
                f"reward table has shape {self.reward.shape}, "
                f"expected {(self.n_states, self.n_actions)}"
            )
        if self.initial.shape != (self.n_states,):
            raise ConfigurationError(
                f"initial distribution has shape {self.initial.shape}, "
                f"expected {(self.n_states,)}"
            )
        if np.any(self.transition < 0.0) or np.any(self.initial < 0.0):
            raise ConfigurationError("probabilities must be non-negative")
        row_sums = self.transition.sum(axis=-1)
        if np.max(np.abs(row_sums - 1.0)) > _STOCHASTIC_ATOL:
            raise ConfigurationError("transition rows must sum to 1 within 1e-12")
        if abs(self.initial.sum() - 1.0) > _STOCHASTIC_ATOL:
            raise ConfigurationError("initial distribution must sum to 1 within 1e-12")
        if np.max(np.abs(self.reward)) > self.spec.r_max + 1e-12:
            raise ConfigurationError("rewards exceed spec.r_max")


class EnumerableEnv:
    """Sampling view of an :class:`EnumerableMdp`.

    When ``bin_edges`` is given, real-valued actions are mapped to discrete
    action indices by interval: action index j covers
    [edges[j-1], edges[j]).  This lets continuous-action policies drive a
    finite MDP while keeping the MDP itself enumerable.
    """

    def __init__(self, mdp: EnumerableMdp, bin_edges: np.ndarray | None = None):
        self.mdp = mdp
        self.spec = mdp.spec
        self.bin_edges = None if bin_edges is None else np.asarray(bin_edges, dtype=float)
        if self.bin_edges is not None:
            if self.bin_edges.size != mdp.n_actions - 1:
                raise ConfigurationError(
                    f"{mdp.n_actions} actions require {mdp.n_actions - 1} bin edges, "
                    f"got {self.bin_edges.size}"
                )
            if np.any(np.diff(self.bin_edges) <= 0):
                raise ConfigurationError("bin edges must be strictly increasing")
        self._cum_initial = np.cumsum(mdp.initial)
        self._cum_next = np.cumsum(mdp.transition, axis=-1)

    def _draw(self, cum: np.ndarray, rng: np.random.Generator) -> int:
        idx = int(np.searchsorted(cum, rng.random(), side="right"))
        return min(idx, cum.size - 1)

    def action_index(self, action: Any) -> int:
        if self.bin_edges is not None:
            return int(np.searchsorted(self.bin_edges, float(action), side="right"))
        index = int(action)
        if not 0 <= index < self.mdp.n_actions:
            raise ValueError(f"action {index} out of range [0, {self.mdp.n_actions})")
        return index

    def reset(self, rng: np.random.Generator) -> int:
        return self._draw(self._cum_initial, rng)

    def step(self, state: int, action: Any, rng: np.random.Generator) -> tuple[int, float]:
        s = int(state)
        a = self.action_index(action)
        next_state = self._draw(self._cum_next[s, a], rng)
        return next_state, float(self.mdp.reward[s, a])


@dataclass(frozen=True)
class Lqg1dConfig:
    """Bounded 1-D linear-quadratic testbed for continuous-action policies.

    Dynamics s' = a_dyn*s + b_dyn*action + noise, with the state clipped to
    [-s_max, s_max] and the quadratic cost clipped at r_max, so rewards are
    always in [-r_max, 0].
    """

    gamma: float = 0.9
    horizon: int = 10
    a_dyn: float = 1.0
    b_dyn: float = 1.0
    noise_std: float = 0.2
    q: float = 0.5
    c: float = 0.5
    s_max: float = 1.0
    r_max: float = 1.0


class Lqg1dEnv:
    def __init__(self, config: Lqg1dConfig):
        if config.s_max <= 0:
            raise ConfigurationError(f"s_max must be positive, got {config.s_max}")
        if config.noise_std < 0:
            raise ConfigurationError(f"noise_std must be non-negative, got {config.noise_std}")
        # MdpSpec rejects r_max <= 0.
        self.spec = MdpSpec(gamma=config.gamma, r_max=config.r_max, horizon=config.horizon)
        self.config = config

    def reset(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(-self.config.s_max, self.config.s_max))

    def step(self, state: float, action: float, rng: np.random.Generator) -> tuple[float, float]:
        cfg = self.config
        s = float(state)
        a = float(action)
        if not np.isfinite(a):
            raise NumericError(f"non-finite action {a}")
        reward = -min(cfg.q * s * s + cfg.c * a * a, cfg.r_max)
        drift = cfg.a_dyn * s + cfg.b_dyn * a + cfg.noise_std * rng.standard_normal()
        next_state = float(np.clip(drift, -cfg.s_max, cfg.s_max))
        return next_state, reward


def make_lqg1d(config: Lqg1dConfig) -> Lqg1dEnv:
    """Build the bounded-reward 1-D LQG environment."""
    return Lqg1dEnv(config)


@dataclass(frozen=True)
class ChainConfig:
    """Discrete chain: move LEFT/RIGHT along n states, reward at the goal.

    With probability ``slip`` the move fails and the agent stays put.  The
    goal is the rightmost state; reward depends on the current state only.
    """

    n_states: int
    slip: float = 0.0
    goal_reward: float = 1.0
    step_reward: float = 0.0
    gamma: float = 0.9
    horizon: int = 5


LEFT, RIGHT = 0, 1


def make_chain(config: ChainConfig) -> EnumerableMdp:
    """Build the chain as an enumerable MDP (start at the leftmost state)."""
    n = config.n_states
    if n < 2:
        raise ConfigurationError(f"chain needs at least 2 states, got {n}")
    if not 0.0 <= config.slip < 1.0:
        raise ConfigurationError(f"slip must be in [0, 1), got {config.slip}")
    transition = np.zeros((n, 2, n))
    for s in range(n):
        for a, move in ((LEFT, -1), (RIGHT, +1)):
            target = min(max(s + move, 0), n - 1)
            transition[s, a, target] += 1.0 - config.slip
            transition[s, a, s] += config.slip
    reward = np.zeros((n, 2))
    reward[: n - 1, :] = config.step_reward
    reward[n - 1, :] = config.goal_reward
    initial = np.zeros(n)
    initial[0] = 1.0
    r_max = max(abs(config.goal_reward), abs(config.step_reward))
    spec = MdpSpec(gamma=config.gamma, r_max=r_max, horizon=config.horizon)
    return EnumerableMdp(
        n_states=n, n_actions=2, transition=transition, reward=reward, initial=initial, spec=spec
    )


def make_bandit(
    arm_rewards: "list[float] | np.ndarray", gamma: float = 0.5, horizon: int = 1
) -> EnumerableMdp:
    """Single-state bandit: one arm per action, deterministic rewards."""
    arms = np.asarray(arm_rewards, dtype=float)
    if arms.ndim != 1 or arms.size < 2:
        raise ConfigurationError("bandit needs at least two arm rewards")
    n_actions = arms.size
    transition = np.ones((1, n_actions, 1))
    spec = MdpSpec(gamma=gamma, r_max=float(np.max(np.abs(arms))), horizon=horizon)
    return EnumerableMdp(
        n_states=1,
        n_actions=n_actions,
        transition=transition,
        reward=arms.reshape(1, n_actions),
        initial=np.ones(1),
        spec=spec,
    )

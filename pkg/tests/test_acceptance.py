"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete.  Sampling-heavy criteria use counter-derived
streams, so every number here is reproducible.
"""
import math
import os

import numpy as np
import pytest
import yaml

from spgrad.cli import EXIT_OK, main
from spgrad.estimators import (
    BaselineKind,
    EstimatorKind,
    GradientAccumulator,
    error_bound,
    variance_bound,
)
from spgrad.mdp import sample_trajectory
from spgrad.oracle import (
    exact_gradient,
    exact_hessian,
    exact_performance,
    expected_gradient_estimate,
    fd_gradient,
    grid_maximize,
)
from spgrad.rng import substream
from spgrad.safe_updates import (
    lipschitz_constant,
    optimal_step_and_batch,
    optimal_step_exact,
    spg_run,
    stochastic_improvement_bound,
)
from spgrad.testbeds import chain_instance, lqg_instance

SEED = 77_000


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def test_01_estimator_unbiasedness(two_state):
    theta = 0.5 * substream(SEED, 1).standard_normal(two_state.policy.dim)
    exact = exact_gradient(two_state.mdp, two_state.policy, theta)
    # independent route for the oracle itself: finite differences of the DP value
    fd = fd_gradient(two_state.mdp, two_state.policy, theta)
    oracle_gap = np.linalg.norm(exact.grad - fd) / max(np.linalg.norm(fd), 1e-12)
    worst = 0.0
    for kind in EstimatorKind:
        mean = expected_gradient_estimate(
            two_state.mdp, two_state.policy, theta, kind, BaselineKind.ZERO
        )
        worst = max(worst, float(np.max(np.abs(mean - exact.grad))))
    ok = worst <= 1e-10 and oracle_gap <= 1e-6
    report(
        "01 estimator-unbiasedness",
        ok,
        f"max component gap {worst:.2e} (tol 1e-10), oracle fd gap {oracle_gap:.2e}",
    )


def _single_sample_trace_variances(env, policy, theta, n_samples, stream):
    gamma = env.spec.gamma
    sums = {kind: np.zeros(policy.dim) for kind in EstimatorKind}
    squares = {kind: 0.0 for kind in EstimatorKind}
    for i in range(n_samples):
        traj = sample_trajectory(env, policy, theta, substream(SEED, stream, i))
        # the bounds above are meaningless if these two contracts slip
        assert len(traj) == env.spec.horizon
        assert np.max(np.abs(traj.rewards)) <= env.spec.r_max + 1e-12
        for kind in EstimatorKind:
            acc = GradientAccumulator(policy, theta, gamma, kind)
            vec = acc.add_trajectory(traj).finalize().vector
            sums[kind] += vec
            squares[kind] += float(vec @ vec)
    out = {}
    for kind in EstimatorKind:
        mean = sums[kind] / n_samples
        out[kind] = squares[kind] / n_samples - float(mean @ mean)
    return out


@pytest.mark.parametrize(
    "label,stream",
    [("gaussian-lqg", 2), ("softmax-chain", 3)],
)
def test_02_variance_bounds(label, stream):
    n_samples = 100_000
    if label == "gaussian-lqg":
        env, policy = lqg_instance(sigma=0.5, gamma=0.9, horizon=10)
        theta = np.array([0.5])
        spec = env.spec
    else:
        inst = chain_instance(n_states=3, slip=0.1, gamma=0.9, horizon=5)
        env, policy = inst.env, inst.policy
        theta = np.zeros(policy.dim)
        spec = inst.mdp.spec
    variances = _single_sample_trace_variances(env, policy, theta, n_samples, stream)
    kappa = policy.smoothing_constants().kappa
    ratios = {
        kind: variances[kind] / variance_bound(kind, spec, kappa).nu_squared
        for kind in EstimatorKind
    }
    worst = max(ratios.values())
    report(
        f"02 variance-bounds[{label}]",
        worst <= 1.0,
        "variance/nu^2 = "
        + ", ".join(f"{k.value} {v:.3f}" for k, v in ratios.items())
        + " (must be <= 1)",
    )


def test_03_chebyshev_coverage(two_state):
    n_estimates, batch = 10_000, 25
    theta = np.zeros(two_state.policy.dim)
    exact = exact_gradient(two_state.mdp, two_state.policy, theta).grad
    gamma = two_state.mdp.spec.gamma
    kappa = two_state.policy.smoothing_constants().kappa
    deltas = (0.1, 0.5)
    eps = {
        kind: {
            d: error_bound(variance_bound(kind, two_state.mdp.spec, kappa), d).eps_delta
            for d in deltas
        }
        for kind in EstimatorKind
    }
    violations = {kind: {d: 0 for d in deltas} for kind in EstimatorKind}
    for i in range(n_estimates):
        accs = {
            kind: GradientAccumulator(two_state.policy, theta, gamma, kind)
            for kind in EstimatorKind
        }
        for j in range(batch):
            traj = sample_trajectory(
                two_state.env, two_state.policy, theta, substream(SEED, 4, i, j)
            )
            for acc in accs.values():
                acc.add_trajectory(traj)
        for kind, acc in accs.items():
            err = float(np.linalg.norm(acc.finalize().vector - exact))
            for d in deltas:
                if err > eps[kind][d] / math.sqrt(batch):
                    violations[kind][d] += 1
    worst = max(
        violations[kind][d] / n_estimates - d for kind in EstimatorKind for d in deltas
    )
    rates = {
        f"{kind.value}@{d}": violations[kind][d] / n_estimates
        for kind in EstimatorKind
        for d in deltas
    }
    report(
        "03 chebyshev-coverage",
        worst <= 0.0,
        f"violation rates {rates} (each must be <= its delta)",
    )


def test_04_quadratic_bound(two_state):
    lip = lipschitz_constant(two_state.policy.smoothing_constants(), two_state.mdp.spec)
    rng = substream(SEED, 5)
    worst = -np.inf
    for _ in range(200):
        theta = 0.5 * rng.standard_normal(two_state.policy.dim)
        step = rng.standard_normal(two_state.policy.dim)
        step *= rng.uniform(0.01, 1.0) / np.linalg.norm(step)
        grad = exact_gradient(two_state.mdp, two_state.policy, theta).grad
        deviation = abs(
            exact_performance(two_state.mdp, two_state.policy, theta + step)
            - exact_performance(two_state.mdp, two_state.policy, theta)
            - float(step @ grad)
        )
        worst = max(worst, deviation - lip.value / 2.0 * float(step @ step))
    report("04 quadratic-bound", worst <= 1e-9, f"max excess {worst:.2e} (tol 1e-9)")


def test_05_hessian_spectral_bound(two_state, binned_gaussian):
    worst = 0.0
    for idx, inst in enumerate((two_state, binned_gaussian)):
        lip = lipschitz_constant(inst.policy.smoothing_constants(), inst.mdp.spec)
        rng = substream(SEED, 6, idx)
        for _ in range(50):
            theta = 0.5 * rng.standard_normal(inst.oracle_policy.dim)
            hess = exact_hessian(inst.mdp, inst.oracle_policy, theta)
            worst = max(worst, float(np.linalg.norm(hess, 2)) / lip.value)
    report(
        "05 hessian-spectral-bound",
        worst <= 1.0 + 1e-6,
        f"max ||H||/L = {worst:.3e} over both policy classes (must be <= 1 + 1e-6)",
    )


def test_06_exact_step_guarantee(two_state):
    lip = lipschitz_constant(two_state.policy.smoothing_constants(), two_state.mdp.spec)
    alpha = optimal_step_exact(lip).alpha
    rng = substream(SEED, 7)
    worst = np.inf
    for _ in range(100):
        theta = 0.5 * rng.standard_normal(two_state.policy.dim)
        grad = exact_gradient(two_state.mdp, two_state.policy, theta).grad
        improvement = exact_performance(
            two_state.mdp, two_state.policy, theta + alpha * grad
        ) - exact_performance(two_state.mdp, two_state.policy, theta)
        worst = min(worst, improvement - float(grad @ grad) / (2.0 * lip.value))
    report("06 exact-step-guarantee", worst >= -1e-9, f"min margin {worst:.2e} (tol -1e-9)")


def test_07_kkt_optima():
    lip, eps, grad_norm, delta = 2.0, 10.0, 2.0, 0.5

    exact_best = grad_norm**2 / (2.0 * lip)
    _, _, exact_grid = grid_maximize(
        lambda a: a * grad_norm**2 - a * a * lip / 2.0 * grad_norm**2, (0.0, 3.0 / lip)
    )
    gap_exact = abs(exact_grid - exact_best) / exact_best

    n_fixed = 64.0
    adaptive_best = (grad_norm - eps / math.sqrt(n_fixed)) ** 2 / (2.0 * lip)
    _, _, adaptive_grid = grid_maximize(
        lambda a: stochastic_improvement_bound(a, grad_norm, eps, n_fixed, lip, delta).value,
        (0.0, 3.0 / lip),
    )
    gap_adaptive = abs(adaptive_grid - adaptive_best) / adaptive_best

    meta = optimal_step_and_batch(grad_norm, eps, lip)
    upsilon_star = grad_norm**4 / (32.0 * lip * eps**2)
    _, _, joint_grid = grid_maximize(
        lambda a, n: stochastic_improvement_bound(a, grad_norm, eps, n, lip, delta).value / n,
        (0.0, 1.0 / lip),
        (1.0, 10.0 * meta.batch_size),
        resolution=1001,
    )
    gap_joint = abs(joint_grid - upsilon_star) / upsilon_star

    # the rejected stationary point of the averaged branch of the bound
    rejected_alpha = 1.0 / (3.0 * lip)
    rejected_n = 3.0 * eps**2 / grad_norm**2
    second_branch = (
        rejected_alpha / 2.0 * (grad_norm**2 - eps**2 / rejected_n)
        - rejected_alpha**2 * lip * grad_norm**2 / 2.0
    ) / rejected_n
    upsilon_rejected = grad_norm**4 / (54.0 * lip * eps**2)
    rejected_identity = abs(second_branch - upsilon_rejected) / upsilon_rejected

    ok = (
        max(gap_exact, gap_adaptive, gap_joint) <= 0.01
        and rejected_identity <= 1e-12
        and upsilon_rejected < upsilon_star
        and meta.alpha == 1.0 / (2.0 * lip)
        and meta.batch_size == 100
    )
    report(
        "07 kkt-optima",
        ok,
        f"grid gaps: exact {gap_exact:.1e}, adaptive {gap_adaptive:.1e}, joint {gap_joint:.1e} "
        f"(tol 1%); rejected branch {upsilon_rejected:.4g} < kept {upsilon_star:.4g}",
    )


def test_08_spg_monotonicity(bandit):
    n_seeds, iterations, delta = 20, 20, 0.2
    updates = 0
    violations = 0
    for s in range(n_seeds):
        result = spg_run(
            bandit.env,
            bandit.policy,
            np.zeros(1),
            n_iterations=iterations,
            delta=delta,
            seed=SEED + s,
        )
        for k, record in enumerate(result.records):
            if record.stalled:
                continue
            updates += 1
            before = exact_performance(bandit.mdp, bandit.policy, result.thetas[k])
            after = exact_performance(bandit.mdp, bandit.policy, result.thetas[k + 1])
            if after - before < record.guaranteed_improvement:
                violations += 1
    rate = violations / updates
    ok = updates == n_seeds * iterations and rate <= delta + 0.1
    report(
        "08 spg-monotonicity",
        ok,
        f"{violations}/{updates} updates below the certified bound "
        f"(rate {rate:.4f}, allowed {delta + 0.1:.2f})",
    )


CONSTANTS_CONFIGS = [
    (
        "gaussian-lqg",
        {
            "environment": {"kind": "lqg1d", "gamma": 0.9, "horizon": 10, "r_max": 1.0},
            "policy": {"kind": "gaussian", "sigma": 0.5, "feature_bound": 1.0},
            "estimator": {"kind": "gpomdp"},
            "safety": {"delta": 0.1, "iterations": 1},
            "seed": 0,
        },
        dict(kind="gaussian", bound=1.0, scale=0.5, gamma=0.9, horizon=10, r=1.0, delta=0.1),
    ),
    (
        "softmax-short",
        {
            "environment": {"kind": "chain", "n_states": 2, "gamma": 0.5, "horizon": 5},
            "policy": {"kind": "softmax", "tau": 2.0, "feature_bound": 1.0},
            "estimator": {"kind": "gpomdp"},
            "safety": {"delta": 0.2, "iterations": 1},
            "seed": 0,
        },
        dict(kind="softmax", bound=1.0, scale=2.0, gamma=0.5, horizon=5, r=1.0, delta=0.2),
    ),
    (
        "softmax-long",
        {
            "environment": {"kind": "chain", "n_states": 2, "gamma": 0.9, "horizon": 10},
            "policy": {"kind": "softmax", "tau": 2.0, "feature_bound": 1.0},
            "estimator": {"kind": "reinforce"},
            "safety": {"delta": 0.1, "iterations": 1},
            "seed": 0,
        },
        dict(kind="softmax", bound=1.0, scale=2.0, gamma=0.9, horizon=10, r=1.0, delta=0.1),
    ),
]


def hand_constants(kind, bound, scale, gamma, horizon, r, delta):
    """Independent evaluation of the per-class closed forms."""
    if kind == "gaussian":
        psi = 2.0 * bound / (math.sqrt(2.0 * math.pi) * scale)
        kappa = bound**2 / scale**2
        xi = kappa
        lip = (
            2.0 * bound**2 * r / (scale**2 * (1 - gamma) ** 2)
            * (1.0 + 2.0 * gamma / (math.pi * (1.0 - gamma)))
        )
    else:
        psi = 2.0 * bound / scale
        kappa = 4.0 * bound**2 / scale**2
        xi = 2.0 * bound**2 / scale**2
        lip = (
            2.0 * bound**2 * r / (scale**2 * (1 - gamma) ** 2)
            * (3.0 + 4.0 * gamma / (1.0 - gamma))
        )
    truncation = 1.0 - gamma**horizon
    nu2_reinforce = horizon * kappa * r * r * truncation**2 / (1.0 - gamma) ** 2
    nu2_gpomdp = kappa * r * r * truncation / (1.0 - gamma) ** 3
    return {
        "psi": psi,
        "kappa": kappa,
        "xi": xi,
        "L": lip,
        "nu2_reinforce": nu2_reinforce,
        "nu2_gpomdp": nu2_gpomdp,
        "eps_delta_reinforce": math.sqrt(nu2_reinforce / delta),
        "eps_delta_gpomdp": math.sqrt(nu2_gpomdp / delta),
    }


def test_09_constants_tables(tmp_path, capsys):
    mismatches = []
    for label, config, hand_args in CONSTANTS_CONFIGS:
        path = tmp_path / f"{label}.yaml"
        path.write_text(yaml.safe_dump(config), encoding="utf-8")
        assert main(["constants", "--config", str(path)]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        printed = {line.split()[0]: line.split()[1] for line in lines}
        for name, value in hand_constants(**hand_args).items():
            expected = format(value, "#.6g")
            if printed[name] != expected:
                mismatches.append(f"{label}.{name}: printed {printed[name]} != {expected}")
    report(
        "09 constants-tables",
        not mismatches,
        "all three configs reproduce the closed forms to 6 significant digits"
        if not mismatches
        else "; ".join(mismatches),
    )


def test_10_run_csv_determinism(tmp_path, capsys):
    config = {
        "environment": {"kind": "chain", "n_states": 2, "slip": 0.1, "gamma": 0.5, "horizon": 3},
        "policy": {"kind": "softmax", "tau": 2.0, "features": "tabular", "feature_bound": 1.0},
        "estimator": {"kind": "gpomdp", "baseline": "zero"},
        "safety": {"delta": 0.5, "iterations": 5},
        "limits": {"max_trajectories_per_iteration": 300, "max_total_trajectories": 100000},
        "seed": 123,
    }
    path = tmp_path / "determinism.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    contents = []
    for run_dir in ("first", "second"):
        out = tmp_path / run_dir
        assert main(["run", "--config", str(path), "--out", str(out)]) == EXIT_OK
        capsys.readouterr()
        with open(out / "run.csv", "rb") as handle:
            contents.append(handle.read())
    ok = contents[0] == contents[1] and len(contents[0]) > 0
    report(
        "10 run-csv-determinism",
        ok,
        f"two invocations produced byte-identical logs ({len(contents[0])} bytes)",
    )

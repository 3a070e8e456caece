"""Fast invariant checks runnable from the command line.

Each check is a pure function of simulation data so that deliberate fault
injection (e.g. a skewed error covariance) is caught by the same code path
the selftest command uses.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import metrics, stripe
from .channel import (
    ChannelEstimateSet, complex_normal, draw_channels, estimation_statistics,
    mmse_estimate, simulate_pilot_phase,
)
from .config import SimulationConfig
from .runner import rng_stream
from .scenario import Scenario, build_scenario


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_covariance_decomposition(
    scenario: Scenario, est: ChannelEstimateSet, rel_tol: float = 1e-10
) -> CheckResult:
    """Estimate and error covariances must sum back to the channel covariance."""
    worst = 0.0
    for k in range(scenario.num_ues):
        for l in range(scenario.num_aps):
            R = scenario.covariances[k, l]
            gap = np.abs(est.rhat[k, l] + est.rtilde[k, l] - R).max()
            worst = max(worst, gap / np.abs(R).max())
    return CheckResult(
        name="covariance_decomposition",
        passed=worst < rel_tol,
        detail=f"max relative residual {worst:.3e} (tol {rel_tol:.0e})",
    )


def check_combiner_norms(run: stripe.StripeRun, tol: float = 1e-12) -> CheckResult:
    """All combiners along the stripe must be unit norm."""
    worst = 0.0
    for V in run.combiners:
        worst = max(worst, np.abs(np.linalg.norm(V, axis=-1) - 1.0).max())
    return CheckResult(
        name="combiner_norms",
        passed=worst < tol,
        detail=f"max |norm - 1| {worst:.3e} (tol {tol:.0e})",
    )


def check_reconstruction(
    run: stripe.StripeRun, payload: stripe.PayloadRealization, rel_tol: float = 1e-10
) -> CheckResult:
    """Final soft estimates must decompose exactly into signal and noise parts."""
    final = run.final
    signal = payload.symbols @ final.g_true            # sum_i g[i, k] s_i
    resid = np.abs(final.soft - signal - final.n_eff)
    scale = np.abs(final.soft) + np.abs(signal) + np.abs(final.n_eff)
    worst = float((resid / np.maximum(scale, np.finfo(float).tiny)).max())
    return CheckResult(
        name="reconstruction_identity",
        passed=worst < rel_tol,
        detail=f"max scaled residual {worst:.3e} (tol {rel_tol:.0e})",
    )


def check_monotone_stage_sinr(
    run: stripe.StripeRun, powers: np.ndarray, sigma2: float,
    rel_tol: float = 1e-9,
) -> CheckResult:
    """The per-stage effective SINR must never decrease along the stripe."""
    if run.stages is None:
        raise ValueError("run must be produced with keep_stages=True")
    worst = 0.0
    prev = None
    for state in run.stages:
        cur = metrics.sinr_per_ue(state.ghat, state.psi, powers, sigma2)
        if prev is not None:
            drop = float(((prev - cur) / np.maximum(prev, np.finfo(float).tiny)).max())
            worst = max(worst, drop)
        prev = cur
    return CheckResult(
        name="monotone_stage_sinr",
        passed=worst < rel_tol,
        detail=f"max relative SINR drop {worst:.3e} (tol {rel_tol:.0e})",
    )


def selftest_config(seed: int = 0) -> SimulationConfig:
    """A deliberately tiny network with forced pilot sharing."""
    return replace(
        SimulationConfig(),
        num_aps=4, antennas_per_ap=2, num_ues=3,
        coherence_block=40, pilot_length=2,
        num_setups=1, num_channel_realizations=8,
        rng_seed=seed, num_workers=1,
    )


def run_selftest(seed: int = 0) -> list[CheckResult]:
    """Build a tiny instance and run every invariant check on it."""
    config = selftest_config(seed)
    scenario = build_scenario(config, rng_stream(seed, 0, 0))
    stats = estimation_statistics(scenario, config)
    powers = config.ue_powers
    sigma2 = config.noise_power_w

    results: list[CheckResult] = []
    rng = rng_stream(seed, 0, 1, 0)
    h = draw_channels(scenario, rng)
    obs = simulate_pilot_phase(scenario, h, config, rng)
    est = mmse_estimate(scenario, obs, config, stats)
    results.append(check_covariance_decomposition(scenario, est))

    payload = stripe.PayloadRealization(
        symbols=complex_normal(rng, (config.num_ues,), std=np.sqrt(powers)),
        noise=complex_normal(
            rng, (config.num_aps, config.antennas_per_ap), std=np.sqrt(sigma2)
        ),
    )
    run = stripe.run_stripe(
        est, powers, sigma2, channels=h, payload=payload, keep_stages=True
    )
    results.append(check_combiner_norms(run))
    results.append(check_reconstruction(run, payload))
    results.append(check_monotone_stage_sinr(run, powers, sigma2))
    return results

"""Sequential processing along the stripe: AP 1 -> AP L -> CPU.

Each AP forms a normalized LMMSE combiner from its local channel estimates
plus the side information received from the previous AP (effective-channel
estimates and their error variances), then forwards updated soft estimates
and side information. Unit-norm combiners keep the propagated noise variance
at sigma^2 through the whole chain, so no per-stage noise bookkeeping is
needed beyond the variances themselves.

Conventions: arrays indexed [i, k] pair interfering UE i with served UE k.
At APs after the first the augmented dimension is N+1, the extra coordinate
carrying the previous stage's soft estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelEstimateSet


@dataclass
class StageState:
    """What one AP forwards downstream (plus optional genie diagnostics).

    The forwarded payload is K soft estimates, K^2 effective-channel
    estimates, and K^2 error variances. True effective channels and the
    effective noise are tracked only when the caller supplies the payload
    realization; they never count toward the front-haul load.
    """

    ghat: np.ndarray              # (K, K) complex, ghat[i, k]
    psi: np.ndarray               # (K, K) float, error variance of ghat[i, k]
    soft: np.ndarray | None = None     # (K,) complex soft estimates
    g_true: np.ndarray | None = None   # (K, K) complex, genie effective channels
    n_eff: np.ndarray | None = None    # (K,) complex, genie effective noise

    @property
    def num_ues(self) -> int:
        return self.ghat.shape[0]

    def payload_item_counts(self) -> dict[str, int]:
        """Entries forwarded per stage, by field."""
        K = self.num_ues
        return {"soft_estimates": K, "effective_channel_estimates": K * K,
                "error_variances": K * K}


@dataclass
class AugmentedSideInfo:
    """Conditional moments of the augmented channels at one AP (stage >= 2)."""

    hhat: np.ndarray       # (K, N) local channel estimates
    rtilde: np.ndarray     # (K, N, N) local error covariances
    ghat_prev: np.ndarray  # (K, K) previous-stage effective-channel estimates
    psi_prev: np.ndarray   # (K, K) previous-stage error variances

    @property
    def num_antennas(self) -> int:
        return self.hhat.shape[1]

    def chat(self, i: int, k: int) -> np.ndarray:
        """Augmented estimate [hhat_i ; ghat_prev[i, k]], the conditional mean."""
        return np.concatenate([self.hhat[i], [self.ghat_prev[i, k]]])

    def error_covariance(self, i: int, k: int) -> np.ndarray:
        """Block-diagonal augmented error covariance; coupling blocks are zero."""
        N = self.num_antennas
        out = np.zeros((N + 1, N + 1), dtype=complex)
        out[:N, :N] = self.rtilde[i]
        out[N, N] = self.psi_prev[i, k]
        return out

    def second_moment(self, i: int, k: int) -> np.ndarray:
        """Conditional second moment: rank-one estimate part plus error blocks."""
        c = self.chat(i, k)
        return np.outer(c, c.conj()) + self.error_covariance(i, k)


def _normalize_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def combiner_first_ap(
    hhat: np.ndarray, rtilde: np.ndarray, powers: np.ndarray, sigma2: float
) -> np.ndarray:
    """Unit-norm LMMSE combiners at the first AP, shape (K, N).

    The regularized covariance sum is shared by all UEs, so a single
    Cholesky factorization serves the K right-hand sides.
    """
    B = np.einsum("i,im,in->mn", powers, hhat, hhat.conj())
    B += np.einsum("i,imn->mn", powers, rtilde)
    B += sigma2 * np.eye(hhat.shape[1])
    cho = cho_factor(B, lower=True)
    return _normalize_rows(cho_solve(cho, hhat.T).T)


def build_augmented_moments(
    hhat_l: np.ndarray, rtilde_l: np.ndarray, prev: StageState
) -> AugmentedSideInfo:
    """Bundle local estimates with the previous stage's side information."""
    return AugmentedSideInfo(
        hhat=hhat_l, rtilde=rtilde_l, ghat_prev=prev.ghat, psi_prev=prev.psi
    )


def combiner_stage(
    aug: AugmentedSideInfo, powers: np.ndarray, sigma2: float
) -> np.ndarray:
    """Unit-norm LMMSE combiners on the augmented signal, shape (K, N+1).

    The top-left N x N block of the conditioning matrix is common to all
    served UEs; only the border (cross terms with the augmented coordinate)
    is UE-specific, giving K independent small Hermitian solves.
    """
    K, N = aug.hhat.shape
    M = np.einsum("i,im,in->mn", powers, aug.hhat, aug.hhat.conj())
    M += np.einsum("i,imn->mn", powers, aug.rtilde)
    border = np.einsum("i,im,ik->km", powers, aug.hhat, aug.ghat_prev.conj())  # (K, N)
    corner = powers @ (np.abs(aug.ghat_prev) ** 2 + aug.psi_prev)              # (K,)

    B = np.zeros((K, N + 1, N + 1), dtype=complex)
    B[:, :N, :N] = M + sigma2 * np.eye(N)
    B[:, :N, N] = border
    B[:, N, :N] = border.conj()
    B[:, N, N] = corner + sigma2

    rhs = np.concatenate(
        [aug.hhat, np.diagonal(aug.ghat_prev)[:, None]], axis=1
    )  # (K, N+1): each UE's own augmented estimate
    return _normalize_rows(np.linalg.solve(B, rhs[..., None])[..., 0])


def stage_update(
    combiners: np.ndarray,
    hhat_l: np.ndarray,
    rtilde_l: np.ndarray,
    prev: StageState | None,
    y_l: np.ndarray | None = None,
    h_l: np.ndarray | None = None,
    n_l: np.ndarray | None = None,
) -> StageState:
    """Apply one stage's combiners: update soft estimates, ghat, and psi.

    prev=None marks the first AP (combiners act on the raw N-dim signal);
    otherwise combiners act on the augmented (N+1)-dim signal. y_l / h_l /
    n_l are optional per-realization inputs for soft estimates and genie
    tracking.
    """
    if prev is None:
        va, vb = combiners, None
    else:
        va, vb = combiners[:, :-1], combiners[:, -1]

    ghat = np.einsum("kn,in->ik", va.conj(), hhat_l)
    psi = np.einsum("km,imn,kn->ik", va.conj(), rtilde_l, va).real
    if vb is not None:
        ghat += vb.conj()[None, :] * prev.ghat
        psi += (np.abs(vb) ** 2)[None, :] * prev.psi
    psi = np.maximum(psi, 0.0)  # quadratic form of a PSD block; clip roundoff

    soft = g_true = n_eff = None
    if y_l is not None:
        soft = np.einsum("kn,n->k", va.conj(), y_l)
        if vb is not None:
            soft += vb.conj() * prev.soft
    if h_l is not None:
        g_true = np.einsum("kn,in->ik", va.conj(), h_l)
        if vb is not None:
            g_true += vb.conj()[None, :] * prev.g_true
    if n_l is not None:
        n_eff = np.einsum("kn,n->k", va.conj(), n_l)
        if vb is not None:
            n_eff += vb.conj() * prev.n_eff

    return StageState(ghat=ghat, psi=psi, soft=soft, g_true=g_true, n_eff=n_eff)


@dataclass
class PayloadRealization:
    """One block's transmitted symbols and per-AP receiver noise."""

    symbols: np.ndarray   # (K,) complex, variance p_k each
    noise: np.ndarray     # (L, N) complex, variance sigma2 per antenna


@dataclass
class StripeRun:
    """Output of a full pass along the stripe."""

    final: StageState
    combiners: list[np.ndarray]            # per stage, (K, N) then (K, N+1)
    stages: list[StageState] | None = None


def run_stripe(
    est: ChannelEstimateSet,
    powers: np.ndarray,
    sigma2: float,
    channels: np.ndarray | None = None,
    payload: PayloadRealization | None = None,
    keep_stages: bool = False,
) -> StripeRun:
    """Iterate the combining stages AP 1..L and return what reaches the CPU.

    With a payload realization the per-AP received signals are formed from
    the true channels and the soft-estimate chain is tracked alongside the
    forwarded side information.
    """
    if payload is not None and channels is None:
        raise ValueError("payload tracking requires the true channels")
    L = est.hhat.shape[1]
    stages: list[StageState] | None = [] if keep_stages else None
    combiners: list[np.ndarray] = []

    state: StageState | None = None
    for l in range(L):
        hhat_l = est.hhat[:, l, :]
        rtilde_l = est.rtilde[:, l, :, :]
        if state is None:
            V = combiner_first_ap(hhat_l, rtilde_l, powers, sigma2)
        else:
            aug = build_augmented_moments(hhat_l, rtilde_l, state)
            V = combiner_stage(aug, powers, sigma2)

        y_l = h_l = n_l = None
        if channels is not None:
            h_l = channels[:, l, :]
        if payload is not None:
            n_l = payload.noise[l]
            y_l = payload.symbols @ h_l + n_l
        state = stage_update(V, hhat_l, rtilde_l,
                             None if l == 0 else state, y_l, h_l, n_l)
        combiners.append(V)
        if stages is not None:
            stages.append(state)

    return StripeRun(final=state, combiners=combiners, stages=stages)

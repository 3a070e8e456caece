"""Reference schemes bracketing the stripe: centralized LMMSE and fused MR.

The centralized scheme stacks all APs' estimates into one LN-dim receiver
with block-diagonal error covariance and evaluates the same conditional
SINR template as the stripe. The MR scheme lets every AP apply its own
estimate as a matched filter, averages the L local soft estimates at the
CPU with equal weights, and is scored with the use-and-then-forget bound
whose expectations are estimated from the shared channel realizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelEstimateSet


def centralized_lmmse_l4(
    est: ChannelEstimateSet, powers: np.ndarray, sigma2: float
) -> np.ndarray:
    """Per-UE conditional SINR of the fully centralized receiver, shape (K,).

    Combiners are LMMSE on the stacked estimates; the SINR charges the
    estimation errors through the per-UE block-diagonal error covariance.
    """
    K, L, N = est.hhat.shape
    Hs = est.hhat.reshape(K, L * N).T                      # (LN, K) stacked estimates

    B = (Hs * powers) @ Hs.conj().T
    err_sum = np.einsum("i,ilmn->lmn", powers, est.rtilde)  # per-AP error blocks
    for l in range(L):
        B[l * N:(l + 1) * N, l * N:(l + 1) * N] += err_sum[l]
    B += sigma2 * np.eye(L * N)

    V = cho_solve(cho_factor(B, lower=True), Hs)            # (LN, K)
    V /= np.linalg.norm(V, axis=0, keepdims=True)

    G = (V.conj().T @ Hs).T                                 # G[i, k] = v_k^H hhat_i
    Vr = V.T.reshape(K, L, N)
    err = np.einsum("klm,ilmn,kln->ik", Vr.conj(), est.rtilde, Vr).real

    num = powers * np.abs(np.diagonal(G)) ** 2
    den = (
        np.einsum("i,ik->k", powers, np.abs(G) ** 2) - num
        + np.einsum("i,ik->k", powers, err) + sigma2
    )
    return num / den


@dataclass
class MrFusionAccumulator:
    """Running UatF statistics for equal-weight MR fusion across blocks."""

    sum_mean: np.ndarray | None = None     # (K,) sum of own effective channels
    sum_sq: np.ndarray | None = None       # (K, K) sum of |effective channel|^2
    sum_noise: np.ndarray | None = None    # (K,) sum of combiner energies
    count: int = 0

    def update(self, hhat: np.ndarray, channels: np.ndarray) -> None:
        """Fold in one realization: hhat and channels are (K, L, N)."""
        L = hhat.shape[1]
        z = np.einsum("klm,ilm->ik", hhat.conj(), channels) / L  # z[i, k]
        energy = np.einsum("klm,klm->k", hhat.conj(), hhat).real / L ** 2
        if self.sum_mean is None:
            self.sum_mean = np.zeros(hhat.shape[0], dtype=complex)
            self.sum_sq = np.zeros((hhat.shape[0], hhat.shape[0]))
            self.sum_noise = np.zeros(hhat.shape[0])
        self.sum_mean += np.diagonal(z)
        self.sum_sq += np.abs(z) ** 2
        self.sum_noise += energy
        self.count += 1

    def sinr(self, powers: np.ndarray, sigma2: float) -> np.ndarray:
        """Close the UatF bound from the accumulated moments, shape (K,)."""
        if self.count == 0:
            raise ValueError("no realizations accumulated")
        mean = self.sum_mean / self.count
        sq = self.sum_sq / self.count
        noise = self.sum_noise / self.count
        num = powers * np.abs(mean) ** 2
        den = np.einsum("i,ik->k", powers, sq) - num + sigma2 * noise
        return num / den


def mr_l2_sinr(
    hhat_blocks: np.ndarray, channel_blocks: np.ndarray,
    powers: np.ndarray, sigma2: float,
) -> np.ndarray:
    """UatF SINR of equal-weight MR fusion over a batch of realizations.

    hhat_blocks / channel_blocks have shape (n_blocks, K, L, N).
    """
    acc = MrFusionAccumulator()
    for hhat, h in zip(hhat_blocks, channel_blocks):
        acc.update(hhat, h)
    return acc.sinr(powers, sigma2)

"""Pilot transmission and least-squares channel estimation.

Per block and subcarrier the UE sends a length-tau pilot; the BS observes
Y = sqrt(rho) * h * phi^T + Z and recovers the LS estimate
g = Y conj(phi) / (sqrt(rho) * ||phi||^2) = h + e with per-element error
variance 1/(rho*tau) for unit-modulus pilots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    ChannelTensor,
    DOMAIN_SUBCARRIER,
    PROVENANCE_ESTIMATED,
    PROVENANCE_TRUE,
)
from .errors import ConfigError, ContractError
from .rng import stream

_EST_CHUNK = 64  # blocks per chunk; bounds the (chunk, L, M, tau) noise buffer


def db_to_linear(snr_db: float) -> float:
    return float(10.0 ** (snr_db / 10.0))


def dft_pilot(tau: int, k: int = 1) -> np.ndarray:
    """Column k of the tau-point DFT matrix: entry t = exp(-j*2*pi*t*k/tau).

    Unit modulus entries; distinct columns are mutually orthogonal.
    """
    if tau < 1:
        raise ConfigError(f"pilot length must be >= 1, got {tau}")
    if not 0 <= k < tau:
        raise ConfigError(f"DFT column index must satisfy 0 <= k < tau, got k={k}, tau={tau}")
    t = np.arange(tau)
    return np.exp(-2j * np.pi * t * k / tau)


@dataclass(frozen=True)
class PilotScheme:
    """Pilot vector and linear SNR used for every (block, subcarrier) cell."""

    pilot: np.ndarray  # (tau,) complex, unit modulus entries
    snr: float         # rho, linear

    @property
    def tau(self) -> int:
        return self.pilot.shape[0]

    def validate(self) -> "PilotScheme":
        if self.pilot.ndim != 1 or self.tau < 1:
            raise ConfigError("pilot must be a non-empty vector")
        if self.snr <= 0:
            raise ConfigError(f"snr must be positive (linear), got {self.snr}")
        if not np.allclose(np.abs(self.pilot), 1.0, rtol=0, atol=1e-12):
            raise ConfigError("pilot entries must be unit modulus")
        return self

    @classmethod
    def dft(cls, tau: int, k: int = 1, snr_db: float = 10.0) -> "PilotScheme":
        return cls(dft_pilot(tau, k), db_to_linear(snr_db)).validate()


def transmit_pilots(h: np.ndarray, scheme: PilotScheme,
                    rng: np.random.Generator, noise: bool = True) -> np.ndarray:
    """Received pilot matrix Y = sqrt(rho) h phi^T + Z, shape (M, tau).

    Z entries are i.i.d. complex Gaussian with zero mean and unit variance;
    `noise=False` suppresses Z (test hook).
    """
    scheme.validate()
    h = np.asarray(h)
    if h.ndim != 1:
        raise ContractError(f"h must be a vector, got shape {h.shape}")
    y = np.sqrt(scheme.snr) * h[:, None] * scheme.pilot[None, :]
    if noise:
        m, tau = y.shape
        z = (rng.standard_normal((m, tau)) + 1j * rng.standard_normal((m, tau))) / np.sqrt(2)
        y = y + z
    return y


def ls_estimate(y: np.ndarray, scheme: PilotScheme) -> np.ndarray:
    """LS channel estimate from the received pilot matrix.

    Solves the vectorized model y = Phi h + z with Phi = sqrt(rho) (phi ⊗ I_M);
    (Phi^H Phi)^(-1) Phi^H y reduces to Y conj(phi) / (sqrt(rho) ||phi||^2).
    """
    scheme.validate()
    y = np.asarray(y)
    if y.ndim != 2 or y.shape[1] != scheme.tau:
        raise ContractError(f"Y must be (M, tau={scheme.tau}), got shape {y.shape}")
    energy = float(np.sum(np.abs(scheme.pilot) ** 2))
    if energy == 0.0:
        raise ContractError("degenerate pilot with zero energy")
    return y @ np.conj(scheme.pilot) / (np.sqrt(scheme.snr) * energy)


def estimate_trace(tensor: ChannelTensor, scheme: PilotScheme,
                   rng: np.random.Generator | None = None,
                   noise: bool = True) -> ChannelTensor:
    """LS-estimate every (block, subcarrier) cell of a true subcarrier tensor.

    Equivalent to transmit_pilots + ls_estimate per cell, vectorized in chunks
    of blocks; the noise stream is separate from the channel stream, drawn in
    fixed block order, so results are deterministic for a given rng.
    """
    tensor.validate()
    scheme.validate()
    if tensor.domain != DOMAIN_SUBCARRIER:
        raise ContractError(f"estimate_trace needs a subcarrier-domain tensor, got {tensor.domain}")
    if tensor.provenance != PROVENANCE_TRUE:
        raise ContractError(f"estimate_trace needs provenance 'true', got {tensor.provenance}")
    if rng is None:
        rng = stream(0, "pilot-noise")

    h = tensor.values
    n_blocks, L, M = h.shape
    tau = scheme.tau
    conj_pilot = np.conj(scheme.pilot)
    energy = float(np.sum(np.abs(scheme.pilot) ** 2))
    root_rho = np.sqrt(scheme.snr)

    g = np.empty_like(h)
    for start in range(0, n_blocks, _EST_CHUNK):
        stop = min(start + _EST_CHUNK, n_blocks)
        y = root_rho * h[start:stop, :, :, None] * scheme.pilot
        if noise:
            shape = (stop - start, L, M, tau)
            y = y + (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        g[start:stop] = y @ conj_pilot / (root_rho * energy)

    return ChannelTensor(g, DOMAIN_SUBCARRIER, PROVENANCE_ESTIMATED).validate()

"""Subcarrier-domain <-> antenna-domain re-grouping.

The transformation is a pure re-indexing: the per-block L x M matrix is read
by rows (one length-L vector per antenna) instead of by columns (one length-M
vector per subcarrier). No data moves; only the domain flag flips.
"""

from __future__ import annotations

from dataclasses import replace

from .channel import ChannelTensor, DOMAIN_ANTENNA, DOMAIN_SUBCARRIER
from .errors import ContractError


def to_antenna_domain(tensor: ChannelTensor) -> ChannelTensor:
    """Re-read a subcarrier-domain tensor as antenna-domain series (zero copy)."""
    if tensor.domain != DOMAIN_SUBCARRIER:
        raise ContractError(f"tensor is already in domain {tensor.domain!r}")
    return replace(tensor, domain=DOMAIN_ANTENNA)


def to_subcarrier_domain(tensor: ChannelTensor) -> ChannelTensor:
    """Inverse of to_antenna_domain; provenance is preserved."""
    if tensor.domain != DOMAIN_ANTENNA:
        raise ContractError(f"tensor is already in domain {tensor.domain!r}")
    return replace(tensor, domain=DOMAIN_SUBCARRIER)

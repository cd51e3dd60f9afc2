import numpy as np
import pytest

from chanpred import ChannelConfig, ChannelTensor, draw_paths, synthesize
from chanpred.estimation import PilotScheme, estimate_trace
from chanpred.rng import stream


@pytest.fixture(scope="session")
def default_trace():
    """Default-config trace long enough for the shift-16 correlation study."""
    cfg = ChannelConfig()
    return synthesize(cfg, draw_paths(cfg), 2016)


@pytest.fixture(scope="session")
def micro_tensor_pair():
    """Small (true, estimated) pair for dataset/pipeline plumbing tests."""
    cfg = ChannelConfig(m_h=2, m_v=2, n_subcarriers=3, n_paths=7, seed=5,
                        speed=20.0 / 3.6, doppler_grid_blocks=16)
    truth = synthesize(cfg, draw_paths(cfg), 40)
    scheme = PilotScheme.dft(4, 1, snr_db=10.0)
    est = estimate_trace(truth, scheme, stream(5, "pilot-noise"))
    return truth, est


def random_tensor(seed, n=6, l=3, m=4, domain="subcarrier", provenance="true"):
    rng = stream(seed, "tensor")
    values = rng.standard_normal((n, l, m)) + 1j * rng.standard_normal((n, l, m))
    return ChannelTensor(values, domain, provenance)

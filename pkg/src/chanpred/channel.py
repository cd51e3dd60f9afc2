"""Synthetic wideband MIMO channel generation and trace file I/O.

The generator is a geometric sum-of-paths model shaped to reproduce the two
correlation regimes that motivate domain transformation: subcarrier channels
that are almost perfectly cross-correlated (delay spread well inside the
coherence bandwidth) while antenna-domain channels are nearly uncorrelated
(each path carries its own steering phase and its own Doppler tone).

Per-path Doppler shifts are drawn sum-of-sinusoids style from the DFT grid of
the default correlation-averaging window (``doppler_grid_blocks`` blocks of
``block_duration`` seconds). Distinct grid tones are exactly orthogonal over
that window, so time averaging fully separates paths; the tone ladder is
assigned strongest-path-first from the center outwards, which keeps the
temporal auto-correlation high out to large block shifts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ContractError, TraceFormatError
from .rng import stream

SPEED_OF_LIGHT = 299_792_458.0

DOMAIN_SUBCARRIER = "subcarrier"
DOMAIN_ANTENNA = "antenna"
DOMAINS = (DOMAIN_SUBCARRIER, DOMAIN_ANTENNA)

PROVENANCE_TRUE = "true"
PROVENANCE_ESTIMATED = "estimated"
PROVENANCE_PREDICTED = "predicted"
PROVENANCES = (PROVENANCE_TRUE, PROVENANCE_ESTIMATED, PROVENANCE_PREDICTED)

_SYNTH_CHUNK = 256  # blocks per synthesis chunk, bounds peak memory


@dataclass(frozen=True)
class ChannelConfig:
    """Geometry and mobility parameters of the synthetic link.

    Defaults follow the experiment setup: 8x8 UPA, 50 subcarriers at 15 kHz,
    2.53 GHz carrier, 1 km/h UE speed, 20 ms coherence blocks. Path count and
    delay spread are tunable stand-ins for the external channel generator.
    """

    m_h: int = 8                     # horizontal UPA elements
    m_v: int = 8                     # vertical UPA elements
    n_subcarriers: int = 50          # L
    subcarrier_spacing: float = 15e3  # Hz
    carrier_freq: float = 2.53e9     # Hz
    speed: float = 1000.0 / 3600.0   # UE speed, m/s (1 km/h)
    block_duration: float = 20e-3    # coherence block, s
    n_paths: int = 31
    delay_spread: float = 100e-9     # RMS delay spread, s
    seed: int = 1
    doppler_grid_blocks: int = 2000  # reference window defining the tone grid
    doppler_offset: float = 0.0      # mean Doppler, Hz (snapped to the grid)

    @property
    def n_antennas(self) -> int:
        return self.m_h * self.m_v

    @property
    def max_doppler(self) -> float:
        return self.speed * self.carrier_freq / SPEED_OF_LIGHT

    def validate(self) -> "ChannelConfig":
        if self.m_h < 1 or self.m_v < 1:
            raise ConfigError(f"antenna counts must be >= 1, got {self.m_h}x{self.m_v}")
        if self.n_subcarriers < 1:
            raise ConfigError(f"n_subcarriers must be >= 1, got {self.n_subcarriers}")
        if self.n_paths < 1:
            raise ConfigError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.subcarrier_spacing <= 0:
            raise ConfigError("subcarrier_spacing must be positive")
        if self.block_duration <= 0:
            raise ConfigError("block_duration must be positive")
        if self.carrier_freq <= 0:
            raise ConfigError("carrier_freq must be positive")
        if self.delay_spread < 0:
            raise ConfigError("delay_spread must be non-negative")
        if self.speed < 0:
            raise ConfigError("speed must be non-negative")
        if self.doppler_grid_blocks < 1:
            raise ConfigError("doppler_grid_blocks must be >= 1")
        if abs(self.doppler_offset) > self.max_doppler:
            raise ConfigError(
                f"doppler_offset {self.doppler_offset} Hz exceeds the maximum "
                f"Doppler shift {self.max_doppler:.4g} Hz at this speed")
        return self

    def with_seed(self, seed: int) -> "ChannelConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class PathSet:
    """Multipath parameters: complex gains, delays, Doppler shifts, BS angles."""

    gains: np.ndarray      # (P,) complex
    delays: np.ndarray     # (P,) s
    dopplers: np.ndarray   # (P,) Hz
    azimuths: np.ndarray   # (P,) rad
    elevations: np.ndarray  # (P,) rad

    @property
    def n_paths(self) -> int:
        return self.gains.shape[0]

    def validate(self) -> "PathSet":
        n = self.n_paths
        for name in ("gains", "delays", "dopplers", "azimuths", "elevations"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ContractError(f"PathSet.{name} has shape {arr.shape}, expected ({n},)")
        if np.any(self.delays < 0):
            raise ContractError("path delays must be non-negative")
        total = float(np.sum(np.abs(self.gains) ** 2))
        if not np.isclose(total, 1.0, rtol=1e-9):
            raise ContractError(f"path powers must sum to 1, got {total}")
        return self


@dataclass(frozen=True)
class ChannelTensor:
    """Complex channel values indexed (block n, subcarrier l, antenna m).

    The storage layout is always (N, L, M); ``domain`` says how the per-block
    matrix is read: ``subcarrier`` means the unit of interest is the length-M
    vector values[n, l, :], ``antenna`` means the length-L vector
    values[n, :, m]. ``provenance`` tracks whether values are true channels,
    LS estimates, or predictor outputs.
    """

    values: np.ndarray
    domain: str = DOMAIN_SUBCARRIER
    provenance: str = PROVENANCE_TRUE

    @property
    def n_blocks(self) -> int:
        return self.values.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.values.shape[1]

    @property
    def n_antennas(self) -> int:
        return self.values.shape[2]

    def validate(self) -> "ChannelTensor":
        if self.values.ndim != 3:
            raise ContractError(f"channel values must be 3-D (N, L, M), got shape {self.values.shape}")
        if self.domain not in DOMAINS:
            raise ContractError(f"unknown domain {self.domain!r}")
        if self.provenance not in PROVENANCES:
            raise ContractError(f"unknown provenance {self.provenance!r}")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("channel values contain non-finite entries")
        return self

    def series(self, index: int) -> np.ndarray:
        """The domain's series `index` as an (N, D) array of complex vectors."""
        if self.domain == DOMAIN_SUBCARRIER:
            return self.values[:, index, :]
        return self.values[:, :, index]

    @property
    def n_series(self) -> int:
        return self.n_subcarriers if self.domain == DOMAIN_SUBCARRIER else self.n_antennas

    @property
    def series_dim(self) -> int:
        return self.n_antennas if self.domain == DOMAIN_SUBCARRIER else self.n_subcarriers


def steering_vector(theta: float, phi: float, m_h: int, m_v: int) -> np.ndarray:
    """Half-wavelength UPA response for azimuth theta and elevation phi.

    Element (p, q) sits at flat index q*m_h + p and responds with
    exp(j*pi*(p*sin(theta)*cos(phi) + q*sin(phi))); all entries unit modulus.
    """
    p = np.arange(m_h)
    q = np.arange(m_v)
    phase = p[None, :] * (np.sin(theta) * np.cos(phi)) + q[:, None] * np.sin(phi)
    return np.exp(1j * np.pi * phase).reshape(m_h * m_v)


def _tone_ladder(n_paths: int) -> np.ndarray:
    """Tone indices 0, +1, -1, +2, -2, ... (length n_paths)."""
    ladder = np.zeros(n_paths, dtype=np.int64)
    for i in range(1, n_paths):
        k = (i + 1) // 2
        ladder[i] = k if i % 2 == 1 else -k
    return ladder


def draw_paths(config: ChannelConfig, rng: np.random.Generator | None = None) -> PathSet:
    """Draw a multipath realization for `config`.

    Delays are exponential with mean ``delay_spread``; per-path powers follow
    exp(-tau/delay_spread), normalized to sum to exactly 1, with uniformly
    random gain phases. BS azimuth/elevation are uniform. Doppler shifts are
    distinct tones k/(doppler_grid_blocks*block_duration) spread around the
    (grid-snapped) mean ``doppler_offset`` and assigned to paths in descending
    power order from the cluster center outwards, capped so that
    |nu| <= speed*carrier_freq/c.
    """
    config.validate()
    if rng is None:
        rng = stream(config.seed, "paths")
    P = config.n_paths

    if config.delay_spread > 0:
        delays = rng.exponential(config.delay_spread, P)
        weights = np.exp(-delays / config.delay_spread)
    else:
        delays = np.zeros(P)
        weights = np.ones(P)
    weights = weights / weights.sum()
    gains = np.sqrt(weights) * np.exp(2j * np.pi * rng.random(P))

    azimuths = rng.uniform(-np.pi, np.pi, P)
    elevations = rng.uniform(-np.pi / 2, np.pi / 2, P)

    f0 = 1.0 / (config.doppler_grid_blocks * config.block_duration)
    k_cap = int(config.max_doppler / f0)
    k_center = int(np.rint(config.doppler_offset / f0))
    tones = np.clip(k_center + _tone_ladder(P), -k_cap, k_cap)
    dopplers = np.empty(P)
    dopplers[np.argsort(-weights)] = tones * f0

    return PathSet(gains, delays, dopplers, azimuths, elevations).validate()


def synthesize(config: ChannelConfig, paths: PathSet, n_blocks: int) -> ChannelTensor:
    """Superimpose the paths into a (n_blocks, L, M) subcarrier-domain tensor.

    values[n, l, m] = sum_p gain_p * exp(j*2*pi*nu_p*n*T_B)
                              * exp(-j*2*pi*(l-1)*delta_f*tau_p)
                              * steering(theta_p, phi_p)[m]
    with 1-based block index n and subcarrier index l.
    """
    config.validate()
    paths.validate()
    if n_blocks < 1:
        raise ContractError(f"n_blocks must be >= 1, got {n_blocks}")

    L = config.n_subcarriers
    M = config.n_antennas
    P = paths.n_paths

    freq = np.exp(-2j * np.pi * np.arange(L)[:, None]
                  * config.subcarrier_spacing * paths.delays[None, :])     # (L, P)
    steer = np.empty((P, M), dtype=np.complex128)
    for p in range(P):
        steer[p] = steering_vector(paths.azimuths[p], paths.elevations[p],
                                   config.m_h, config.m_v)

    out = np.empty((n_blocks, L, M), dtype=np.complex128)
    for start in range(0, n_blocks, _SYNTH_CHUNK):
        stop = min(start + _SYNTH_CHUNK, n_blocks)
        n = np.arange(start + 1, stop + 1)                                 # 1-based blocks
        rot = paths.gains[None, :] * np.exp(
            2j * np.pi * paths.dopplers[None, :] * n[:, None] * config.block_duration)
        mix = rot[:, None, :] * freq[None, :, :]                           # (chunk, L, P)
        out[start:stop] = (mix.reshape(-1, P) @ steer).reshape(stop - start, L, M)

    return ChannelTensor(out, DOMAIN_SUBCARRIER, PROVENANCE_TRUE).validate()


# ---------------------------------------------------------------------------
# Trace file I/O (text; format documented in docs/trace_format.md)
# ---------------------------------------------------------------------------

_TRACE_MAGIC = "chanpred-trace v1"


def export_trace(tensor: ChannelTensor, path) -> None:
    """Write `tensor` to `path` in the plain-text trace format (lossless)."""
    tensor.validate()
    N, L, M = tensor.values.shape
    n_idx, l_idx, m_idx = np.meshgrid(np.arange(1, N + 1), np.arange(1, L + 1),
                                      np.arange(1, M + 1), indexing="ij")
    flat = tensor.values.reshape(-1)
    cols = np.column_stack([n_idx.reshape(-1), l_idx.reshape(-1), m_idx.reshape(-1)])
    with open(path, "w") as f:
        f.write(_TRACE_MAGIC + "\n")
        f.write(f"N={N} L={L} M={M} domain={tensor.domain} provenance={tensor.provenance}\n")
        np.savetxt(f, np.column_stack([cols, flat.real, flat.imag]),
                   fmt="%d %d %d %.17g %.17g")


def _parse_header(line: str) -> dict:
    fields = {}
    for token in line.split():
        if "=" not in token:
            raise TraceFormatError(f"malformed header token {token!r} on line 2")
        key, value = token.split("=", 1)
        fields[key] = value
    for key in ("N", "L", "M", "domain", "provenance"):
        if key not in fields:
            raise TraceFormatError(f"trace header missing field {key!r}")
    try:
        dims = {k: int(fields[k]) for k in ("N", "L", "M")}
    except ValueError as exc:
        raise TraceFormatError(f"non-integer dimension in trace header: {exc}") from exc
    if any(v < 1 for v in dims.values()):
        raise TraceFormatError(f"trace dimensions must be >= 1, got {dims}")
    if fields["domain"] not in DOMAINS:
        raise TraceFormatError(f"unknown domain {fields['domain']!r} in trace header")
    if fields["provenance"] not in PROVENANCES:
        raise TraceFormatError(f"unknown provenance {fields['provenance']!r} in trace header")
    return {**dims, "domain": fields["domain"], "provenance": fields["provenance"]}


def import_trace(path) -> ChannelTensor:
    """Read a trace file written by export_trace (or an external generator).

    Records must appear in canonical (n, l, m) order with 1-based indices;
    errors name the offending line.
    """
    with open(path) as f:
        magic = f.readline().rstrip("\n")
        if magic != _TRACE_MAGIC:
            raise TraceFormatError(f"line 1: expected {_TRACE_MAGIC!r}, got {magic!r}")
        header = _parse_header(f.readline().rstrip("\n"))
        try:
            records = np.loadtxt(f, ndmin=2)
        except ValueError as exc:
            raise TraceFormatError(f"unparseable trace record: {exc}") from exc

    N, L, M = header["N"], header["L"], header["M"]
    expected = N * L * M
    if records.shape[0] != expected or records.shape[1] != 5:
        raise TraceFormatError(
            f"trace dimension mismatch: header declares {N}x{L}x{M} = {expected} "
            f"records of 5 fields, found {records.shape[0]} records of "
            f"{records.shape[1] if records.size else 0} fields")

    n_idx, l_idx, m_idx = np.meshgrid(np.arange(1, N + 1), np.arange(1, L + 1),
                                      np.arange(1, M + 1), indexing="ij")
    want = np.column_stack([n_idx.reshape(-1), l_idx.reshape(-1), m_idx.reshape(-1)])
    got = records[:, :3].astype(np.int64)
    bad = np.nonzero((got != want).any(axis=1))[0]
    if bad.size:
        i = int(bad[0])
        raise TraceFormatError(
            f"trace dimension mismatch at line {i + 3}: expected record "
            f"(n,l,m)={tuple(want[i])}, found {tuple(got[i])}")

    values = records[:, 3] + 1j * records[:, 4]
    nonfinite = np.nonzero(~np.isfinite(values))[0]
    if nonfinite.size:
        i = int(nonfinite[0])
        raise TraceFormatError(
            f"non-finite channel value at line {i + 3} (record (n,l,m)={tuple(want[i])})")

    tensor = ChannelTensor(values.reshape(N, L, M), header["domain"], header["provenance"])
    return tensor.validate()

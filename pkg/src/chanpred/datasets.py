"""Sliding-window training/test datasets for the channel predictors.

Blocks are 1-based in the window arithmetic below, matching the estimator
indexing: a training row with window end n holds the estimated channels of
blocks n-n0+1 .. n as features and block n+1 as label. Window ends run
n = n0 .. n_tr+n0-1 for training and n = n_gap+n0 .. n_gap+n_te+n0-1 for test;
n_gap > n_tr keeps the two ranges disjoint. Complex vectors are split into
(all real parts, then all imaginary parts) per window, oldest window first.

Test rows additionally carry the true channel of block n+1 (label_truth) so
prediction quality can be scored against the ground truth, while training
labels remain estimated channels (the true channel is never measurable).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelTensor, DOMAIN_SUBCARRIER, PROVENANCE_ESTIMATED, PROVENANCE_TRUE
from .domains import to_antenna_domain
from .errors import ConfigError, ContractError

PHASE_TRAIN = "train"
PHASE_TEST = "test"


def complex_to_real(v: np.ndarray) -> np.ndarray:
    """(..., D) complex -> (..., 2D) real: real parts then imaginary parts."""
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag], axis=-1)


def real_to_complex(x: np.ndarray) -> np.ndarray:
    """Inverse of complex_to_real; the last axis must have even length."""
    x = np.asarray(x)
    if x.shape[-1] % 2 != 0:
        raise ContractError(f"last axis must have even length, got {x.shape[-1]}")
    d = x.shape[-1] // 2
    return x[..., :d] + 1j * x[..., d:]


@dataclass(frozen=True)
class DatasetSpec:
    """Window length and chronological split sizes (per series)."""

    n0: int = 3        # input order: past blocks per feature row
    n_tr: int = 1000   # training rows per series
    n_te: int = 200    # test rows per series
    n_gap: int = 1500  # offset separating training from test windows

    def validate(self) -> "DatasetSpec":
        if self.n0 < 1:
            raise ConfigError(f"n0 must be >= 1, got {self.n0}")
        if self.n_tr < 1:
            raise ConfigError(f"n_tr must be >= 1, got {self.n_tr}")
        if self.n_te < 1:
            raise ConfigError(f"n_te must be >= 1, got {self.n_te}")
        if self.n_gap <= self.n_tr:
            raise ConfigError(
                f"n_gap must exceed n_tr to separate training from test "
                f"(n_tr={self.n_tr}, n_gap={self.n_gap})")
        return self

    def min_blocks(self, phase: str) -> int:
        if phase == PHASE_TRAIN:
            return self.n_tr + self.n0
        return self.n_gap + self.n_te + self.n0 + 1


@dataclass(frozen=True)
class WindowedDataset:
    """Real-valued feature/label matrices cut from one or more series.

    features: (rows, 2*n0*dim), labels: (rows, 2*dim); `series` tags the
    source series index of each row and `block_end` its window-end block
    (1-based). `label_truth` holds the true complex channel at block n+1 for
    test rows, None for training rows. `scale` records the normalization
    already divided out of features and labels.
    """

    features: np.ndarray
    labels: np.ndarray
    n0: int
    dim: int
    series: np.ndarray
    block_end: np.ndarray
    label_truth: np.ndarray | None = None
    scale: float = 1.0

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    def validate(self) -> "WindowedDataset":
        rows = self.n_rows
        if self.features.shape != (rows, 2 * self.n0 * self.dim):
            raise ContractError(f"features shape {self.features.shape} inconsistent "
                                f"with n0={self.n0}, dim={self.dim}")
        if self.labels.shape != (rows, 2 * self.dim):
            raise ContractError(f"labels shape {self.labels.shape} inconsistent with dim={self.dim}")
        if self.series.shape != (rows,) or self.block_end.shape != (rows,):
            raise ContractError("series/block_end tags must have one entry per row")
        if self.label_truth is not None and self.label_truth.shape != (rows, self.dim):
            raise ContractError(f"label_truth shape {self.label_truth.shape} "
                                f"inconsistent with dim={self.dim}")
        if not self.scale > 0:
            raise ContractError(f"scale must be positive, got {self.scale}")
        return self

    def last_window(self) -> np.ndarray:
        """The newest window of each row as complex vectors, de-normalized."""
        return real_to_complex(self.features[:, -2 * self.dim:] * self.scale)

    def labels_complex(self) -> np.ndarray:
        return real_to_complex(self.labels * self.scale)


def _window_rows(values: np.ndarray, start: int, rows: int, n0: int):
    idx = start + np.arange(rows)[:, None] + np.arange(n0)[None, :]
    windows = values[idx]                                    # (rows, n0, D)
    feats = complex_to_real(windows).reshape(rows, -1)       # window-major layout
    labels = complex_to_real(values[start + n0 + np.arange(rows)])
    return feats, labels


def build_series_dataset(est: ChannelTensor, series: tuple[str, int],
                         spec: DatasetSpec, phase: str,
                         truth: ChannelTensor | None = None) -> WindowedDataset:
    """Windowed dataset for one series (one subcarrier or one antenna).

    `series` is (domain, index) and must match the tensor's domain flag. For
    the test phase a true tensor of identical layout must be supplied; its
    block-(n+1) vectors become label_truth.
    """
    est.validate()
    spec.validate()
    domain, index = series
    if phase not in (PHASE_TRAIN, PHASE_TEST):
        raise ContractError(f"phase must be 'train' or 'test', got {phase!r}")
    if est.provenance != PROVENANCE_ESTIMATED:
        raise ContractError(f"datasets are built from estimated tensors, got "
                            f"provenance {est.provenance!r}")
    if est.domain != domain:
        raise ContractError(f"series domain {domain!r} does not match tensor domain {est.domain!r}")
    if not 0 <= index < est.n_series:
        raise ContractError(f"series index {index} out of range [0, {est.n_series})")
    need = spec.min_blocks(phase)
    if est.n_blocks < need:
        raise ContractError(f"tensor has {est.n_blocks} blocks, phase {phase!r} "
                            f"needs at least {need}")

    if phase == PHASE_TEST:
        if truth is None:
            raise ContractError("test datasets need the true tensor for label_truth")
        truth.validate()
        if truth.provenance != PROVENANCE_TRUE:
            raise ContractError(f"truth tensor has provenance {truth.provenance!r}")
        if truth.domain != est.domain or truth.values.shape != est.values.shape:
            raise ContractError("truth tensor layout does not match estimated tensor")

    values = est.series(index)
    if phase == PHASE_TRAIN:
        start, rows = 0, spec.n_tr
        label_truth = None
    else:
        start, rows = spec.n_gap, spec.n_te
        label_truth = truth.series(index)[start + spec.n0 + np.arange(rows)]

    feats, labels = _window_rows(values, start, rows, spec.n0)
    block_end = start + spec.n0 + np.arange(rows)            # 1-based window-end block
    return WindowedDataset(
        features=feats, labels=labels, n0=spec.n0, dim=values.shape[1],
        series=np.full(rows, index, dtype=np.int64), block_end=block_end,
        label_truth=label_truth).validate()


def _concat(parts: list[WindowedDataset]) -> WindowedDataset:
    first = parts[0]
    truth = None
    if first.label_truth is not None:
        truth = np.concatenate([p.label_truth for p in parts])
    return WindowedDataset(
        features=np.concatenate([p.features for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        n0=first.n0, dim=first.dim,
        series=np.concatenate([p.series for p in parts]),
        block_end=np.concatenate([p.block_end for p in parts]),
        label_truth=truth, scale=first.scale).validate()


def build_jl(est: ChannelTensor, spec: DatasetSpec,
             truth: ChannelTensor | None = None):
    """Pooled subcarrier datasets: union over l of per-subcarrier windows.

    spec.n_tr is interpreted per series (N'_tr), so the pooled training set
    has L*n_tr rows in series-major, time-minor order.
    """
    if est.domain != DOMAIN_SUBCARRIER:
        raise ContractError(f"build_jl expects a subcarrier-domain tensor, got {est.domain}")
    train = _concat([build_series_dataset(est, (DOMAIN_SUBCARRIER, l), spec, PHASE_TRAIN)
                     for l in range(est.n_subcarriers)])
    test = _concat([build_series_dataset(est, (DOMAIN_SUBCARRIER, l), spec, PHASE_TEST, truth)
                    for l in range(est.n_subcarriers)])
    return train, test


def build_jldt(est: ChannelTensor, spec: DatasetSpec,
               truth: ChannelTensor | None = None):
    """Antenna-domain pooled datasets: transform, then union over antennas.

    Rows are length-L vector windows; the pooled training set has M*n_tr rows.
    """
    if est.domain != DOMAIN_SUBCARRIER:
        raise ContractError(f"build_jldt expects a subcarrier-domain tensor, got {est.domain}")
    est_a = to_antenna_domain(est)
    truth_a = to_antenna_domain(truth) if truth is not None else None
    from .channel import DOMAIN_ANTENNA
    train = _concat([build_series_dataset(est_a, (DOMAIN_ANTENNA, m), spec, PHASE_TRAIN)
                     for m in range(est_a.n_antennas)])
    test = _concat([build_series_dataset(est_a, (DOMAIN_ANTENNA, m), spec, PHASE_TEST, truth_a)
                    for m in range(est_a.n_antennas)])
    return train, test


def fit_scale(train: WindowedDataset) -> float:
    """Root-mean-square of all training feature entries (one global scalar)."""
    train.validate()
    if train.n_rows == 0:
        raise ContractError("cannot fit a scale on an empty dataset")
    rms = float(np.sqrt(np.mean(train.features ** 2)))
    if rms == 0.0:
        raise ContractError("cannot fit a scale on an all-zero dataset")
    return rms


def apply_scale(dataset: WindowedDataset, scale: float) -> WindowedDataset:
    """Divide features and labels by `scale`; label_truth stays physical."""
    if not scale > 0:
        raise ContractError(f"scale must be positive, got {scale}")
    return replace(dataset,
                   features=dataset.features / scale,
                   labels=dataset.labels / scale,
                   scale=dataset.scale * scale).validate()

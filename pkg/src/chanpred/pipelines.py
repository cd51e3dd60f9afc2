"""End-to-end experiments: per-subcarrier, pooled, and antenna-domain training.

Four approach labels are understood throughout:

* ``sl``       one predictor per subcarrier, n_tr training rows each
* ``sl_small`` same, but only n_tr_prime rows (matches the pooled overhead)
* ``jl``       one predictor trained on all subcarriers pooled (n_tr_prime each)
* ``jldt``     one predictor trained on all antenna-domain series pooled,
               predictions mapped back to the subcarrier domain

At a fixed (SNR, seed) every approach consumes the identical estimated tensor;
NMSE is always scored in the subcarrier domain against the true channel at the
predicted block, averaged over subcarriers and test blocks. The per-series
time overhead of collecting training data is n_tr blocks for ``sl`` and
n_tr_prime blocks for the other three.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (
    ChannelConfig,
    ChannelTensor,
    DOMAIN_ANTENNA,
    DOMAIN_SUBCARRIER,
    PROVENANCE_PREDICTED,
    draw_paths,
    synthesize,
)
from .datasets import (
    DatasetSpec,
    PHASE_TEST,
    PHASE_TRAIN,
    apply_scale,
    build_jl,
    build_jldt,
    build_series_dataset,
    fit_scale,
    real_to_complex,
)
from .domains import to_subcarrier_domain
from .errors import ConfigError, ContractError
from .estimation import PilotScheme, db_to_linear, dft_pilot, estimate_trace
from .mlp import TrainConfig, init_mlp, predict, train
from .rng import derive_seed, stream

APPROACHES = ("sl", "sl_small", "jl", "jldt")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs: link, pilots, dataset split, training, seeds."""

    channel: ChannelConfig = ChannelConfig()
    tau: int = 4
    pilot_column: int = 1
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    n0: int = 3
    n_tr: int = 1000
    n_tr_prime: int = 20
    n_gap: int = 1500
    n_te: int = 200
    hidden: tuple = (512, 512)
    batch_size: int = 128
    learning_rate: float = 1e-3
    epochs: int = 1000
    seeds: tuple = (1, 2, 3)
    approaches: tuple = APPROACHES

    def validate(self) -> "ExperimentConfig":
        self.channel.validate()
        if self.tau < 1:
            raise ConfigError(f"tau must be >= 1, got {self.tau}")
        if not 0 <= self.pilot_column < self.tau:
            raise ConfigError(f"pilot_column must be in [0, tau), got {self.pilot_column}")
        if not self.snr_db:
            raise ConfigError("snr_db list must be non-empty")
        if self.n_tr != self.n_tr_prime * self.channel.n_subcarriers:
            raise ConfigError(
                f"n_tr must equal n_tr_prime * L for a fair comparison "
                f"(n_tr={self.n_tr}, n_tr_prime={self.n_tr_prime}, "
                f"L={self.channel.n_subcarriers})")
        self.dataset_spec().validate()
        self.dataset_spec(self.n_tr_prime).validate()
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"hidden layer sizes must be >= 1, got {self.hidden}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not self.seeds:
            raise ConfigError("seeds list must be non-empty")
        unknown = set(self.approaches) - set(APPROACHES)
        if unknown or not self.approaches:
            raise ConfigError(f"approaches must be a non-empty subset of {APPROACHES}, "
                              f"got {self.approaches}")
        return self

    def dataset_spec(self, n_tr: int | None = None) -> DatasetSpec:
        return DatasetSpec(self.n0, self.n_tr if n_tr is None else n_tr,
                           self.n_te, self.n_gap)

    @property
    def required_blocks(self) -> int:
        return self.n_gap + self.n_te + self.n0 + 1

    def overhead_blocks(self, approach: str) -> int:
        return self.n_tr if approach == "sl" else self.n_tr_prime

    def scheme(self, snr_db: float) -> PilotScheme:
        return PilotScheme(dft_pilot(self.tau, self.pilot_column),
                           db_to_linear(snr_db)).validate()


def nmse(pred: np.ndarray, truth: np.ndarray) -> float:
    """Mean over samples of ||h - h_hat||^2 / ||h||^2 (rows are samples)."""
    pred = np.atleast_2d(np.asarray(pred))
    truth = np.atleast_2d(np.asarray(truth))
    if pred.shape != truth.shape:
        raise ContractError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    power = np.sum(np.abs(truth) ** 2, axis=1)
    if np.any(power == 0):
        raise ContractError("zero-norm truth sample in NMSE")
    return float(np.mean(np.sum(np.abs(pred - truth) ** 2, axis=1) / power))


def prepare_link(cfg: ExperimentConfig, snr_db: float, seed: int):
    """Deterministic (true, estimated) tensor pair for one (SNR, seed) cell."""
    chan_cfg = cfg.channel.with_seed(seed)
    truth = synthesize(chan_cfg, draw_paths(chan_cfg), cfg.required_blocks)
    est = estimate_trace(truth, cfg.scheme(snr_db), stream(seed, "pilot-noise"))
    return truth, est


def persistence_nmse(truth: ChannelTensor, est: ChannelTensor,
                     cfg: ExperimentConfig) -> float:
    """Sanity floor: predict h_(n+1) by the newest estimate g_n."""
    spec = cfg.dataset_spec()
    preds, truths = [], []
    for l in range(est.n_subcarriers):
        ds = build_series_dataset(est, (DOMAIN_SUBCARRIER, l), spec, PHASE_TEST, truth)
        preds.append(ds.last_window())
        truths.append(ds.label_truth)
    return nmse(np.concatenate(preds), np.concatenate(truths))


@dataclass
class CellResult:
    """One (approach, SNR, seed) evaluation."""

    approach: str
    snr_db: float
    seed: int
    nmse: float
    histories: dict = field(default_factory=dict)   # series tag -> per-epoch loss
    models: dict = field(default_factory=dict)      # series tag -> MlpModel (opt-in)


def _train_predict(train_ds, test_ds, cfg, init_stream, shuffle_seed):
    scale = fit_scale(train_ds)
    train_scaled = apply_scale(train_ds, scale)
    test_scaled = apply_scale(test_ds, scale)
    dims = (train_scaled.features.shape[1], *cfg.hidden, train_scaled.labels.shape[1])
    model = init_mlp(dims, init_stream)
    model, history = train(model, train_scaled, TrainConfig(
        cfg.batch_size, cfg.epochs, cfg.learning_rate, shuffle_seed))
    preds = real_to_complex(predict(model, test_scaled.features) * scale)
    return preds, model, history


def evaluate_cell(truth: ChannelTensor, est: ChannelTensor, cfg: ExperimentConfig,
                  approach: str, seed: int, collect_models: bool = False) -> CellResult:
    """Train and score one approach on already-prepared tensors."""
    if approach not in APPROACHES:
        raise ConfigError(f"unknown approach {approach!r}")
    result = CellResult(approach, float("nan"), seed, float("nan"))

    if approach in ("sl", "sl_small"):
        n_tr = cfg.overhead_blocks(approach)
        spec = cfg.dataset_spec(n_tr)
        preds, truths = [], []
        for l in range(est.n_subcarriers):
            train_ds = build_series_dataset(est, (DOMAIN_SUBCARRIER, l), spec, PHASE_TRAIN)
            test_ds = build_series_dataset(est, (DOMAIN_SUBCARRIER, l), spec, PHASE_TEST, truth)
            p, model, hist = _train_predict(train_ds, test_ds, cfg,
                                            stream(seed, "mlp-init", l),
                                            derive_seed(seed, "shuffle", l))
            preds.append(p)
            truths.append(test_ds.label_truth)
            result.histories[l] = hist
            if collect_models:
                result.models[l] = model
        result.nmse = nmse(np.concatenate(preds), np.concatenate(truths))
        return result

    spec = cfg.dataset_spec(cfg.n_tr_prime)
    if approach == "jl":
        train_ds, test_ds = build_jl(est, spec, truth)
        preds, model, hist = _train_predict(train_ds, test_ds, cfg,
                                            stream(seed, "mlp-init", 0),
                                            derive_seed(seed, "shuffle", 0))
        result.nmse = nmse(preds, test_ds.label_truth)
    else:  # jldt
        train_ds, test_ds = build_jldt(est, spec, truth)
        preds, model, hist = _train_predict(train_ds, test_ds, cfg,
                                            stream(seed, "mlp-init", 0),
                                            derive_seed(seed, "shuffle", 0))
        pred_sub = reconstruct_subcarrier_predictions(preds, est.n_antennas, cfg.n_te)
        label_blocks = spec.n_gap + spec.n0 + np.arange(spec.n_te)
        truth_sub = truth.values[label_blocks]
        result.nmse = nmse(pred_sub.values.reshape(-1, est.n_antennas),
                           truth_sub.reshape(-1, est.n_antennas))
    result.histories[0] = hist
    if collect_models:
        result.models[0] = model
    return result


def reconstruct_subcarrier_predictions(preds: np.ndarray, n_antennas: int,
                                       n_te: int) -> ChannelTensor:
    """Reassemble pooled antenna-domain predictions into a subcarrier tensor.

    `preds` holds M*n_te rows in antenna-major, time-minor order, each a
    length-L predicted antenna-domain vector.
    """
    n_sub = preds.shape[1]
    if preds.shape[0] != n_antennas * n_te:
        raise ContractError(f"expected {n_antennas * n_te} prediction rows, "
                            f"got {preds.shape[0]}")
    values = np.ascontiguousarray(
        preds.reshape(n_antennas, n_te, n_sub).transpose(1, 2, 0))
    tensor = ChannelTensor(values, DOMAIN_ANTENNA, PROVENANCE_PREDICTED)
    return to_subcarrier_domain(tensor)


@dataclass(frozen=True)
class NmseEntry:
    approach: str
    snr_db: float
    nmse: float
    nmse_db: float
    overhead_blocks: int
    seed_count: int


@dataclass
class NmseReport:
    """Seed-averaged NMSE per (approach, SNR), plus diagnostics."""

    entries: list
    seeds: tuple
    persistence: dict                 # snr_db -> seed-averaged persistence NMSE
    runtime_seconds: float = 0.0
    cells: list = field(default_factory=list)  # per-(approach, snr, seed) CellResult

    def entry(self, approach: str, snr_db: float) -> NmseEntry:
        for e in self.entries:
            if e.approach == approach and e.snr_db == snr_db:
                return e
        raise KeyError((approach, snr_db))

    def csv_rows(self):
        """Rows for the fixed nmse.csv schema."""
        header = ("approach", "snr_db", "nmse_db", "seed_count", "overhead_blocks")
        rows = [(e.approach, e.snr_db, e.nmse_db, e.seed_count, e.overhead_blocks)
                for e in self.entries]
        return header, rows


def snr_sweep(cfg: ExperimentConfig, snr_db=None, approaches=None, seeds=None,
              collect_models: bool = False) -> NmseReport:
    """Run the requested approaches over an SNR grid with shared links.

    Channel traces and pilot noise are regenerated deterministically per seed,
    so every approach sees byte-identical estimated tensors at each
    (SNR, seed); NMSE is averaged over seeds.
    """
    cfg.validate()
    snr_db = tuple(cfg.snr_db if snr_db is None else snr_db)
    approaches = tuple(cfg.approaches if approaches is None else approaches)
    seeds = tuple(cfg.seeds if seeds is None else seeds)
    if not snr_db or not approaches or not seeds:
        raise ConfigError("snr_db, approaches and seeds must be non-empty")
    unknown = set(approaches) - set(APPROACHES)
    if unknown:
        raise ConfigError(f"unknown approaches: {sorted(unknown)}")

    started = time.perf_counter()
    cells = []
    persistence = {}
    for snr in snr_db:
        per_seed_persist = []
        for seed in seeds:
            truth, est = prepare_link(cfg, snr, seed)
            per_seed_persist.append(persistence_nmse(truth, est, cfg))
            for approach in approaches:
                cell = evaluate_cell(truth, est, cfg, approach, seed, collect_models)
                cell.snr_db = float(snr)
                cells.append(cell)
        persistence[float(snr)] = float(np.mean(per_seed_persist))

    entries = []
    for approach in approaches:
        for snr in snr_db:
            vals = [c.nmse for c in cells
                    if c.approach == approach and c.snr_db == float(snr)]
            mean = float(np.mean(vals))
            entries.append(NmseEntry(approach, float(snr), mean,
                                     10.0 * float(np.log10(mean)),
                                     cfg.overhead_blocks(approach), len(seeds)))
    return NmseReport(entries, seeds, persistence,
                      time.perf_counter() - started, cells)


def run_sl(cfg: ExperimentConfig, small: bool = False) -> NmseReport:
    """Separate-learning experiment (one predictor per subcarrier)."""
    return snr_sweep(cfg, approaches=("sl_small" if small else "sl",))


def run_jl(cfg: ExperimentConfig) -> NmseReport:
    """Joint-learning experiment (single predictor pooled over subcarriers)."""
    return snr_sweep(cfg, approaches=("jl",))


def run_jldt(cfg: ExperimentConfig) -> NmseReport:
    """Joint learning on antenna-domain series with reconstruction."""
    return snr_sweep(cfg, approaches=("jldt",))

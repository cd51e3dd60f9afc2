"""Wideband massive-MIMO channel prediction laboratory."""

from .channel import (
    ChannelConfig,
    ChannelTensor,
    PathSet,
    draw_paths,
    export_trace,
    import_trace,
    steering_vector,
    synthesize,
)
from .correlation import CorrelationReport, auto_correlation, correlation_report, cross_correlation
from .datasets import (
    DatasetSpec,
    WindowedDataset,
    apply_scale,
    build_jl,
    build_jldt,
    build_series_dataset,
    complex_to_real,
    fit_scale,
    real_to_complex,
)
from .domains import to_antenna_domain, to_subcarrier_domain
from .errors import (
    ChanpredError,
    ConfigError,
    ContractError,
    TraceFormatError,
    TrainingDivergedError,
)
from .estimation import PilotScheme, db_to_linear, dft_pilot, estimate_trace, ls_estimate, transmit_pilots
from .mlp import (
    AdamState,
    MlpModel,
    TrainConfig,
    adam_step,
    backward,
    forward,
    init_mlp,
    load_model,
    loss_mse,
    predict,
    save_model,
    train,
)
from .pipelines import (
    APPROACHES,
    ExperimentConfig,
    NmseEntry,
    NmseReport,
    nmse,
    persistence_nmse,
    prepare_link,
    run_jl,
    run_jldt,
    run_sl,
    snr_sweep,
)

__version__ = "0.1.0"

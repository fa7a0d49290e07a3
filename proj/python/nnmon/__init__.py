"""Runtime out-of-distribution monitors for feed-forward classifiers."""

from ._core import (
    BddManager,
    ConfigError,
    DataError,
    Monitor,
    Network,
    NnmonError,
    auroc,
    build_box,
    build_multibox,
    build_neuron_selection,
    build_pattern,
    check_safety,
    fit_gaussian,
    fit_mahalanobis,
    generalized_entropy,
    load_idx,
    load_monitor,
    load_weights,
    max_softmax_score,
    odin_score,
    parse_monitor,
    percentile_threshold,
    propagate_intervals,
    run_cli,
    shannon_entropy,
    softmax,
    tnr_at_tpr95,
)

__all__ = [name for name in dir() if not name.startswith("_")]

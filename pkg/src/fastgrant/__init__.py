"""Event-driven MTC traffic prediction toolkit for fast uplink grant scheduling.

Generates causally linked binary transmission traces, trains a from-scratch
stacked LSTM to predict next-slot transmissions, tunes it with a Bayesian
optimizer, compares against a directed-information baseline, and translates
prediction quality into uplink-grant resource metrics.
"""

from fastgrant.traffic import (
    DeviceBehavior,
    IidRandom,
    NetworkSpec,
    PeriodicSlots,
    TransmissionRecord,
    Triggered,
    five_device_scenario,
    generate_event,
    generate_record,
    validate_spec,
)
from fastgrant.windowing import WindowedDataset, make_windows, split_windows
from fastgrant.forecaster import LstmForecaster, TrainHistory, TUNED_PARAMS
from fastgrant.causality import (
    CausalEdge,
    CausalGraph,
    DiEstimate,
    DirectedInfoPredictor,
    directed_information,
    infer_causal_graph,
    predict_next,
)
from fastgrant.metrics import ConfusionCounts, EvalReport, compare_reports, confusion, metrics_from_counts
from fastgrant.grants import GrantStats, ra_reduction_report, simulate_grants
from fastgrant.tuning import SearchSpace, TrialResult, search, suggest, sweep_sequence_length, tune

__version__ = "0.1.0"

__all__ = [
    "CausalEdge",
    "CausalGraph",
    "ConfusionCounts",
    "DeviceBehavior",
    "DiEstimate",
    "DirectedInfoPredictor",
    "EvalReport",
    "GrantStats",
    "IidRandom",
    "LstmForecaster",
    "NetworkSpec",
    "PeriodicSlots",
    "SearchSpace",
    "TrainHistory",
    "TransmissionRecord",
    "TrialResult",
    "Triggered",
    "TUNED_PARAMS",
    "WindowedDataset",
    "compare_reports",
    "confusion",
    "directed_information",
    "five_device_scenario",
    "generate_event",
    "generate_record",
    "infer_causal_graph",
    "make_windows",
    "metrics_from_counts",
    "predict_next",
    "ra_reduction_report",
    "search",
    "simulate_grants",
    "split_windows",
    "suggest",
    "sweep_sequence_length",
    "tune",
    "validate_spec",
]

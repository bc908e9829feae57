"""Simulation and analytics for stem/fluff transaction relay.

Transactions travel a random relay path (the stem), then broadcast via
exponential-delay gossip (the fluff).  The package provides the graph
families, the forwarding schemes, a set of adversarial source estimators
with increasing knowledge, closed-form anonymity bounds, and a Monte Carlo
harness that writes self-describing CSVs.
"""

from .topology import (Digraph, NodeProfile, assign_roles, gen_line_cycle,
                       gen_exact_d_regular, gen_p2p_approx_regular,
                       gen_anonymity_approx4, embed_partial_deployment,
                       apply_supernode_edges, shortest_path_hops)
from .protocol import (Record, Tx, TimerConfig, EpochRouting, StemOutcome,
                       BlackHoleOutcome, SCHEMES, sample_epoch_routing,
                       stem_route, diffuse, propagate, simulate_black_hole,
                       default_hop_cap)
from .adversary import (ObservationLog, SignatureTable, first_spy_estimate,
                        matching_estimate, routing_aware_estimate,
                        train_signatures, per_source_histograms,
                        classify_batch, intersection_classify, validate_log)
from .analytics import (PrecisionRecallReport, precision_recall,
                        FundamentalBounds, fundamental_bounds,
                        oto_first_spy_precision, ward_pmf, ward_pmf_values,
                        simulate_ward_size, ato_precision_bounds,
                        MatchingBounds, matching_precision_bounds,
                        Theorem1Check, theorem1_check, timer_threshold,
                        expected_extra_delay, BoundsReport,
                        partial_deployment_recall_bounds, bounds_report)
from .harness import (ExperimentConfig, TrialRow, ConfigError, run_experiment,
                      run_trial, run_preset, write_csv, serialize_graph,
                      load_graph, parse_config_file, config_from_dict,
                      CSV_HEADER, PRESET_ALIASES)

__version__ = "0.1.0"

__all__ = [
    "Digraph", "NodeProfile", "assign_roles", "gen_line_cycle",
    "gen_exact_d_regular", "gen_p2p_approx_regular", "gen_anonymity_approx4",
    "embed_partial_deployment", "apply_supernode_edges", "shortest_path_hops",
    "Record", "Tx", "TimerConfig", "EpochRouting", "StemOutcome",
    "BlackHoleOutcome", "SCHEMES", "sample_epoch_routing", "stem_route",
    "diffuse", "propagate", "simulate_black_hole", "default_hop_cap",
    "ObservationLog", "SignatureTable", "first_spy_estimate",
    "matching_estimate", "routing_aware_estimate", "train_signatures",
    "per_source_histograms", "classify_batch", "intersection_classify",
    "validate_log",
    "PrecisionRecallReport", "precision_recall", "FundamentalBounds",
    "fundamental_bounds", "oto_first_spy_precision", "ward_pmf",
    "ward_pmf_values", "simulate_ward_size", "ato_precision_bounds",
    "MatchingBounds", "matching_precision_bounds", "Theorem1Check",
    "theorem1_check", "timer_threshold", "expected_extra_delay",
    "BoundsReport", "partial_deployment_recall_bounds", "bounds_report",
    "ExperimentConfig", "TrialRow", "ConfigError", "run_experiment",
    "run_trial", "run_preset", "write_csv", "serialize_graph", "load_graph",
    "parse_config_file", "config_from_dict", "CSV_HEADER", "PRESET_ALIASES",
]

"""Leak localization for flow networks.

Recursive minimum-measurement-cost bisection plus steady-state water
balance, tracing a leak to a node or half-pipe segment with only on-demand
flow measurements.
"""

from .network import (Edge, Network, NetworkError, Node, NodeKind,
                      ParseError, load_network)
from .balance import (BalanceVerdict, CrossingFlow, EnvelopeBalance,
                      MultipleLeaksInSingleLeakMode, NoLeakDetected,
                      envelope_balance, find_leaky_partitions, orient_into)
from .ilp import (BisectionProblem, Mode, Partition, PartitionError,
                  brute_force_bisection, cut_cost, edge_weights,
                  size_window, solve_bisection)
from .spectral import (Rounding, SpectralSolution, Weighting, fiedler_vector,
                       spectral_bisect)
from .protocol import (CampaignState, FlowReading, LeakMode, LeakScenario,
                       NodeFinding, NodeSite, PipeSite, PipeStrategy, Point,
                       ProtocolResult, QueryPlan, ScenarioOracle,
                       SegmentFinding, apply_readings, apply_scenario_supply,
                       new_campaign, oracle_readings, plan_stage,
                       resolve_segment, run_protocol, split_pipe)
from .study import (StudyResult, balance_supply, enumerative_study,
                    generate_graph, network_stats, summarize)

__version__ = "0.1.0"

"""Locally verifiable consistent network updates: provers, verifiers and a simulator."""

from .forwarding import FlowId, ForwardingState, check_blackhole_free, check_loop_free, next_hop, trace_packet
from .labeling import FlowLabel, TreeLabel, Verdict, prove_flow, prove_tree, verify_flow_local, verify_tree_local
from .protocols import FlowRoutes, Scheme, TreeRoutes
from .scenario import Scenario, fig1_chain, parse_scenario
from .simulator import run
from .topology import Graph, build_graph, hop_distance, neighbors

__all__ = [
    "FlowId", "ForwardingState", "check_blackhole_free", "check_loop_free", "next_hop", "trace_packet",
    "FlowLabel", "TreeLabel", "Verdict", "prove_flow", "prove_tree", "verify_flow_local", "verify_tree_local",
    "FlowRoutes", "Scheme", "TreeRoutes", "Scenario", "fig1_chain", "parse_scenario", "run",
    "Graph", "build_graph", "hop_distance", "neighbors",
]

"""Experiment pipeline, rendering, reproduction targets and the CLI."""

from .experiment import (MASTER_SEED, AuditRow, AuditTable, ExperimentConfig, ExperimentResult,
                         audit_independencies, run_experiment)
from .render import bar_chart_svg, emit_csv, emit_graph_svg, emit_svg, graph_svg
from .reproduce import FIG4_SCENARIOS, TARGETS, reproduce

__all__ = [
    "FIG4_SCENARIOS", "MASTER_SEED", "TARGETS", "AuditRow", "AuditTable", "ExperimentConfig",
    "ExperimentResult", "audit_independencies", "bar_chart_svg", "emit_csv", "emit_graph_svg",
    "emit_svg", "graph_svg", "reproduce", "run_experiment",
]

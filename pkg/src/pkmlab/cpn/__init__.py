"""Timed coloured Petri nets: simulation, state spaces and monitor statistics."""
from .analysis import (LivenessReport, PartialGraphError, SccGraph, check_dead_markings,
                       liveness, scc, statespace_report, tarjan)
from .engine import (Firing, FiringError, Marking, MonitorLog, SimulationResult, State,
                     StateSpaceGraph, enabled, explore, fire, initial_state, simulate)
from .net import Arc, ArcItem, Net, NetBuilder, NetError, Place, Transition, Var, when
from .stats import TimedStats, t_cdf, t_quantile, timed_stats

__all__ = [
    "Arc", "ArcItem", "Firing", "FiringError", "LivenessReport", "Marking", "MonitorLog", "Net",
    "NetBuilder", "NetError", "PartialGraphError", "Place", "SccGraph", "SimulationResult",
    "State", "StateSpaceGraph", "TimedStats", "Transition", "Var", "check_dead_markings",
    "enabled", "explore", "fire", "initial_state", "liveness", "scc", "simulate",
    "statespace_report", "t_cdf", "t_quantile", "tarjan", "timed_stats", "when",
]

"""Simulator for machine social networks: machines follow peers whose interests,
location and followees are close enough, links fade exponentially, and a
cooperative maze scenario exercises map sharing and archival storage."""

from .social import (
    DecayParams,
    MachineProfile,
    StrengthBreakdown,
    Weights,
    connection_strength,
    decayed_strength,
    interest_similarity,
    link_expiry_step,
    neighbor_similarity,
    should_connect,
    spatial_similarity,
)
from .network import Link, Network, Post, SimConfig, StepReport, disseminate, init_network, run, step, visible_pairs
from .metrics import (
    FixedBaseline,
    SweepResult,
    average_connections,
    component_count,
    crossover_threshold,
    export_table,
    threshold_sweep,
)

__version__ = "0.1.0"

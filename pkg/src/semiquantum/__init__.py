"""Semi-quantum nonlocal games and measurement-dependent hidden-variable models."""

from .game import (
    CorrelationTable,
    GameSpec,
    InputEnsemble,
    Scenario,
    classify,
    correlation,
    steering_demo_game,
    tetrahedron_game,
)
from .mdl import MdlModel, empirical_table, evaluate, paper_model, sample, table
from .metrics import capacity, free_will_F, mi_two_row, mutual_information, variational_M
from .minm import certify, min_M
from .steering import ProtocolConfig, run_protocol, run_rounds, simulated_table

__version__ = "0.1.0"

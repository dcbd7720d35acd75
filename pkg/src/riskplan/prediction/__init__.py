"""Obstacle motion prediction: observation buffers, baseline, oracle and
trained predictors, and the occupancy grid geometry they share."""

from .grids import (
    HORIZON,
    HISTORY_LENGTH,
    GridGeometry,
    OccupancyGrid,
    GridSet,
    GridExtentError,
    grid_geometry_for,
)
from .buffers import ObservationBuffer, buffers_from_history
from .predictors import (
    ConstantVelocityPredictor,
    OraclePredictor,
    TrainedPredictor,
)

__all__ = [
    "HORIZON",
    "HISTORY_LENGTH",
    "GridGeometry",
    "OccupancyGrid",
    "GridSet",
    "grid_geometry_for",
    "ObservationBuffer",
    "buffers_from_history",
    "ConstantVelocityPredictor",
    "OraclePredictor",
    "TrainedPredictor",
    "GridExtentError",
]

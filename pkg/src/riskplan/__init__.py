"""riskplan: deterministic lab for time- and risk-dependent path planning
among moving obstacles."""

__version__ = "0.1.0"

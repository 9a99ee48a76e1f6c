"""Disturb modeling for single- and dual-port ferroelectric NAND strings."""

__version__ = "0.1.0"

from .cell import CellParams, CellState, Device, default_device
from .electrostatics import ChannelChargeModel, GateStack, Layer, solve_electrostatics
from .kinetics import GrainEnsemble, SwitchingKinetics, sample_ensemble
from .nand_string import BiasWaveform, NandString, Segment, solve_string_current

__all__ = [
    "BiasWaveform",
    "CellParams",
    "CellState",
    "ChannelChargeModel",
    "Device",
    "GateStack",
    "GrainEnsemble",
    "Layer",
    "NandString",
    "Segment",
    "SwitchingKinetics",
    "default_device",
    "sample_ensemble",
    "solve_electrostatics",
    "solve_string_current",
]

"""Monte Carlo simulator of a single trapped 40Ca+ optical qubit, with the
analysis pipeline for its coherence measurements."""

__version__ = "0.1.0"

from .config import ConfigError, RunConfig, SimConfig, load_config  # noqa: E402
from .engine import Measure, Preparation, Pulse, ScanDirective, Sequence, Wait, run_scan, simulate  # noqa: E402
from .physics import D, PhysicalConstants, S, ZeemanState, coupling_strength, zeeman_shift  # noqa: E402

__all__ = ["ConfigError", "D", "Measure", "PhysicalConstants", "Preparation", "Pulse", "RunConfig",
           "S", "ScanDirective", "Sequence", "SimConfig", "Wait", "ZeemanState", "coupling_strength",
           "load_config", "run_scan", "simulate", "zeeman_shift", "__version__"]

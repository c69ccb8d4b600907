"""Open Toda lattice as a coadjoint orbit: classical flow, orbit geometry and quantization numerics."""

from __future__ import annotations

__version__ = "0.1.0"

from . import coherent, dynamics, errors, finrep, orbit, quantization, toda_core

__all__ = ["coherent", "dynamics", "errors", "finrep", "orbit", "quantization", "toda_core", "__version__"]

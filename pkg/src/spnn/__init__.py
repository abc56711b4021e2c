"""Loss- and crosstalk-aware simulation of MZI-mesh photonic neural networks.

Layers of the stack, bottom to top:

* :mod:`spnn.numerics`  -- complex linear algebra, FFT, dB bridges, seeded RNG
* :mod:`spnn.device`    -- 2x2 MZI compact model (loss + statistical crosstalk)
* :mod:`spnn.mesh`      -- SVD + Clements compilation of weight matrices
* :mod:`spnn.propagation` -- field propagation, first-order crosstalk tracking,
  Monte-Carlo coherent interference
* :mod:`spnn.analysis`  -- power penalty, port statistics, reference trainer,
  inference-accuracy studies
* :mod:`spnn.cli`       -- experiment orchestration and CSV emission
"""

from spnn.numerics import Rng, db_to_field, db_to_power
from spnn.device import MziParams, PhasePair

__all__ = ["Rng", "db_to_field", "db_to_power", "MziParams", "PhasePair"]

__version__ = "0.1.0"

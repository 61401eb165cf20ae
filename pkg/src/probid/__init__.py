"""Algorithmic identification of probability measures on Cantor space.

Exact rational arithmetic throughout: clopen sets, computable measures,
learners that emit measure balls, Kraft-style deficiency certificates and
the stage-by-stage adversary that refutes a learner on a family.
"""

__version__ = "0.1.0"

from .clopen import ClopenSet
from .measures import MeasureBall, parse_measure, rho_interval, rho_n
from .families import parse_family
from .learners import parse_learner, run_learner
from .deficiency import Codebook, d_hat, ed_hat, lemma1_certificate, make_codebook
from .adversary import amplify, build_schedule, diagonalize, find_inconsistency

__all__ = [
    "ClopenSet", "MeasureBall", "parse_measure", "rho_n", "rho_interval", "parse_family",
    "parse_learner", "run_learner", "Codebook", "make_codebook", "lemma1_certificate", "ed_hat",
    "d_hat", "build_schedule", "find_inconsistency", "amplify", "diagonalize",
]

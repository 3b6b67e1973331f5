"""Shooting for split Hamiltonian Dirichlet problems with prescribed phase-angle winding."""

__version__ = "0.1.0"

from .errors import MaslovShootError  # noqa: E402
from .hamiltonian import Signature, SplitSymmetricPath, decouple, fundamental_solution  # noqa: E402
from .maslov import MaslovIndex, count_N, maslov_constant_split, maslov_crossing_form, maslov_from_phase_angles  # noqa: E402
from .model import NonlinearProblem, ProblemOptions  # noqa: E402
from .phase_angles import compute_phase_trace, detect_crossings, k_alpha  # noqa: E402
from .sturm import eta_j, prufer_angle, second_block_angle  # noqa: E402

__all__ = [
    "MaslovShootError", "Signature", "SplitSymmetricPath", "decouple", "fundamental_solution", "MaslovIndex",
    "count_N", "maslov_constant_split", "maslov_crossing_form", "maslov_from_phase_angles", "NonlinearProblem",
    "ProblemOptions", "compute_phase_trace", "detect_crossings", "k_alpha", "eta_j", "prufer_angle",
    "second_block_angle",
]

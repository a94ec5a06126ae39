"""First-detection statistics of a lattice particle under repeated projective measurement."""

from .aah import (AAHDetectionResult, SpreadingProfile, aah_detection_suite, aah_free_spreading,
                  overlap_distance, scaled_l1_distance)
from .analytics import (bootstrap_a0_state, fourier_laplace_psi, laplace_psi0, p0_asymptotic,
                        p0_discrete, pn_asymptotic_origin, pt_asymptotic, survival_limit)
from .config import ExperimentConfig, load_config
from .effective import (build_heff1, build_heff2, perturbative_spectrum, survival_nh1_closed_form,
                        survival_nh1_numerical, survival_nh2)
from .errors import (ConfigError, ConvergenceError, FitError, NoPlateauError, PropagationError,
                     QZenoError, WavefrontError)
from .fitting import PowerLawFit, fit_detection, fit_power_law
from .model import (AAHPotential, InitialState, LatticeModel, MeasurementProtocol, build_hamiltonian,
                    build_projector, localized_state)
from .numerics import (ComplexTridiagonalOperator, TridiagonalOperator, bessel_j, eig_tridiagonal,
                       expm, propagate_nonhermitian)
from .stroboscopic import DetectionSeries, detect_regimes, estimate_plateau, run_stroboscopic

__version__ = "0.1.0"

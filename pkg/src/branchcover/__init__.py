"""Monte-Carlo study of critical points of random meromorphic functions.

A random pair (alpha, beta) of Gaussian holomorphic sections defines the map
u = alpha/beta; its critical points are the zeros of the Wronskian.  The
library samples such pairs on the sphere and on a torus, locates the critical
points exactly (Riemann-Hurwitz counts certified), and estimates
equidistribution, hole-probability, and norm-tail statistics with confidence
intervals and decay-rate fits.
"""

__version__ = "0.1.0"

from .bergman import (KernelDiagnostics, PeakPair, bergman_diagonal,
                      kernel_derivative_growth, peak_sections)
from .elliptic import (BundlePoint, EllipticSurface, ThetaBasis,
                       critical_points_torus, sample_bundle, sample_torus,
                       theta_basis)
from .ensemble import (BasisSpec, EnsembleSpec, SectionPair, evaluate_section,
                       make_basis, pair_rng, sample_pair)
from .errors import (BranchcoverError, CommonZeroError, ConvergenceError,
                     DegeneratePairError, DomainError, IncompleteRootSetError,
                     InsufficientDataError, KindMismatchError)
from .experiments import (CountDeviationStat, DegreeRow, DeviationStat,
                          ExperimentConfig, ExperimentResult, HoleStat,
                          PLResidualStat, TailL1Stat, TailPointStat,
                          TailSupStat, fit_rate, pl_residual, run,
                          tail_bound_check, wilson_interval)
from .geometry import (Cap, QuadratureGrid, SmoothedIndicator, SpherePoint,
                       SurfaceGeometry, TestFunction, TorusPoint, build_grid,
                       constant_function, fs_distance, spherical_harmonic)
from .roots import (CriticalSet, companion_roots, critical_points,
                    empirical_measure, hausdorff_chordal, roots_binary_form)
from .wronskian import (WronskianForm, jacobian_form, log_norm_integral,
                        sup_norm, wronskian_norm)

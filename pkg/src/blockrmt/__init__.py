"""Limiting eigenvalue densities of Gaussian block random matrices."""
from .model import (BlockGrid, BlockRef, CovarianceTensor, DimensionProfile, ModelSpec,
                    SpecError, WishartSpec, build_wishart_embedding, derive_sigma,
                    load_spec, model_from_grid, parse_spec, validate_sigma)
from .eta import PatternMask, detect_pattern, eta_alpha_apply, eta_apply, eta_norm
from .solver import (GSolution, NonConvergence, PositivityViolation, SingularJacobian,
                     SolverError, cauchy_transform, solve_grid, solve_point, trace_G)
from .wishart import (WishartSolution, gram_cauchy, recover_GHH, recover_GHH_rows,
                      solve_reduced_G1, solve_wishart_point)
from .density import (DensityCurve, SpectralMoments, curve_moments, density_curve,
                      stieltjes_invert, support_bracket)
from .oracle import (Pairing, enumerate_pairings, finite_n_moment, kappa_pi,
                     limiting_moment, limiting_moment_recursive)
from .mcsim import Histogram, SimConfig, compare, empirical_spectrum, sample_matrix
from .presets import get_preset

__all__ = [name for name in dir() if not name.startswith("_")]

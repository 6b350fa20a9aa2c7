from .linalg import (DecompositionError, cholesky, solve_spd, solve_lower,
                     inverse, inverse_spd, symmetrize)
from .normal import std_normal_cdf, std_normal_pdf, bvn_cdf
from .rng import (RngStream, as_generator, draw_normal, draw_uniform,
                  draw_student_t)

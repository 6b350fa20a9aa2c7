from .sample import (EmptySampleError, WeightedSample, DistanceSpec, distance,
                     select_epsilon, resample)
from .abc import TProposal, abc_reject, abc_importance, simulate_distances
from .mcmc import rw_metropolis, tune_proposal

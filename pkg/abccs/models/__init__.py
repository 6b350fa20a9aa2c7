import numpy as np

from .base import (DensityTable, DomainError, Model, NormalPrior, Summary,
                   UniformPrior)
from .parabola import NormalParabola
from .equicorr import Equicorr
from .probit import Probit
from .smith import Smith
from .spatial import SchemaError, SpatialDataset


def grid_coords(grid=3, spacing=10.0):
    ticks = spacing * np.arange(grid)
    return np.array([(x, y) for y in ticks for x in ticks])


def _smith(seed, coords=None, grid=3, spacing=10.0, n=60):
    if coords is None:
        coords = grid_coords(grid, spacing)
    return Smith(coords, n)


Models = {
    'normal-parabola': lambda seed, **kw: NormalParabola(**kw),
    'equicorr': lambda seed, **kw: Equicorr(**kw),
    'probit': lambda seed, **kw: Probit(seed=seed, **kw),
    'smith': _smith,
}


def build(name, params=None, seed=0):
    """Instantiate a built-in model from its name and keyword parameters."""
    try:
        factory = Models[name]
    except KeyError:
        raise ValueError('Unknown model %r' % name)
    return factory(seed, **(params or {}))

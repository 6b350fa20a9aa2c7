"""
JSON run configuration.

    {"model": "equicorr", "method": "abc-cs", "seed": 42,
     "model_params": {"n": 30, "q": 50},
     "true_theta": [0.0, 0.0, -0.69],
     "sampler": {"n_proposals": 100000, "alpha": 0.001},
     "R": 1000, "workers": 4, "out": "results",
     "study": {"n_trials": 20, "methods": ["abc-cs", "full-mcmc"]}}

Unknown keys are rejected at every level; errors name the offending key.
"""

import json
import logging
import os

from collections import namedtuple

import numpy as np

from abccs.estimating import (DEFAULT_REPLICATIONS, MAX_REPLICATIONS,
                              MIN_REPLICATIONS)
from abccs.methods import (Methods, SamplerSettings, UnsupportedMethod,
                           check_capability)
from abccs.models import DomainError, Smith, SpatialDataset, build
from abccs.models.equicorr import from_natural
from abccs.numkernel.rng import MASK64


log = logging.getLogger(__name__)

WORKERS_VARIABLE = 'ABCCS_WORKERS'

Keys = ('model', 'method', 'seed', 'model_params', 'true_theta', 'data',
        'sampler', 'R', 'workers', 'out', 'study')
Required = ('model', 'method', 'seed')


class ConfigError(ValueError):
    def __init__(self, path, message):
        self.path = path
        ValueError.__init__(self, '%s: %s' % (path or '<root>', message))


class RunConfig(namedtuple('RunConfig', Keys)):
    def snapshot(self):
        """Plain JSON-compatible view of the configuration."""
        d = self._asdict()
        d['sampler'] = self.sampler._asdict()
        d['true_theta'] = list(self.true_theta)
        return d

    def build_model(self):
        """The model and, when data files are configured, the dataset."""
        if self.data is not None:
            dataset = SpatialDataset.ReadFile(self.data['stations'],
                                              self.data['maxima'])
            return Smith(dataset.coords, dataset.shape[0]), dataset
        return build(self.model, self.model_params, self.seed), None


def default_theta(model):
    if model.name == 'normal-parabola':
        return [5.0]
    if model.name == 'equicorr':
        return from_natural(0.0, 1.0, 0.5, model.q).tolist()
    if model.name == 'probit':
        return [0.5, 1.5, float(np.log(4.0))]
    return [20.0, 5.0, 15.0, 30.0, 0.1, -0.05, 10.0, 0.02, 0.01, 0.1]


def _object(value, path, allowed):
    if not isinstance(value, dict):
        raise ConfigError(path, 'expected an object')
    for key in value:
        if key not in allowed:
            raise ConfigError('%s.%s' % (path, key) if path else key,
                              'unknown key')
    return value


def _integer(value, path, low=None, high=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, 'expected an integer, got %r' % (value,))
    if low is not None and value < low:
        raise ConfigError(path, 'must be >= %d' % low)
    if high is not None and value > high:
        raise ConfigError(path, 'must be <= %d' % high)
    return value


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, 'expected a number, got %r' % (value,))
    if not np.isfinite(value):
        raise ConfigError(path, 'must be finite')
    return float(value)


def _sampler(value):
    value = _object(value or {}, 'sampler', SamplerSettings._fields)
    numbers = dict((k, _number(v, 'sampler.' + k)) for k, v in value.items())
    try:
        s = SamplerSettings(**numbers)
    except ValueError as ex:
        raise ConfigError('sampler.block_size', str(ex))

    if not 0 < s.alpha < 1:
        raise ConfigError('sampler.alpha', 'must lie in (0, 1)')
    for key in ('n_proposals', 'n_resample', 'mcmc_iter', 'block_size'):
        if getattr(s, key) < 1:
            raise ConfigError('sampler.' + key, 'must be positive')
    if s.n_proposals * s.alpha < 1:
        raise ConfigError('sampler.n_proposals', 'must be at least 1/alpha')
    if not 0 <= s.burn_in < s.mcmc_iter:
        raise ConfigError('sampler.burn_in', 'must lie in [0, mcmc_iter)')
    if s.proposal_df <= 0 or s.proposal_scale <= 0:
        raise ConfigError('sampler', 'proposal df and scale must be positive')

    return s


def _method(model, method, path):
    if not isinstance(method, str) or method not in Methods:
        raise ConfigError(path, 'unknown method %r' % (method,))
    try:
        check_capability(model, method)
    except UnsupportedMethod as ex:
        raise ConfigError(path, str(ex))
    return method


def _data(value, model):
    value = _object(value, 'data', ('stations', 'maxima'))
    if model != 'smith':
        raise ConfigError('data', 'only the smith model reads data files')
    for key in ('stations', 'maxima'):
        if not isinstance(value.get(key), str):
            raise ConfigError('data.' + key, 'expected a file path')
    return dict(value)


def parse_dict(data, seed=None, out=None):
    """Validate a decoded configuration and apply defaults."""
    _object(data, '', Keys)

    for key in Required:
        if key not in data:
            raise ConfigError(key, 'missing required key')

    seed = _integer(data['seed'] if seed is None else seed, 'seed', 0, MASK64)

    name = data['model']
    params = data.get('model_params') or {}
    if not isinstance(params, dict):
        raise ConfigError('model_params', 'expected an object')
    try:
        model = build(name, params, seed)
    except (TypeError, ValueError) as ex:
        path = 'model' if 'Unknown model' in str(ex) else 'model_params'
        raise ConfigError(path, str(ex))

    method = _method(model, data['method'], 'method')

    theta = data.get('true_theta')
    if theta is None:
        theta = default_theta(model)
    if not isinstance(theta, list):
        raise ConfigError('true_theta', 'expected a list of numbers')
    theta = [_number(v, 'true_theta[%d]' % i) for i, v in enumerate(theta)]
    try:
        model.check_theta(theta)
    except DomainError as ex:
        raise ConfigError('true_theta', str(ex))

    R = _integer(data.get('R', DEFAULT_REPLICATIONS), 'R', MIN_REPLICATIONS,
                 MAX_REPLICATIONS)

    workers = data.get('workers')
    if workers is None:
        try:
            workers = int(os.environ.get(WORKERS_VARIABLE, '1'))
        except ValueError:
            raise ConfigError('workers', '$%s is not an integer' %
                              WORKERS_VARIABLE)
    workers = _integer(workers, 'workers', 1)

    out = data.get('out', 'results') if out is None else out
    if not isinstance(out, str):
        raise ConfigError('out', 'expected a directory path')

    study = data.get('study')
    if study is not None:
        _object(study, 'study', ('n_trials', 'methods'))
        n_trials = _integer(study.get('n_trials', 20), 'study.n_trials', 1)
        methods = study.get('methods', [method])
        if not isinstance(methods, list) or not methods:
            raise ConfigError('study.methods', 'expected a non-empty list')
        methods = [_method(model, m, 'study.methods[%d]' % i)
                   for i, m in enumerate(methods)]
        study = {'n_trials': n_trials, 'methods': methods}

    dataset = data.get('data')
    if dataset is not None:
        dataset = _data(dataset, name)

    config = RunConfig(name, method, seed, dict(params), theta, dataset,
                       _sampler(data.get('sampler')), R, workers, out, study)

    log.debug('Configuration: %r', config.snapshot())

    return config


def parse_config(path, seed=None, out=None):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as ex:
        raise ConfigError('', 'cannot read %s: %s' % (path, ex.strerror))
    except ValueError as ex:
        raise ConfigError('', 'malformed JSON in %s: %s' % (path, ex))

    return parse_dict(data, seed, out)

#!/usr/bin/env python3

import argparse
import datetime
import json
import logging
import os
import sys
import time

import numpy as np
import pandas as pd

from abccs.config import ConfigError, parse_config
from abccs.diagnostics import kl_divergence_1d, run_study, summarize
from abccs.methods import (ABC_STREAM, DATA_STREAM, HJ_STREAM, MCMC_STREAM,
                           RESAMPLE_STREAM, UnsupportedMethod, observe,
                           run_method)
from abccs.models import SchemaError, SpatialDataset
from abccs.numkernel import RngStream
from abccs.utils import report


log = logging.getLogger(__name__)


class UsageError(ValueError):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def jsonable(value):
    if isinstance(value, dict):
        return dict((str(k), jsonable(v)) for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def write_json(path, data):
    with open(path, 'w') as fh:
        json.dump(jsonable(data), fh, indent=2, sort_keys=True)
        fh.write('\n')
    log.info('Wrote %s', path)


def write_samples(path, sample, names):
    frame = pd.DataFrame(sample.draws, columns=list(names))
    frame['weight'] = sample.weights
    frame.to_csv(path, index=False, float_format='%.17g')
    log.info('Wrote %s', path)


def streams(seed):
    return {'seed': seed,
            'data': DATA_STREAM,
            'estimate_HJ': HJ_STREAM,
            'abc_blocks': ABC_STREAM,
            'resample': RESAMPLE_STREAM,
            'mcmc': MCMC_STREAM}


def run(config):
    model, dataset = config.build_model()
    base = RngStream(config.seed, 0)

    if dataset is not None:
        y = dataset.maxima
    else:
        y = observe(model, config.true_theta, base)

    started = datetime.datetime.now(datetime.timezone.utc)
    clock = time.perf_counter()
    result = run_method(model, config.method, y, config.sampler, base,
                        config.R, config.workers)
    seconds = time.perf_counter() - clock

    summary = summarize(result.sample, model.names)
    summary.dump()

    os.makedirs(config.out, exist_ok=True)
    write_samples(os.path.join(config.out, 'samples.csv'), result.sample,
                  model.names)

    meta = dict(result.meta)
    meta['mcle'] = None if result.mcle is None else result.mcle.tolist()
    meta['runtime'] = {'started': started.isoformat(), 'seconds': seconds}

    write_json(os.path.join(config.out, 'summary.json'),
               {'config': config.snapshot(),
                'summary': summary.as_dict(),
                'meta': meta})

    diagnostics = {'model': model.describe(),
                   'rng': streams(config.seed),
                   'godambe': None}

    if result.estimate is not None:
        result.estimate.dump(list(model.names))
        diagnostics['godambe'] = result.estimate.as_dict()

    if hasattr(model, 'exact_posterior') and config.method != 'exact':
        diagnostics['kl_exact'] = {
            'direction': 'KL(exact || approximate)',
            'value': kl_divergence_1d(model.exact_posterior(y),
                                      result.weighted)}

    write_json(os.path.join(config.out, 'diagnostics.json'), diagnostics)

    return 0


def study(config):
    model, _ = config.build_model()
    plan = config.study or {'n_trials': 20, 'methods': [config.method]}

    result = run_study(model, plan['methods'], config.true_theta,
                       config.seed, plan['n_trials'], config.sampler,
                       config.R, config.workers, config.snapshot())

    os.makedirs(config.out, exist_ok=True)
    path = os.path.join(config.out, 'study.csv')
    result.frame().to_csv(path, index=False, float_format='%.17g')
    log.info('Wrote %s', path)

    rows = []
    for method in result.methods:
        means = result.column(method)
        rows.append([method, len(means)] +
                    [float(v) for v in (means.mean(axis=0) if len(means)
                                        else [np.nan] * len(model.names))])
    report.table(['method', 'trials'] + list(model.names), rows)

    return 0


def ingest(stations, maxima, out=None):
    dataset = SpatialDataset.ReadFile(stations, maxima)
    dataset.dump()

    if out is not None:
        os.makedirs(out, exist_ok=True)
        dataset.write(os.path.join(out, 'stations.csv'),
                      os.path.join(out, 'maxima.csv'))

    return 0


def error_report(ex, status):
    data = {'status': status, 'error': type(ex).__name__,
            'message': str(ex)}
    for attr in ('path', 'row', 'column'):
        if getattr(ex, attr, None) is not None:
            data[attr] = getattr(ex, attr)
    return json.dumps(jsonable(data), sort_keys=True)


def fail(ex, status):
    log.error('%s', ex)
    print(error_report(ex, status), file=sys.stderr)
    return status


def main(argv=None):
    parser = Parser(
        prog='abccs',
        description='ABC with rescaled composite score summary statistics.')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='Print debug messages.')
    commands = parser.add_subparsers(dest='command')

    for name, text in (('run', 'Approximate one posterior.'),
                       ('study', 'Repeat inference over simulated datasets.')):
        cmd = commands.add_parser(name, help=text)
        cmd.add_argument('--config', required=True,
                         help='JSON run configuration.')
        cmd.add_argument('--seed', type=int, help='Override the seed.')
        cmd.add_argument('--out', help='Override the output directory.')

    cmd = commands.add_parser('ingest', help='Validate station data files.')
    cmd.add_argument('--stations', required=True, help='station,x,y CSV')
    cmd.add_argument('--maxima', required=True, help='year,<ids...> CSV')
    cmd.add_argument('--out', help='Write normalized copies here.')

    try:
        args = parser.parse_args(argv)

        logging.basicConfig(level=logging.DEBUG if args.verbose
                            else logging.INFO,
                            format='%(levelname)s: %(message)s')

        if args.command == 'ingest':
            return ingest(args.stations, args.maxima, args.out)
        if args.command in ('run', 'study'):
            config = parse_config(args.config, args.seed, args.out)
            return run(config) if args.command == 'run' else study(config)

        raise UsageError('expected one of: run, study, ingest')
    except (UsageError, ConfigError, SchemaError, UnsupportedMethod) as ex:
        return fail(ex, 1)
    except Exception as ex:
        log.debug('Failure', exc_info=True)
        return fail(ex, 2)


if __name__ == '__main__':
    sys.exit(main())

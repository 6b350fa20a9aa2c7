"""
Station coordinates and annual maxima read from a pair of CSV files:

    stations: station,x,y          (one row per station, coordinates in km)
    maxima:   year,<station ids>   (one row per year)
"""

import logging

from collections import namedtuple

import numpy as np
import pandas as pd

from abccs.utils import report


log = logging.getLogger(__name__)


class SchemaError(ValueError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append('row %d' % row)
        if column is not None:
            where.append('column %r' % column)
        if where:
            message = '%s (%s)' % (message, ', '.join(where))
        ValueError.__init__(self, message)


def _read(path, header):
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise SchemaError('%s: file is empty' % path)

    if list(frame.columns[:len(header)]) != header:
        raise SchemaError('%s: header must start with %s' %
                          (path, ','.join(header)), row=1)
    if len(frame) == 0:
        raise SchemaError('%s: no data rows' % path)

    return frame


def _numbers(path, frame, column, kind=float):
    values = []
    for i, cell in enumerate(frame[column]):
        # data rows start at line 2
        try:
            value = kind(cell.strip())
        except ValueError:
            raise SchemaError('%s: non-numeric cell %r' % (path, cell),
                              row=i + 2, column=column)
        if not np.isfinite(value):
            raise SchemaError('%s: non-finite cell %r' % (path, cell),
                              row=i + 2, column=column)
        values.append(value)
    return values


class SpatialDataset(namedtuple('SpatialDataset',
                                'station_ids coords years maxima')):
    @property
    def shape(self):
        return self.maxima.shape

    def dump(self):
        print('%d years x %d stations (%d-%d)' %
              (self.shape[0], self.shape[1], self.years[0], self.years[-1]))
        rows = [[sid, float(x), float(y), float(col.min()),
                 float(col.mean()), float(col.max())]
                for sid, (x, y), col in zip(self.station_ids, self.coords,
                                            self.maxima.T)]
        report.table(['station', 'x', 'y', 'min', 'mean', 'max'], rows)

    def write(self, stations, maxima):
        def fmt(v):
            return np.format_float_positional(v, trim='-')

        pd.DataFrame({'station': self.station_ids,
                      'x': [fmt(x) for x in self.coords[:, 0]],
                      'y': [fmt(y) for y in self.coords[:, 1]]}).to_csv(
            stations, index=False)

        frame = pd.DataFrame([[fmt(v) for v in row] for row in self.maxima],
                             columns=self.station_ids)
        frame.insert(0, 'year', [str(y) for y in self.years])
        frame.to_csv(maxima, index=False)

    @classmethod
    def ReadFile(cls, stations, maxima):
        st = _read(stations, ['station', 'x', 'y'])
        ids = [s.strip() for s in st['station']]

        for i, sid in enumerate(ids):
            if not sid:
                raise SchemaError('%s: empty station id' % stations,
                                  row=i + 2, column='station')
            if sid in ids[:i]:
                raise SchemaError('%s: duplicated station id %r' %
                                  (stations, sid), row=i + 2,
                                  column='station')

        coords = np.column_stack([_numbers(stations, st, 'x'),
                                  _numbers(stations, st, 'y')])

        mx = _read(maxima, ['year'])
        columns = [c.strip() for c in mx.columns[1:]]

        for c in columns:
            if c not in ids:
                raise SchemaError('%s: unknown station id %r' % (maxima, c),
                                  row=1, column=c)
        if len(set(columns)) != len(columns):
            raise SchemaError('%s: duplicated station columns' % maxima,
                              row=1)
        for sid in ids:
            if sid not in columns:
                raise SchemaError('%s: no maxima for station %r' %
                                  (maxima, sid), row=1, column=sid)

        mx.columns = ['year'] + columns
        years = _numbers(maxima, mx, 'year', int)
        values = np.column_stack([_numbers(maxima, mx, sid) for sid in ids])

        log.info('Read %d stations and %d years of maxima.', len(ids),
                 len(years))

        return cls(ids, coords, np.array(years), values)


def ReadFile(stations, maxima):
    return SpatialDataset.ReadFile(stations, maxima)

import numpy as np
import pytest

from numpy.testing import assert_allclose

from abccs.models import SchemaError, SpatialDataset
from abccs.models.spatial import ReadFile


def write_files(tmp_path, stations, maxima):
    st = tmp_path / 'stations.csv'
    mx = tmp_path / 'maxima.csv'
    st.write_text(stations)
    mx.write_text(maxima)
    return str(st), str(mx)


STATIONS = 'station,x,y\nA,0,0\nB,10.5,0\nC,0,-3\n'
MAXIMA = 'year,A,B,C\n1961,30.5,28,41.25\n1962,25,33.75,29\n'


def test_read(tmp_path):
    ds = ReadFile(*write_files(tmp_path, STATIONS, MAXIMA))
    assert ds.station_ids == ['A', 'B', 'C']
    assert_allclose(ds.coords, [[0, 0], [10.5, 0], [0, -3]])
    assert ds.years.tolist() == [1961, 1962]
    assert_allclose(ds.maxima, [[30.5, 28, 41.25], [25, 33.75, 29]])
    assert ds.shape == (2, 3)


def test_columns_follow_station_order(tmp_path):
    maxima = 'year,C,A,B\n1961,41.25,30.5,28\n'
    ds = ReadFile(*write_files(tmp_path, STATIONS, maxima))
    assert_allclose(ds.maxima, [[30.5, 28, 41.25]])


def test_write_preserves_values(tmp_path):
    ds = ReadFile(*write_files(tmp_path, STATIONS, MAXIMA))
    out = tmp_path / 'out'
    out.mkdir()
    ds.write(str(out / 'stations.csv'), str(out / 'maxima.csv'))

    again = SpatialDataset.ReadFile(str(out / 'stations.csv'),
                                    str(out / 'maxima.csv'))
    assert again.station_ids == ds.station_ids
    assert np.array_equal(again.coords, ds.coords)
    assert np.array_equal(again.maxima, ds.maxima)
    assert (out / 'maxima.csv').read_text().startswith('year,A,B,C\n1961,')


def test_unknown_station(tmp_path):
    maxima = 'year,A,B,D\n1961,1,2,3\n'
    with pytest.raises(SchemaError) as info:
        ReadFile(*write_files(tmp_path, STATIONS, maxima))
    assert info.value.row == 1
    assert info.value.column == 'D'


def test_duplicate_station(tmp_path):
    stations = 'station,x,y\nA,0,0\nB,1,1\nA,2,2\n'
    with pytest.raises(SchemaError) as info:
        ReadFile(*write_files(tmp_path, stations, MAXIMA))
    assert info.value.row == 4
    assert 'duplicated' in str(info.value)


def test_missing_station_column(tmp_path):
    maxima = 'year,A,B\n1961,1,2\n'
    with pytest.raises(SchemaError) as info:
        ReadFile(*write_files(tmp_path, STATIONS, maxima))
    assert info.value.column == 'C'


@pytest.mark.parametrize('cell', ['abc', 'nan', '', 'inf'])
def test_bad_cell(tmp_path, cell):
    maxima = 'year,A,B,C\n1961,1,2,3\n1962,4,%s,6\n' % cell
    with pytest.raises(SchemaError) as info:
        ReadFile(*write_files(tmp_path, STATIONS, maxima))
    assert info.value.row == 3
    assert info.value.column == 'B'


def test_bad_header(tmp_path):
    with pytest.raises(SchemaError):
        ReadFile(*write_files(tmp_path, 'id,x,y\nA,0,0\n', MAXIMA))


def test_empty_file(tmp_path):
    with pytest.raises(SchemaError):
        ReadFile(*write_files(tmp_path, '', MAXIMA))


def test_full_network_shape(tmp_path, gen):
    ids = ['S%02d' % i for i in range(79)]
    coords = gen.uniform(0, 300, (79, 2))
    stations = 'station,x,y\n' + ''.join(
        '%s,%.17g,%.17g\n' % (sid, x, y) for sid, (x, y) in zip(ids, coords))
    maxima = 'year,' + ','.join(ids) + '\n' + ''.join(
        '%d,' % (1961 + t) + ','.join('%.17g' % v for v in row) + '\n'
        for t, row in enumerate(gen.gamma(5.0, 10.0, (49, 79))))

    ds = ReadFile(*write_files(tmp_path, stations, maxima))
    assert ds.shape == (49, 79)
    assert_allclose(ds.coords, coords, rtol=1e-15)

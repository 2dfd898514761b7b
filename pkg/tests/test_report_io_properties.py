"""
Property-based tests for report and artifact I/O.

**Feature: thin-set-uncertainty-lab, Property 22: Report Files**
"""

import pytest
import numpy as np
import pandas as pd
import os
import sys

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from analysis.covering import greedy_cover
from analysis.spectral import GridFunction
from data.report_io import (
    ReportWriter, rows_to_frame, write_csv, read_report, save_grid_function_csv,
    load_grid_function_csv, save_grid_function_npz, load_grid_function_npz, cover_dump,
    load_set_mask
)
from models.data_models import CONTRACTION_SCHEMA, COVER_DUMP_SCHEMA, INTERVAL_SET_SCHEMA
from models.radius import constant_radius
from models.sets import IntervalSet, GridMaskSet


ROWS = [
    {'beta': 0.5, 'p': 2.0, 'delta': 0.1, 'eps_E': 0.3, 'eps_Sigma': 0.25, 'bound_chain_value': 0.9},
    {'delta': 0.05, 'beta': 0.5, 'p': 2.0, 'eps_E': 0.2, 'eps_Sigma': 0.2, 'bound_chain_value': 0.95},
]


class TestReportProperties:
    """CSV reports carry the config hash and follow the schema order."""

    def test_rows_are_stamped_and_ordered(self):
        df = rows_to_frame(ROWS, CONTRACTION_SCHEMA, 'deadbeef0123')
        assert list(df.columns) == CONTRACTION_SCHEMA
        assert (df['config_hash'] == 'deadbeef0123').all()
        assert df['delta'].tolist() == [0.1, 0.05]

    def test_missing_column_is_refused(self):
        with pytest.raises(ValueError, match="missing columns"):
            rows_to_frame([{'beta': 0.5}], CONTRACTION_SCHEMA, 'h')

    def test_writes_are_byte_identical(self, tmp_path):
        df = rows_to_frame(ROWS, CONTRACTION_SCHEMA, 'h')
        first = write_csv(df, str(tmp_path / 'a' / 'report.csv'))
        second = write_csv(df, str(tmp_path / 'b' / 'report.csv'))
        with open(first, 'rb') as a, open(second, 'rb') as b:
            content = a.read()
            assert content == b.read()
        assert b'\r\n' not in content
        assert content.startswith(b'config_hash,p,delta')

    def test_read_back(self, tmp_path):
        writer = ReportWriter(str(tmp_path), 'cafe')
        writer.write_rows('contraction', ROWS, CONTRACTION_SCHEMA)
        df = read_report(str(tmp_path / 'contraction.csv'), CONTRACTION_SCHEMA)
        assert len(df) == 2
        assert df['eps_E'].tolist() == pytest.approx([0.3, 0.2])
        assert writer.written == [str(tmp_path / 'contraction.csv')]

    def test_missing_report(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_report(str(tmp_path / 'absent.csv'), CONTRACTION_SCHEMA)

    def test_writer_reraises(self, tmp_path):
        writer = ReportWriter(str(tmp_path), 'cafe')
        with pytest.raises(ValueError):
            writer.write_rows('contraction', [{'beta': 1.0}], CONTRACTION_SCHEMA)
        assert writer.written == []


class TestGridFunctionFiles:
    """Grid functions survive CSV (d = 1) and .npz (any d)."""

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        values = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        f = GridFunction(values, (8.0,))
        path = save_grid_function_csv(f, str(tmp_path / 'f.csv'))
        g = load_grid_function_csv(path)
        assert g.extent == pytest.approx(f.extent)
        assert g.origin == pytest.approx(f.origin)
        assert np.allclose(g.values, f.values, rtol=1e-10, atol=1e-12)

    def test_csv_refuses_higher_dimensions(self, tmp_path):
        f = GridFunction(np.zeros((8, 8)), (4.0, 4.0))
        with pytest.raises(ValueError, match="npz"):
            save_grid_function_csv(f, str(tmp_path / 'f.csv'))

    def test_csv_refuses_uneven_samples(self, tmp_path):
        path = str(tmp_path / 'bad.csv')
        pd.DataFrame({'x': [0.0, 1.0, 3.0, 4.0], 're': [0.0] * 4, 'im': [0.0] * 4}).to_csv(path, index=False)
        with pytest.raises(ValueError, match="uniformly"):
            load_grid_function_csv(path)

    def test_npz_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        f = GridFunction(rng.standard_normal((16, 8)), (4.0, 2.0), domain='frequency')
        path = save_grid_function_npz(f, str(tmp_path / 'f'))
        assert path.endswith('.npz')
        g = load_grid_function_npz(path)
        assert g.domain == 'frequency'
        assert g.extent == (4.0, 2.0)
        assert np.array_equal(g.values, f.values)

    def test_writer_picks_format(self, tmp_path):
        writer = ReportWriter(str(tmp_path), 'h')
        one = writer.write_grid_function('f1', GridFunction(np.ones(16), (2.0,)))
        two = writer.write_grid_function('f2', GridFunction(np.ones((4, 4)), (2.0,)))
        assert one.endswith('.csv') and two.endswith('.npz')


class TestArtifactFiles:
    """Sets and covers written next to the reports."""

    def test_interval_set_csv(self, tmp_path):
        writer = ReportWriter(str(tmp_path), 'h')
        target = IntervalSet([(0.0, 1.0), (2.0, 2.5)])
        path = writer.write_set('E', target)
        df = pd.read_csv(path)
        assert list(df.columns) == INTERVAL_SET_SCHEMA
        assert IntervalSet.from_frame(df).measure() == pytest.approx(1.5)

    def test_grid_mask_npz(self, tmp_path):
        writer = ReportWriter(str(tmp_path), 'h')
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:4, 5] = True
        target = GridMaskSet(mask, (-1.0, -1.0), (0.25, 0.25))
        loaded = load_set_mask(writer.write_set('Sigma', target))
        assert np.array_equal(loaded.mask, mask)
        assert loaded.spacing == (0.25, 0.25)
        assert loaded.measure() == pytest.approx(target.measure())

    def test_cover_dump_flags_selection(self, tmp_path):
        cover = greedy_cover(0.0, 1.0, constant_radius(1.0))
        df = cover_dump(cover)
        assert list(df.columns) == COVER_DUMP_SCHEMA
        assert len(df) == cover.candidate_count
        assert int(df['selected'].sum()) == len(cover.radii)
        path = ReportWriter(str(tmp_path), 'h').write_cover('cover', cover)
        assert len(pd.read_csv(path)) == cover.candidate_count

    def test_array_bundle(self, tmp_path):
        path = ReportWriter(str(tmp_path), 'h').write_array('profile', t=np.arange(4.0), p=np.ones(4))
        with np.load(path) as data:
            assert sorted(data.files) == ['p', 't']


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

"""
Report and artifact I/O.

CSV is the report format: a header row, '.' decimals, floats written with
twelve significant digits, and a config_hash column on every row so that
outputs can be traced back to the configuration that produced them. Grid
functions are written as CSV in d = 1 and as .npz in any dimension.
"""

from typing import Dict, List, Sequence
import logging
import os

import numpy as np
import pandas as pd

from analysis.mollifier import MollifierSystem
from analysis.spectral import GridFunction
from models.data_models import (
    CoverResult, validate_dataframe_schema, validate_report_row,
    COVER_DUMP_SCHEMA, GRID_FUNCTION_SCHEMA
)
from models.sets import GridMaskSet, MeasurableSet

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12g'


def rows_to_frame(rows: Sequence[Dict], schema: Sequence[str], config_hash: str,
                  data_type: str = "Report") -> pd.DataFrame:
    """Stamp rows with the config hash and order them by schema."""
    stamped = [validate_report_row(dict(row, config_hash=config_hash), list(schema), data_type) for row in rows]
    return pd.DataFrame(stamped, columns=list(schema))


def write_csv(df: pd.DataFrame, file_path: str) -> str:
    """Write a frame with the report float format and Unix line endings."""
    directory = os.path.dirname(file_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    df.to_csv(file_path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return file_path


def read_report(file_path: str, schema: Sequence[str], data_type: str = "Report") -> pd.DataFrame:
    """
    Load a report CSV and check its columns.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If columns are missing or the report is empty
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError("Report not found: {}".format(file_path))
    df = pd.read_csv(file_path)
    validate_dataframe_schema(df, list(schema), data_type)
    return df


def save_grid_function_csv(f: GridFunction, file_path: str) -> str:
    """Write a 1-D grid function as columns x, re, im."""
    if f.dimension != 1:
        raise ValueError("CSV export is for d = 1 grid functions; use save_grid_function_npz for d = {}".format(
            f.dimension))
    df = pd.DataFrame({'x': f.axes[0], 're': f.values.real, 'im': f.values.imag})
    return write_csv(df, file_path)


def load_grid_function_csv(file_path: str, domain: str = 'space') -> GridFunction:
    """
    Read a 1-D grid function written by save_grid_function_csv.

    The extent is N h with h the (uniform) sample spacing.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the schema is wrong or the samples are not uniform
    """
    df = read_report(file_path, GRID_FUNCTION_SCHEMA, "Grid function")
    x = df['x'].to_numpy(dtype=float)
    if x.size < 2:
        raise ValueError("A grid function needs at least two samples")
    steps = np.diff(x)
    h = float(steps.mean())
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-12 * max(abs(h), 1.0)):
        raise ValueError("Samples in {} are not uniformly spaced".format(file_path))
    values = df['re'].to_numpy(dtype=float) + 1j * df['im'].to_numpy(dtype=float)
    return GridFunction(values, (h * x.size,), (float(x[0]),), domain=domain)


def save_grid_function_npz(f: GridFunction, file_path: str) -> str:
    """Write samples, extents, origins and domain of a grid function in any dimension."""
    directory = os.path.dirname(file_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    np.savez(file_path, values=f.values, extent=np.asarray(f.extent), origin=np.asarray(f.origin),
             domain=f.domain)
    return file_path if file_path.endswith('.npz') else file_path + '.npz'


def load_grid_function_npz(file_path: str) -> GridFunction:
    """Read a grid function written by save_grid_function_npz."""
    if not os.path.exists(file_path):
        raise FileNotFoundError("Grid function file not found: {}".format(file_path))
    with np.load(file_path) as data:
        return GridFunction(data['values'], tuple(data['extent'].tolist()), tuple(data['origin'].tolist()),
                            domain=str(data['domain']))


def cover_dump(cover: CoverResult) -> pd.DataFrame:
    """Every candidate ball with a flag for the selected ones."""
    if cover.candidate_centers is None or cover.candidate_radii is None:
        centers, radii = np.asarray(cover.centers), np.asarray(cover.radii)
        selected = np.ones(len(radii), dtype=bool)
    else:
        centers, radii = np.asarray(cover.candidate_centers), np.asarray(cover.candidate_radii)
        selected = np.zeros(len(radii), dtype=bool)
        selected[list(cover.selected_index)] = True
    centers = centers.reshape(len(radii), -1)
    return pd.DataFrame({
        'center': [';'.join('{:.12g}'.format(v) for v in c) for c in centers],
        'radius': radii,
        'selected': selected,
    }, columns=COVER_DUMP_SCHEMA)


class ReportWriter:
    """
    Writes the reports and artifacts of one run into an output directory.
    """

    def __init__(self, output_dir: str, config_hash: str):
        """
        Initialize the writer.

        Args:
            output_dir: Directory receiving every file of the run
            config_hash: Hash stamped on every report row
        """
        self.output_dir = output_dir
        self.config_hash = config_hash
        self.written: List[str] = []

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def write_rows(self, name: str, rows: Sequence[Dict], schema: Sequence[str]) -> pd.DataFrame:
        """
        Write report rows to <output_dir>/<name>.csv.

        Returns:
            The frame that was written

        Raises:
            ValueError: If a row lacks a schema column
        """
        try:
            df = rows_to_frame(rows, schema, self.config_hash, name)
            path = write_csv(df, self._path(name + '.csv'))
        except Exception as e:
            logger.error("Error writing report {}: {}".format(name, str(e)))
            raise
        self.written.append(path)
        logger.info("Wrote {} rows to {}".format(len(df), path))
        return df

    def write_set(self, name: str, target: MeasurableSet) -> str:
        """Interval and box sets as CSV, grid masks as .npz."""
        if isinstance(target, GridMaskSet):
            path = self._path(name + '.npz')
            os.makedirs(self.output_dir, exist_ok=True)
            np.savez(path, mask=target.mask, origin=np.asarray(target.origin), spacing=np.asarray(target.spacing))
        else:
            path = write_csv(target.to_frame(), self._path(name + '.csv'))
        self.written.append(path)
        logger.info("Wrote set {!r} to {}".format(target, path))
        return path

    def write_grid_function(self, name: str, f: GridFunction) -> str:
        if f.dimension == 1:
            path = save_grid_function_csv(f, self._path(name + '.csv'))
        else:
            path = save_grid_function_npz(f, self._path(name + '.npz'))
        self.written.append(path)
        return path

    def write_cover(self, name: str, cover: CoverResult) -> str:
        path = write_csv(cover_dump(cover), self._path(name + '.csv'))
        self.written.append(path)
        return path

    def write_phi(self, name: str, system: MollifierSystem) -> str:
        """The phi table of a built mollifier system, for reproducing kernel runs."""
        path = self._path(name + '.npz')
        os.makedirs(self.output_dir, exist_ok=True)
        system.export_phi(path)
        self.written.append(path)
        return path

    def write_array(self, name: str, **arrays: np.ndarray) -> str:
        """Plot-ready arrays as one .npz file."""
        path = self._path(name + '.npz')
        os.makedirs(self.output_dir, exist_ok=True)
        np.savez(path, **arrays)
        self.written.append(path)
        return path


def load_set_mask(file_path: str) -> GridMaskSet:
    """Read a grid-mask set written by ReportWriter.write_set."""
    if not os.path.exists(file_path):
        raise FileNotFoundError("Set file not found: {}".format(file_path))
    with np.load(file_path) as data:
        return GridMaskSet(data['mask'], data['origin'].tolist(), data['spacing'].tolist())

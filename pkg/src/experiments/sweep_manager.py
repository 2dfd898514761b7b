"""
Sweep orchestration: a joblib worker pool over sweep points.

Results always come back in the order of the points, so reports do not
depend on the worker count. File writes stay in the calling process.
"""

from typing import Callable, Dict, List, Sequence
import logging
import time

from joblib import Parallel, delayed

logger = logging.getLogger(__name__)


class SweepManager:
    """
    Runs named sweeps and keeps a record of what ran.
    """

    def __init__(self, n_jobs: int = 1):
        """
        Initialize the manager.

        Args:
            n_jobs: joblib workers; 1 runs the points in the calling process
        """
        if n_jobs < 1:
            raise ValueError("n_jobs must be at least 1, got {}".format(n_jobs))
        self.n_jobs = n_jobs
        self.completed: Dict[str, int] = {}
        self.durations: Dict[str, float] = {}

    def run(self, label: str, func: Callable, points: Sequence) -> List:
        """
        Evaluate func at every point.

        Args:
            label: Sweep name for the log and the record
            func: Callable of one point
            points: Sweep points

        Returns:
            Results in point order

        Raises:
            ValueError: If there are no points
        """
        points = list(points)
        if not points:
            raise ValueError("Sweep '{}' has no points".format(label))
        start = time.perf_counter()
        try:
            if self.n_jobs == 1:
                results = [func(point) for point in points]
            else:
                results = Parallel(n_jobs=min(self.n_jobs, len(points)))(delayed(func)(point) for point in points)
        except Exception as e:
            logger.error("Sweep {} failed: {}".format(label, str(e)))
            raise
        self.completed[label] = len(results)
        self.durations[label] = time.perf_counter() - start
        logger.info("Sweep {}: {} points with {} worker(s) in {:.2f} s".format(
            label, len(results), self.n_jobs, self.durations[label]))
        return results

    def get_summary(self) -> str:
        if not self.completed:
            return "No sweeps run"
        return "; ".join("{}: {} points".format(label, count) for label, count in self.completed.items())

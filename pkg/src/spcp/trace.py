"""Per-iteration solve records.

A trace row is (iteration, wall seconds, objective, residual, relative
error vs a reference). Wall time excludes the cost of evaluating the
reference error: the clock is paused while ``error_fn`` runs, so error
tracking does not distort timing comparisons.
"""

import csv
import time

__all__ = ["SolveTrace"]

CSV_HEADER = ("iter", "seconds", "objective", "residual", "rel_error")


class SolveTrace:
    """Accumulates per-iteration rows and run metadata.

    Parameters
    ----------
    error_fn : callable, optional
        Maps the solver's current point (passed through ``record(...,
        point=...)``) to a relative error vs a reference solution. Its
        runtime is excluded from the seconds column.
    """

    def __init__(self, error_fn=None):
        self.error_fn = error_fn
        self.rows = []
        self.converged = False
        self.message = ""
        self.meta = {}
        self._t0 = time.perf_counter()
        self._off_clock = 0.0

    def restart_clock(self):
        self._t0 = time.perf_counter()
        self._off_clock = 0.0

    def elapsed(self):
        return time.perf_counter() - self._t0 - self._off_clock

    def record(self, iteration, objective, residual, point=None):
        seconds = self.elapsed()
        if self.rows and seconds < self.rows[-1][1]:
            seconds = self.rows[-1][1]
        rel_error = None
        if self.error_fn is not None and point is not None:
            pause = time.perf_counter()
            rel_error = float(self.error_fn(point))
            self._off_clock += time.perf_counter() - pause
        self.rows.append((int(iteration), seconds, float(objective),
                          float(residual), rel_error))

    @property
    def iterations(self):
        return self.rows[-1][0] if self.rows else 0

    def column(self, name):
        idx = CSV_HEADER.index(name)
        return [row[idx] for row in self.rows]

    def finish(self, converged, message=""):
        self.converged = bool(converged)
        self.message = message
        return self

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for it, sec, obj, res, err in self.rows:
                writer.writerow([
                    it,
                    f"{sec:.9f}",
                    f"{obj:.17g}",
                    f"{res:.17g}",
                    "" if err is None else f"{err:.17g}",
                ])

    def first_time_below(self, threshold):
        """Earliest recorded wall time at which rel_error <= threshold."""
        for _, sec, _, _, err in self.rows:
            if err is not None and err <= threshold:
                return sec
        return None

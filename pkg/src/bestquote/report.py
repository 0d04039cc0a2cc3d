"""Model-comparison tables and plot-ready data files."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .dists import DiscreteDist, l2_distance
from .errors import AlignmentError, ParameterError


@dataclass
class CompareReport:
    """L2 distances, models by instruments, with averages and ranks.

    Rank 1 is the smallest average distance; ties go to the lexicographically
    smaller model id.
    """

    models: list
    instruments: list
    distances: np.ndarray

    @property
    def averages(self) -> np.ndarray:
        return np.array([math.fsum(row) / len(row) for row in self.distances])

    @property
    def ranks(self) -> np.ndarray:
        avg = self.averages
        order = sorted(range(len(self.models)), key=lambda i: (avg[i], self.models[i]))
        ranks = np.empty(len(order), dtype=int)
        ranks[order] = np.arange(1, len(order) + 1)
        return ranks

    def rows(self):
        avg, ranks = self.averages, self.ranks
        for i, m in enumerate(self.models):
            yield m, list(self.distances[i]), float(avg[i]), int(ranks[i])

    def to_text(self) -> str:
        head = ["Model", *self.instruments, "Average", "Rank"]
        body = [[m, *(f"{d:.6f}" for d in ds), f"{a:.6f}", str(r)] for m, ds, a, r in self.rows()]
        widths = [max(len(row[j]) for row in [head, *body]) for j in range(len(head))]
        out = io.StringIO()
        for row in [head, *body]:
            out.write("  ".join(c.ljust(w) if j == 0 else c.rjust(w) for j, (c, w) in enumerate(zip(row, widths))))
            out.write("\n")
        return out.getvalue()

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(["model", *self.instruments, "average", "rank"]) + "\n")
        for m, ds, a, r in self.rows():
            out.write(",".join([m, *(repr(float(d)) for d in ds), repr(a), str(r)]) + "\n")
        return out.getvalue()


def _check_volume_law(name: str, d: DiscreteDist):
    if d.offset == 0 and d.pmf(0) > 0:
        raise AlignmentError(f"{name}: volume laws live on {{1, 2, ...}} but this one has mass at 0")


def compare(empirical: dict, models: dict) -> CompareReport:
    """Tabulate ``l2_distance(models[m][inst], empirical[inst])``.

    ``empirical`` maps instrument to distribution; ``models`` maps model id to
    a mapping of the same instruments.
    """
    if len(models) < 2:
        raise ParameterError("need at least two model outputs to rank")
    instruments = list(empirical)
    for inst, d in empirical.items():
        _check_volume_law(f"empirical {inst}", d)
    names = list(models)
    dist = np.zeros((len(names), len(instruments)))
    for i, m in enumerate(names):
        missing = set(instruments) - set(models[m])
        if missing:
            raise AlignmentError(f"model {m} has no output for {sorted(missing)}")
        for j, inst in enumerate(instruments):
            _check_volume_law(f"model {m} ({inst})", models[m][inst])
            dist[i, j] = l2_distance(models[m][inst], empirical[inst])
    return CompareReport(names, instruments, dist)


def plot_data(empirical: DiscreteDist, models: dict, body_quantile: float = 0.99) -> tuple[str, str]:
    """Whitespace-separated columns for a linear body view and a log-scale tail view.

    The body runs up to the empirical ``body_quantile``; the tail starts at the
    empirical median and keeps only rows where every column is positive.
    """
    names = list(models)
    stop = max([empirical.stop] + [d.stop for d in models.values()])
    x = np.arange(1, stop)
    cols = [empirical.dense(1, stop)] + [models[m].dense(1, stop) for m in names]
    cdf = np.cumsum(cols[0])
    q_hi = int(np.searchsorted(cdf, body_quantile)) + 1
    q_med = int(np.searchsorted(cdf, 0.5)) + 1
    head = "# volume empirical " + " ".join(names) + "\n"

    def render(mask):
        out = io.StringIO()
        out.write(head)
        for k in np.nonzero(mask)[0]:
            out.write(f"{x[k]} " + " ".join(f"{c[k]:.10g}" for c in cols) + "\n")
        return out.getvalue()

    body = render(x <= q_hi)
    tail = render((x >= q_med) & np.all(np.array(cols) > 0, axis=0))
    return body, tail

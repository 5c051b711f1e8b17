"""Transmission map over ground-state population transfer and trapping ratio."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bloch import SolverError
from .config import ConfigError, SystemConfig
from .propagation import WINDOW_SIGMAS, propagate

log = logging.getLogger(__name__)

LEVELS = (0.50, 0.25, 0.01)
DEFAULT_GS = (1e-6, 1e-1)
DEFAULT_TRAP = (0.5, 0.999)
DEFAULT_STEPS = (24, 24)
MAX_FAIL_FRACTION = 0.10
RATIO_SLACK = 1e-3

# cell flags
OK, SOLVER_FAILED, EDGE_PEAK, GRID_REJECTED = "ok", "solver", "edge", "grid"


class ScanError(RuntimeError):
    """Too many cells of a scan failed."""


@dataclass
class TransmissionMap:
    """Peak ratios on a (gamma_s, trap_ratio) grid.

    ``ratio[i, j]`` belongs to ``gs[i]`` and ``trap[j]``; flagged cells hold NaN.
    ``contours`` maps each level to a list of polylines of (gs, trap) vertices.
    """

    gs: np.ndarray
    trap: np.ndarray
    ratio: np.ndarray
    flags: np.ndarray
    contours: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.ratio.shape

    def index_of(self, gs: float, trap: float) -> tuple[float, float]:
        """Fractional grid indices of a parameter point (gs axis is logarithmic)."""
        lg = np.log10(self.gs)
        i = np.interp(math.log10(gs), lg, np.arange(len(lg)), left=np.nan, right=np.nan)
        j = np.interp(trap, self.trap, np.arange(len(self.trap)), left=np.nan, right=np.nan)
        return float(i), float(j)

    def to_params(self, path) -> np.ndarray:
        """Map fractional (i, j) indices to (gs, trap) values."""
        path = np.asarray(path, dtype=float).reshape(-1, 2)
        lg = np.log10(self.gs)
        n_i, n_j = len(self.gs), len(self.trap)
        gs = 10 ** np.interp(path[:, 0], np.arange(n_i), lg)
        tr = np.interp(path[:, 1], np.arange(n_j), self.trap)
        return np.column_stack([gs, tr])

    def index_contours(self, levels=LEVELS):
        return {lv: extract_contours(self.ratio, lv) for lv in levels}


def scan_axes(gs_range=DEFAULT_GS, trap_range=DEFAULT_TRAP, steps=DEFAULT_STEPS):
    gs = np.logspace(math.log10(gs_range[0]), math.log10(gs_range[1]), steps[0])
    trap = np.linspace(trap_range[0], trap_range[1], steps[1])
    return gs, trap


def cell_config(base: SystemConfig, gs: float, trap: float) -> SystemConfig:
    """Full master-equation configuration of one scan cell."""
    return base.replace(gamma_s=float(gs), trap_ratio=float(trap),
                        use_linearized_eom=False, trapping_on=True)


def transmitted_peak(config: SystemConfig) -> tuple[float, str]:
    """Peak ratio of the transmitted slice and a status flag."""
    try:
        record = propagate(config, store_every=config.n_z - 1)
    except ConfigError as exc:
        log.warning("cell rejected: %s", exc)
        return math.nan, GRID_REJECTED
    except SolverError as exc:
        log.warning("cell failed: %s", exc)
        return math.nan, SOLVER_FAILED
    amp = np.abs(record.output())
    k = int(np.argmax(amp))
    tau = record.tau
    margin = WINDOW_SIGMAS * config.probe_width / 2.0
    if tau[k] - tau[0] < margin or tau[-1] - tau[k] < margin:
        return math.nan, EDGE_PEAK
    y0, y1, y2 = amp[k - 1], amp[k], amp[k + 1]
    denom = y0 - 2.0 * y1 + y2
    peak = y1 - 0.125 * (y0 - y2) ** 2 / denom if denom < 0 else y1
    return float(peak / config.probe_amp), OK


def _run_cell(args):
    index, config = args
    return index, transmitted_peak(config)


def default_workers() -> int:
    value = os.environ.get("SIM_WORKERS")
    if value:
        try:
            n = int(value)
        except ValueError:
            raise ConfigError([f"SIM_WORKERS={value!r}: must be a positive integer"]) from None
        if n < 1:
            raise ConfigError([f"SIM_WORKERS={value!r}: must be a positive integer"])
        return n
    return 1


def run_scan(base: SystemConfig, gs_range=DEFAULT_GS, trap_range=DEFAULT_TRAP,
             steps=DEFAULT_STEPS, workers: int | None = None, levels=LEVELS,
             progress=None) -> TransmissionMap:
    """Propagate one pulse per grid cell and collect the transmitted peak ratios.

    Parameters
    ----------
    base : SystemConfig
        Configuration whose ``gamma_s`` and ``trap_ratio`` are overridden per cell.
    gs_range, trap_range : tuple of float
        Axis limits; the gamma_s axis is log-spaced, the trap axis linear.
    steps : tuple of int
        Number of samples along (gamma_s, trap_ratio).
    workers : int, optional
        Process count; defaults to ``SIM_WORKERS`` or 1.
    progress : callable, optional
        Called as ``progress(done, total)`` after each cell.

    Raises
    ------
    ScanError
        When more than 10% of the cells fail.
    """
    if gs_range[0] <= 0 or gs_range[1] < gs_range[0]:
        raise ConfigError([f"gs range {gs_range}: need 0 < gs_min <= gs_max"])
    if not 0 <= trap_range[0] <= trap_range[1] < 1:
        raise ConfigError([f"trap range {trap_range}: need 0 <= trap_min <= trap_max < 1"])
    if min(steps) < 2:
        raise ConfigError([f"steps {steps}: need at least 2 samples per axis"])
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ConfigError([f"workers={workers}: must be >= 1"])
    gs, trap = scan_axes(gs_range, trap_range, steps)
    # Reject an invalid base before spending time on cells.
    cell_config(base, gs[0], trap[0])
    tasks = [((i, j), cell_config(base, gs[i], trap[j]))
             for i in range(len(gs)) for j in range(len(trap))]
    ratio = np.full((len(gs), len(trap)), np.nan)
    flags = np.full((len(gs), len(trap)), OK, dtype=object)

    def store(result, done):
        (i, j), (value, flag) = result
        ratio[i, j] = value
        flags[i, j] = flag
        if progress:
            progress(done, len(tasks))

    if workers == 1:
        for done, task in enumerate(tasks, 1):
            store(_run_cell(task), done)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for done, result in enumerate(pool.map(_run_cell, tasks, chunksize=1), 1):
                store(result, done)

    failed = int(np.sum(flags != OK))
    if failed > MAX_FAIL_FRACTION * len(tasks):
        raise ScanError(f"{failed} of {len(tasks)} scan cells failed")
    tmap = TransmissionMap(gs, trap, ratio, flags)
    tmap.contours = {lv: [tmap.to_params(p) for p in extract_contours(ratio, lv)]
                     for lv in levels}
    return tmap


# --------------------------------------------------------------------------
# marching squares

# corners of cell (i, j) in cyclic order and the edges between them
_CORNERS = ((0, 0), (0, 1), (1, 1), (1, 0))
_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))
# the two edges adjacent to each corner
_CORNER_EDGES = ((3, 0), (0, 1), (1, 2), (2, 3))


def _edge_point(data, level, a, b):
    """Crossing of ``level`` on the grid edge between index pairs ``a`` and ``b``."""
    va, vb = data[a], data[b]
    t = (level - va) / (vb - va)
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def _cell_segments(data, level, i, j):
    pts = [(i + di, j + dj) for di, dj in _CORNERS]
    vals = [data[p] for p in pts]
    if not all(np.isfinite(vals)):
        return []
    above = [v >= level for v in vals]
    cut = [k for k, (c0, c1) in enumerate(_EDGES) if above[c0] != above[c1]]
    if not cut:
        return []

    def key(e):
        a, b = pts[_EDGES[e][0]], pts[_EDGES[e][1]]
        return (a, b) if a < b else (b, a)

    if len(cut) == 2:
        return [(key(cut[0]), key(cut[1]))]
    # saddle: isolate the corners whose side differs from the cell average
    centre_above = sum(vals) / 4.0 >= level
    return [(key(_CORNER_EDGES[k][0]), key(_CORNER_EDGES[k][1]))
            for k in range(4) if above[k] != centre_above]


def extract_contours(data, level: float) -> list[np.ndarray]:
    """Polylines of ``data == level`` in fractional index coordinates.

    Edge crossings are linearly interpolated; saddle cells are split by the
    average of their four corners. Cells with a NaN corner are skipped. Closed
    curves repeat their first vertex at the end.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or min(data.shape) < 2:
        raise ValueError("contour extraction needs a 2-D grid of at least 2x2")
    finite = data[np.isfinite(data)]
    if finite.size == 0 or not finite.min() <= level <= finite.max():
        return []
    segments = []
    for i in range(data.shape[0] - 1):
        for j in range(data.shape[1] - 1):
            segments.extend(_cell_segments(data, level, i, j))
    links: dict = {}
    for n, (a, b) in enumerate(segments):
        links.setdefault(a, []).append(n)
        links.setdefault(b, []).append(n)
    used = [False] * len(segments)

    def walk(start_edge, seg):
        chain = [start_edge]
        edge = start_edge
        while seg is not None and not used[seg]:
            used[seg] = True
            a, b = segments[seg]
            edge = b if a == edge else a
            chain.append(edge)
            seg = next((s for s in links[edge] if not used[s]), None)
        return chain

    lines = []
    # open curves start at edges used by a single segment
    for e, segs in links.items():
        if len(segs) == 1 and not used[segs[0]]:
            lines.append(walk(e, segs[0]))
    for n in range(len(segments)):
        if not used[n]:
            lines.append(walk(segments[n][0], n))
    return [np.array([_edge_point(data, level, *e) for e in line]) for line in lines]


# --------------------------------------------------------------------------
# structural checks


def monotonicity_violations(ratio, tol: float = 0.0) -> list[str]:
    """Places where the map increases along either axis (NaN cells skipped)."""
    out = []
    r = np.asarray(ratio, dtype=float)
    for axis, name in ((0, "gamma_s"), (1, "trap_ratio")):
        d = np.diff(r, axis=axis)
        bad = np.argwhere(np.isfinite(d) & (d > tol))
        for i, j in bad:
            nxt = (i + 1, j) if axis == 0 else (i, j + 1)
            out.append(f"ratio increases along {name} from {(int(i), int(j))} to "
                       f"{tuple(int(x) for x in nxt)} by {d[i, j]:.3g}")
    return out


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def contours_cross(lines_a, lines_b) -> bool:
    """True if any segment of one polyline set properly crosses the other."""
    for la in lines_a:
        for lb in lines_b:
            for k in range(len(la) - 1):
                for m in range(len(lb) - 1):
                    if _segments_cross(la[k], la[k + 1], lb[m], lb[m + 1]):
                        return True
    return False


def nesting_violations(ratio, levels=LEVELS, refine: int = 4) -> list[str]:
    """Check that super-level regions are nested and their contours never cross.

    Region containment is tested on a bilinear refinement of the map.
    """
    r = np.asarray(ratio, dtype=float)
    levels = sorted(levels, reverse=True)
    out = []
    fine = _bilinear_refine(r, refine)
    for high, low in zip(levels[:-1], levels[1:]):
        # ratio >= high must lie inside ratio >= low
        if np.any((fine >= high) & ~(fine >= low)):
            out.append(f"region ratio >= {high} is not inside ratio >= {low}")
        if contours_cross(extract_contours(r, high), extract_contours(r, low)):
            out.append(f"contours {high} and {low} cross")
    return out


def _bilinear_refine(r, k):
    ni, nj = r.shape
    x = np.linspace(0, ni - 1, (ni - 1) * k + 1)
    y = np.linspace(0, nj - 1, (nj - 1) * k + 1)
    i0 = np.minimum(x.astype(int), ni - 2)
    j0 = np.minimum(y.astype(int), nj - 2)
    fx = (x - i0)[:, None]
    fy = (y - j0)[None, :]
    a = r[i0][:, j0]
    b = r[i0 + 1][:, j0]
    c = r[i0][:, j0 + 1]
    d = r[i0 + 1][:, j0 + 1]
    return a * (1 - fx) * (1 - fy) + b * fx * (1 - fy) + c * (1 - fx) * fy + d * fx * fy


def chebyshev_distance(point, lines) -> float:
    """Smallest L-infinity distance from ``point`` to a set of polylines."""
    px, py = point
    best = math.inf
    t = np.linspace(0.0, 1.0, 2001)
    for line in lines:
        line = np.asarray(line, dtype=float)
        if len(line) == 1:
            best = min(best, max(abs(line[0, 0] - px), abs(line[0, 1] - py)))
        for a, b in zip(line[:-1], line[1:]):
            xs = a[0] + t * (b[0] - a[0])
            ys = a[1] + t * (b[1] - a[1])
            best = min(best, float(np.max([np.abs(xs - px), np.abs(ys - py)], axis=0).min()))
    return best

"""Learnability coefficient fields over the complex z-plane (h = 1)."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import roots as _roots
from .errors import EmptyFieldError, RegionError
from .learnability import EXP_LIMIT, TIE_RTOL, RootPolicy
from .stability import as_stability

__all__ = [
    "Region",
    "Metric",
    "Sweep",
    "CoefficientField",
    "DEFAULT_REGION",
    "DEFAULT_LEVELS",
    "num_threads",
    "sweep",
    "evaluate_field",
    "export_csv",
    "read_csv",
    "render_contours",
]

THREADS_ENV = "RKLEARN_NUM_THREADS"


@dataclass(frozen=True)
class Region:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int

    def __post_init__(self):
        vals = (self.re_min, self.re_max, self.im_min, self.im_max)
        if not all(np.isfinite(v) for v in vals):
            raise RegionError("region bounds must be finite")
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise RegionError("region needs re_min < re_max and im_min < im_max")
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 2 or self.ny < 2:
            raise RegionError("region resolution needs integer nx, ny >= 2")

    @property
    def re(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.nx)

    @property
    def im(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.ny)

    def nodes(self) -> np.ndarray:
        """(ny, nx) complex array; row index follows Im z."""
        return self.re[None, :] + 1j * self.im[:, None]

    def to_dict(self) -> dict:
        return {"re_min": self.re_min, "re_max": self.re_max, "im_min": self.im_min,
                "im_max": self.im_max, "nx": self.nx, "ny": self.ny}


DEFAULT_REGION = Region(-6.0, 2.0, -6.0, 6.0, 600, 600)
DEFAULT_LEVELS = (1e-3, 1e-2, 1e-1, 1.0)


class Metric(str, Enum):
    L_ALPHA = "l_alpha"
    L_REAL = "l_real"
    L_IMAG = "l_imag"


def num_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class Sweep:
    """Raw root data for every node, flattened in row-major order."""

    z: np.ndarray          # (M,)
    roots: np.ndarray      # (M, n), NaN where absent
    residuals: np.ndarray  # (M, n)
    admissible: np.ndarray  # (M, n) bool: a root, not a pole, node converged
    converged: np.ndarray  # (M,)


def _sweep_chunk(R, z):
    num = R.numerator_array()
    den = R.denominator_array()
    n = R.degree
    m = z.size
    overflow = np.abs(z.real) > EXP_LIMIT
    target = np.exp(np.where(overflow, 0, z))
    P = np.zeros((m, n + 1), dtype=np.complex128)
    P[:, : num.size] += num
    P[:, : den.size] -= target[:, None] * den
    degs = _roots.effective_degree(P)
    degs[overflow] = -1
    roots, _, conv = _roots.aberth_batch(P, degs)
    conv &= degs > 0
    present = ~np.isnan(roots)
    w = np.where(present, roots, 0)
    pv = np.polynomial.polynomial.polyval(w, num)
    dv = np.polynomial.polynomial.polyval(w, den)
    resid = np.where(present, np.abs(pv - target[:, None] * dv), np.nan)
    admissible = present & (np.abs(dv) >= R.pole_threshold()) & conv[:, None]
    return roots, resid, admissible, conv


def sweep(method, region: Region, threads: int | None = None) -> Sweep:
    """Solve the learnability equation with ``lambda = z, h = 1`` at every node.

    Nodes are split into row blocks that may run on several threads; the
    result does not depend on the thread count.
    """
    R = as_stability(method)
    z = region.nodes().ravel()
    threads = threads or num_threads()
    blocks = np.array_split(np.arange(z.size), max(1, min(threads * 4, region.ny)))
    blocks = [b for b in blocks if b.size]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _sweep_chunk(R, z[b]), blocks))
    else:
        parts = [_sweep_chunk(R, z[b]) for b in blocks]
    roots = np.concatenate([p[0] for p in parts])
    resid = np.concatenate([p[1] for p in parts])
    adm = np.concatenate([p[2] for p in parts])
    conv = np.concatenate([p[3] for p in parts])
    return Sweep(z, roots, resid, adm, conv)


def _ordered(s: Sweep) -> np.ndarray:
    """Admissible roots per node sorted by distance to ``z`` (NaN last), ties by argument."""
    dist = np.where(s.admissible, np.abs(s.roots - s.z[:, None]), np.inf)
    phase = np.where(s.admissible, np.angle(s.roots), np.inf)
    n = s.roots.shape[1]
    idx = np.argsort(dist, axis=1, kind="stable")
    # stable re-sort by phase inside equal-distance groups
    d_sorted = np.take_along_axis(dist, idx, axis=1)
    p_sorted = np.take_along_axis(phase, idx, axis=1)
    for _ in range(n):
        for k in range(n - 1):
            da, db = d_sorted[:, k], d_sorted[:, k + 1]
            with np.errstate(invalid="ignore"):
                tie = np.isfinite(db) & (db - da <= TIE_RTOL * np.maximum(1.0, da))
            swap = tie & (p_sorted[:, k + 1] < p_sorted[:, k])
            if swap.any():
                for arr in (idx, d_sorted, p_sorted):
                    a, b = arr[swap, k].copy(), arr[swap, k + 1].copy()
                    arr[swap, k], arr[swap, k + 1] = b, a
    out = np.take_along_axis(np.where(s.admissible, s.roots, np.nan), idx, axis=1)
    return out


def _component(num, den, lam_zero):
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.abs(num / den)
    val = np.where(den == 0, np.where((num == 0) & ~lam_zero, 0.0, np.nan), val)
    return val


def metric_values(alpha: np.ndarray, lam: np.ndarray, metric: Metric) -> np.ndarray:
    """Vectorized learnability coefficient; NaN stands for UNDEFINED."""
    lam_zero = lam == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        if metric == Metric.L_ALPHA:
            val = np.abs((alpha - lam) / lam)
            val = np.where(lam_zero, np.nan, val)
        elif metric == Metric.L_REAL:
            val = _component(alpha.real - lam.real, lam.real, lam_zero)
        else:
            val = _component(alpha.imag - lam.imag, lam.imag, lam_zero)
    val = np.where(lam_zero, np.nan, val)
    return np.where(np.isnan(alpha), np.nan, val)


@dataclass
class CoefficientField:
    region: Region
    metric: Metric
    policy: RootPolicy
    values: np.ndarray  # (ny, nx), NaN = UNDEFINED
    method: str
    h: float = 1.0

    def value_at(self, z: complex) -> float:
        """Value at the node nearest to ``z``."""
        i = int(np.argmin(np.abs(self.region.re - z.real)))
        j = int(np.argmin(np.abs(self.region.im - z.imag)))
        return float(self.values[j, i])


def evaluate_field(method, region: Region, metric: Metric | str = Metric.L_ALPHA,
                   policy: RootPolicy = RootPolicy(), threads: int | None = None,
                   sweep_result: Sweep | None = None) -> CoefficientField:
    """Learnability coefficient at every node; failed nodes become UNDEFINED."""
    metric = Metric(metric)
    if policy.kind == "all":
        raise ValueError("a field needs a single-root policy (closest or index)")
    R = as_stability(method)
    s = sweep_result if sweep_result is not None else sweep(R, region, threads)
    ordered = _ordered(s)
    k = 0 if policy.kind == "closest" else policy.index
    if k < ordered.shape[1]:
        alpha = ordered[:, k]
    else:
        alpha = np.full(s.z.shape, np.nan + 0j)
    vals = metric_values(alpha, s.z, metric)
    return CoefficientField(region, metric, policy, vals.reshape(region.ny, region.nx), R.name)


def export_csv(field: CoefficientField) -> bytes:
    """``re,im,value`` rows, Im varying slowest; UNDEFINED is an empty cell."""
    buf = io.StringIO()
    buf.write("re,im,value\n")
    re, im = field.region.re, field.region.im
    for j, y in enumerate(im):
        ys = f"{y:.17g}"
        for i, x in enumerate(re):
            v = field.values[j, i]
            vs = "" if np.isnan(v) else f"{v:.17g}"
            buf.write(f"{x:.17g},{ys},{vs}\n")
    return buf.getvalue().encode("ascii")


def read_csv(data: bytes | str):
    """Parse :func:`export_csv` output into ``(re, im, values)`` float arrays."""
    if isinstance(data, bytes):
        data = data.decode("ascii")
    reader = csv.reader(io.StringIO(data))
    header = next(reader)
    if header != ["re", "im", "value"]:
        raise ValueError(f"unexpected CSV header {header}")
    re, im, val = [], [], []
    for row in reader:
        re.append(float(row[0]))
        im.append(float(row[1]))
        val.append(float(row[2]) if row[2] != "" else np.nan)
    return np.array(re), np.array(im), np.array(val)


# marching squares --------------------------------------------------------

# edge e joins corner e and corner (e + 1) % 4; corners run
# (j, i), (j, i+1), (j+1, i+1), (j+1, i) and bit k of the case marks corner k above
_EDGE_PAIRS = {}
for _case in range(1, 15):
    if _case in (5, 10):
        continue
    _EDGE_PAIRS[_case] = tuple(
        e for e in range(4) if bool(_case >> e & 1) != bool(_case >> ((e + 1) % 4) & 1)
    )


def _iso_segments(x, y, V, level):
    """Marching-squares segments of ``V == level`` with ``V[j, i]`` at ``(x[i], y[j])``.

    Returns an (S, 2, 2) array of endpoints. Cells with a NaN corner are
    skipped, so no segment enters a masked cell. Saddles are resolved by the
    cell-centre average.
    """
    c = [V[:-1, :-1], V[:-1, 1:], V[1:, 1:], V[1:, :-1]]
    X0, Y0 = np.meshgrid(x[:-1], y[:-1])
    X1, Y1 = np.meshgrid(x[1:], y[1:])
    px = [X0, X1, X1, X0]
    py = [Y0, Y0, Y1, Y1]
    valid = ~np.any([np.isnan(v) for v in c], axis=0)
    above = [np.where(valid, v > level, False) for v in c]
    case = above[0] * 1 + above[1] * 2 + above[2] * 4 + above[3] * 8
    active = valid & (case != 0) & (case != 15)
    pts = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for e in range(4):
            a, b = e, (e + 1) % 4
            t = (level - c[a]) / (c[b] - c[a])
            pts.append((px[a] + t * (px[b] - px[a]), py[a] + t * (py[b] - py[a])))
    jj, ii = np.nonzero(active)
    cases = case[jj, ii]
    centre_above = (sum(v[jj, ii] for v in c) / 4.0) > level
    first = np.empty((jj.size, 2), dtype=np.int64)
    second = np.full((jj.size, 2), -1, dtype=np.int64)
    for code, pair in _EDGE_PAIRS.items():
        first[cases == code] = pair
    saddle = (cases == 5) | (cases == 10)
    same = saddle & (centre_above == (cases == 5))
    diff = saddle & ~same
    first[same], second[same] = (0, 1), (2, 3)
    first[diff], second[diff] = (3, 0), (1, 2)

    def gather(edges, rows):
        out = np.empty((rows.size, 2, 2))
        for k in range(2):
            e = edges[rows, k]
            for ed in range(4):
                sel = e == ed
                out[sel, k, 0] = pts[ed][0][jj[rows[sel]], ii[rows[sel]]]
                out[sel, k, 1] = pts[ed][1][jj[rows[sel]], ii[rows[sel]]]
        return out

    rows = np.arange(jj.size)
    segs = gather(first, rows)
    srows = np.flatnonzero(saddle)
    if srows.size:
        segs = np.concatenate([segs, gather(second, srows)])
    return segs


_PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d")


def render_contours(field: CoefficientField, levels=DEFAULT_LEVELS,
                    width: int = 640, height: int = 640) -> str:
    """SVG 1.1 document with iso-lines of ``log10(value)`` at each level."""
    levels = [float(v) for v in levels]
    if not levels:
        raise ValueError("need at least one contour level")
    if any(v <= 0 for v in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("contour levels must be positive and strictly ascending")
    V = field.values
    if np.all(np.isnan(V)):
        raise EmptyFieldError("field is entirely UNDEFINED")
    logv = np.where(np.isnan(V), np.nan, np.log10(np.maximum(V, 1e-300)))
    reg = field.region
    x, y = reg.re, reg.im

    ml, mr, mt, mb = 70, 20, 30, 60
    pw, ph = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (v - reg.re_min) / (reg.re_max - reg.re_min) * pw

    def sy(v):
        return mt + (reg.im_max - v) / (reg.im_max - reg.im_min) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f"<title>{field.method} {field.metric.value} ({field.policy})</title>",
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in np.linspace(reg.re_min, reg.re_max, 5):
        out.append(f'<line x1="{sx(v):.2f}" y1="{mt + ph}" x2="{sx(v):.2f}" '
                   f'y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(v):.2f}" y="{mt + ph + 20}" font-size="12" '
                   f'text-anchor="middle">{v:g}</text>')
    for v in np.linspace(reg.im_min, reg.im_max, 5):
        out.append(f'<line x1="{ml - 5}" y1="{sy(v):.2f}" x2="{ml}" y2="{sy(v):.2f}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{sy(v) + 4:.2f}" font-size="12" '
                   f'text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 15}" font-size="14" '
               f'text-anchor="middle">Re z</text>')
    out.append(f'<text x="18" y="{mt + ph / 2:.1f}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 18 {mt + ph / 2:.1f})">Im z</text>')
    for n, level in enumerate(levels):
        segs = _iso_segments(x, y, logv, np.log10(level))
        color = _PALETTE[n % len(_PALETTE)]
        if len(segs):
            d = " ".join(f"M{sx(a[0]):.2f},{sy(a[1]):.2f}L{sx(b[0]):.2f},{sy(b[1]):.2f}"
                         for a, b in segs)
            out.append(f'<path class="level" data-level="{level:g}" d="{d}" fill="none" '
                       f'stroke="{color}" stroke-width="1"/>')
        lx, ly = ml + pw - 90, mt + 16 + 16 * n
        out.append(f'<text x="{lx}" y="{ly}" font-size="11" fill="{color}">'
                   f'{level:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Raceline data model, waypoint geometry, velocity profiles, and lap metrics.

A raceline is a closed loop of waypoints sampled along arc length. Geometry
queries treat it as piecewise linear; curvature comes from the file and is
never recomputed. Signed lateral distance is positive to the left of the
direction of travel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

CSV_HEADER = "s,x,y,psi,kappa,v_ref,w_left,w_right"

CLOSURE_TOL = 0.01     # m, max gap between first and last waypoint
CHORD_TOL = 0.01       # relative chord-vs-arc-length mismatch


class IncompleteLap(Exception):
    """Raised when a trace never wraps past the start line."""


@dataclass(frozen=True)
class Raceline:
    s: np.ndarray        # arc length [m], strictly increasing, s[0] = 0
    x: np.ndarray        # world position [m]
    y: np.ndarray
    psi: np.ndarray      # heading [rad]
    kappa: np.ndarray    # curvature [1/m]
    v_ref: np.ndarray    # reference speed [m/s]
    w_left: np.ndarray   # track half-width to the left [m]
    w_right: np.ndarray  # track half-width to the right [m]
    speed_scale: float = 1.0

    def __post_init__(self):
        n = len(self.s)
        for name in ("x", "y", "psi", "kappa", "v_ref", "w_left", "w_right"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} length mismatch")
        if n < 4:
            raise ValueError("raceline needs at least 4 waypoints")
        ds = np.diff(self.s)
        if np.any(ds <= 0.0):
            raise ValueError("arc length must be strictly increasing")
        if np.any(self.w_left <= 0.0) or np.any(self.w_right <= 0.0):
            raise ValueError("track half-widths must be > 0")
        gap = math.hypot(self.x[-1] - self.x[0], self.y[-1] - self.y[0])
        if gap > CLOSURE_TOL:
            raise ValueError(f"raceline is not closed (gap {gap:.4f} m)")
        chords = np.hypot(np.diff(self.x), np.diff(self.y))
        mismatch = np.abs(chords - ds) / ds
        if np.any(mismatch > CHORD_TOL):
            raise ValueError("chord lengths disagree with arc-length spacing by more than 1%")

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def n_segments(self) -> int:
        return len(self.s) - 1

    def point_at(self, s_query: float) -> tuple[float, float]:
        """Interpolated position at arc length s (wrapping)."""
        sq = s_query % self.length
        px = float(np.interp(sq, self.s, self.x))
        py = float(np.interp(sq, self.s, self.y))
        return px, py

    def interp_at(self, s_query: float, column: np.ndarray) -> float:
        return float(np.interp(s_query % self.length, self.s, column))

    def save_csv(self, path) -> None:
        data = np.column_stack(
            [self.s, self.x, self.y, self.psi, self.kappa, self.v_ref, self.w_left, self.w_right]
        )
        np.savetxt(path, data, fmt="%.10g", delimiter=",", header=CSV_HEADER, comments="")

    @staticmethod
    def load_csv(path, speed_scale: float = 1.0) -> "Raceline":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 8:
            raise ValueError(f"raceline CSV needs 8 columns ({CSV_HEADER})")
        return Raceline(
            s=data[:, 0], x=data[:, 1], y=data[:, 2], psi=data[:, 3],
            kappa=data[:, 4], v_ref=data[:, 5], w_left=data[:, 6], w_right=data[:, 7],
            speed_scale=speed_scale,
        )


def project(point_x: float, point_y: float, line: Raceline,
            s_hint: float | None = None, window: float = 3.0) -> tuple[float, float]:
    """Nearest point on the raceline: returns (arc length s*, signed distance d).

    d > 0 means the query point lies to the left of the travel direction.
    With s_hint the search is restricted to a +-window arc neighbourhood;
    callers must only pass hints that are within the window of the true
    projection (e.g. the previous control tick).
    """
    ax, ay = line.x[:-1], line.y[:-1]
    bx, by = line.x[1:], line.y[1:]
    if s_hint is not None:
        lo = (s_hint - window) % line.length
        hi = (s_hint + window) % line.length
        seg_s = line.s[:-1]
        if lo < hi:
            mask = (seg_s >= lo - 1.0) & (seg_s <= hi)
        else:
            mask = (seg_s >= lo - 1.0) | (seg_s <= hi)
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            idx = np.arange(line.n_segments)
    else:
        idx = np.arange(line.n_segments)

    ex = bx[idx] - ax[idx]
    ey = by[idx] - ay[idx]
    seg_len2 = ex * ex + ey * ey
    t = ((point_x - ax[idx]) * ex + (point_y - ay[idx]) * ey) / seg_len2
    t = np.clip(t, 0.0, 1.0)
    fx = ax[idx] + t * ex
    fy = ay[idx] + t * ey
    dist2 = (point_x - fx) ** 2 + (point_y - fy) ** 2
    k = int(np.argmin(dist2))
    i = int(idx[k])

    seg_len = math.sqrt(float(seg_len2[k]))
    # left normal of the segment
    nx = -float(ey[k]) / seg_len
    ny = float(ex[k]) / seg_len
    d = (point_x - float(fx[k])) * nx + (point_y - float(fy[k])) * ny
    s_star = float(line.s[i] + t[k] * (line.s[i + 1] - line.s[i]))
    return s_star % line.length, float(d)


def lookahead_point(
    point_x: float,
    point_y: float,
    direction: float,
    lookahead: float,
    line: Raceline,
    s_hint: float | None = None,
) -> tuple[float, float, float, bool]:
    """First forward intersection of the lookahead circle with the raceline.

    Walks segments forward in arc length from the current projection and
    returns (target_x, target_y, eta, fallback). eta is the signed angle from
    the direction ray to the ray toward the target. When no intersection
    exists (car too far off the line) the waypoint at s* + lookahead is
    returned with fallback=True.
    """
    if lookahead <= 0.0:
        raise ValueError("lookahead distance must be > 0")
    s_star, _ = project(point_x, point_y, line, s_hint=s_hint)

    n = line.n_segments
    i0 = int(np.searchsorted(line.s, s_star, side="right") - 1)
    i0 = min(max(i0, 0), n - 1)
    target = None

    for step in range(n + 1):
        i = (i0 + step) % n
        ax_, ay_ = float(line.x[i]), float(line.y[i])
        ex = float(line.x[i + 1]) - ax_
        ey = float(line.y[i + 1]) - ay_
        # |a + t e - p|^2 = L^2
        rx = ax_ - point_x
        ry = ay_ - point_y
        a2 = ex * ex + ey * ey
        b = 2.0 * (rx * ex + ry * ey)
        c = rx * rx + ry * ry - lookahead * lookahead
        disc = b * b - 4.0 * a2 * c
        if disc < 0.0:
            continue
        sq = math.sqrt(disc)
        t_lo = 0.0
        if step == 0:
            seg_ds = float(line.s[i + 1] - line.s[i])
            t_lo = (s_star - float(line.s[i])) / seg_ds
        for t in ((-b - sq) / (2.0 * a2), (-b + sq) / (2.0 * a2)):
            if t_lo <= t <= 1.0:
                target = (ax_ + t * ex, ay_ + t * ey)
                break
        if target is not None:
            break

    fallback = target is None
    if fallback:
        target = line.point_at(s_star + lookahead)

    eta = _wrap(math.atan2(target[1] - point_y, target[0] - point_x) - direction)
    return target[0], target[1], eta, fallback


def _wrap(angle: float) -> float:
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def scale_profile(line: Raceline, scale: float) -> Raceline:
    """Scale every reference speed; geometry is untouched."""
    if not 0.0 < scale <= 1.2:
        raise ValueError("speed scale must be in (0, 1.2]")
    return replace(line, v_ref=line.v_ref * scale, speed_scale=line.speed_scale * scale)


def forward_backward_profile(
    line: Raceline,
    a_long_max: float,
    a_lat_max: float,
    v_max: float,
) -> Raceline:
    """Curvature-limited velocity profile with forward/backward accel passes.

    v is capped at sqrt(a_lat_max / |kappa|) pointwise, then limited so that
    v^2 changes by at most 2 * a_long_max * ds between neighbours in both
    directions around the closed loop. Re-running is a fixed point.
    """
    if a_long_max <= 0.0 or a_lat_max <= 0.0 or v_max <= 0.0:
        raise ValueError("profile limits must be > 0")
    kappa = np.abs(line.kappa)
    with np.errstate(divide="ignore"):
        v_kappa = np.where(kappa > 1e-12, np.sqrt(a_lat_max / np.maximum(kappa, 1e-12)), np.inf)
    v = np.minimum(v_kappa, v_max)

    n = len(v)
    ds = np.diff(line.s)
    # forward pass, twice around to settle the wrap
    for _ in range(2):
        for i in range(n - 1):
            cap = math.sqrt(v[i] ** 2 + 2.0 * a_long_max * ds[i])
            if v[i + 1] > cap:
                v[i + 1] = cap
        v[0] = min(v[0], v[-1])
    # backward pass, twice around
    for _ in range(2):
        for i in range(n - 2, -1, -1):
            cap = math.sqrt(v[i + 1] ** 2 + 2.0 * a_long_max * ds[i])
            if v[i] > cap:
                v[i] = cap
        v[-1] = min(v[-1], v[0])
    v[-1] = v[0]
    return replace(line, v_ref=v)


@dataclass
class LapMetrics:
    lap: int
    lap_time: float           # [s]; nan for a partial lap
    rms_d: float              # population RMS of signed lateral distance [m]
    mean_abs_d: float         # [m]
    max_abs_d: float          # [m]
    crashed: bool
    complete: bool

    def as_dict(self) -> dict:
        return {
            "lap": self.lap,
            "lap_time": self.lap_time,
            "rms_d": self.rms_d,
            "mean_abs_d": self.mean_abs_d,
            "max_abs_d": self.max_abs_d,
            "crashed": self.crashed,
            "complete": self.complete,
        }


def project_trace(times: np.ndarray, xs: np.ndarray, ys: np.ndarray, line: Raceline):
    """Sequential projection of a continuous trace, warm-started sample to sample."""
    n = len(times)
    s_arr = np.empty(n)
    d_arr = np.empty(n)
    hint = None
    for k in range(n):
        s_k, d_k = project(float(xs[k]), float(ys[k]), line, s_hint=hint)
        s_arr[k] = s_k
        d_arr[k] = d_k
        hint = s_k
    return s_arr, d_arr


def lap_metrics(
    times: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    line: Raceline,
    crashed: bool = False,
) -> list[LapMetrics]:
    """Per-lap tracking metrics for a time-stamped position trace.

    Laps are delimited by start-line crossings (wraps of the arc-length
    coordinate); the crossing instant is interpolated linearly between
    samples. A trace that starts on the line opens its first lap at t[0].
    The trailing piece after the last crossing is reported as a partial lap
    when the run ended in a crash, and dropped otherwise. Raises
    IncompleteLap when no crossing exists.
    """
    times = np.asarray(times, dtype=float)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    s_arr, d_arr = project_trace(times, xs, ys, line)
    length = line.length

    # wrap detection: big negative jump in s
    ds = np.diff(s_arr)
    wrap_idx = np.flatnonzero(ds < -0.5 * length)

    boundaries: list[tuple[float, int]] = []  # (crossing time, first sample index of new lap)
    starts_on_line = s_arr[0] < 0.5 or s_arr[0] > length - 0.5
    if starts_on_line:
        boundaries.append((float(times[0]), 0))
    for k in wrap_idx:
        gap_prev = length - s_arr[k]
        frac = gap_prev / (gap_prev + s_arr[k + 1]) if gap_prev + s_arr[k + 1] > 0 else 1.0
        t_cross = float(times[k] + frac * (times[k + 1] - times[k]))
        boundaries.append((t_cross, k + 1))

    if len(wrap_idx) == 0:
        raise IncompleteLap("trace never wraps past the start line")

    half_widths = np.where(
        d_arr >= 0.0,
        np.interp(s_arr, line.s, line.w_left),
        np.interp(s_arr, line.s, line.w_right),
    )
    off_track = np.abs(d_arr) > half_widths

    laps: list[LapMetrics] = []
    for j in range(len(boundaries)):
        t_open, i_open = boundaries[j]
        if j + 1 < len(boundaries):
            t_close, i_close = boundaries[j + 1]
            complete = True
        else:
            t_close, i_close = float(times[-1]), len(times)
            complete = False
            if not crashed:
                break  # trailing partial lap without a crash carries no result
        d_lap = d_arr[i_open:i_close]
        if d_lap.size == 0:
            continue
        laps.append(
            LapMetrics(
                lap=len(laps) + 1,
                lap_time=(t_close - t_open) if complete else float("nan"),
                rms_d=float(np.sqrt(np.mean(d_lap**2))),
                mean_abs_d=float(np.mean(np.abs(d_lap))),
                max_abs_d=float(np.max(np.abs(d_lap))),
                crashed=bool(off_track[i_open:i_close].any()),
                complete=complete,
            )
        )
    return laps

"""Raster and sweep pipelines over the map's dynamical and parameter planes.

Three instruments:

* :func:`render_julia` -- per-pixel convergence of initial conditions toward
  the known attracting cycles of a fixed parameter (steps-to-capture raster,
  written as a grayscale PGM: dark = fast capture, white = never captured).
* :func:`render_parameter_space` -- per-pixel period of the cycle the
  critical orbit settles into as the parameter varies (period raster,
  written as a color PPM keyed by period; white = no settling).
* :func:`bifurcation_sweep` -- |z| samples recorded after a long transient
  along a line segment of parameters (CSV).

The vector kernel tracks every pixel as a projective pair (Z, W) with
z = Z/W, renormalized to unit max magnitude each step.  The pair form makes
the step polynomial -- numerator Z**2 + p W**2, denominator W**2 - conj(p)
Z**2 -- so there is no division, no overflow, and the point at infinity is
the exact pair (1, 0).  All arithmetic commutes bit-for-bit with complex
conjugation, which is what makes mirror-symmetry tests exact.

Rasters are computed in fixed-size pixel blocks.  The block decomposition
never depends on the worker count, and blocks do not communicate, so output
is bit-identical no matter how many threads run (``workers`` only caps the
pool).  Rerunning any pipeline with an identical config reproduces the
payload bit-for-bit.
"""

from __future__ import annotations

import colorsys
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .orbits import ConfigurationError, Cycle, critical_orbits
from .sphere import MapParam, SpherePoint, as_point

BLOCK_PIXELS = 8192  # fixed split unit; independent of worker count

PALETTE_VERSION = "period-hue-v1"


@dataclass(frozen=True)
class Window:
    """An axis-aligned complex-plane rectangle sampled on a pixel grid.

    Pixel centers span the rectangle inclusively: column 0 / column nx-1
    sit exactly on the left/right edges, row 0 is the TOP edge (maximum
    imaginary part).  The grid formulas are sign-symmetric, so a window
    centered on the real axis samples exactly conjugate pixel pairs.
    """

    center: complex
    width: float
    height: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("window extents must be positive")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("resolution must be at least 2x2")

    @classmethod
    def from_bounds(cls, re_min: float, re_max: float, im_min: float,
                    im_max: float, nx: int, ny: int) -> "Window":
        if not (re_max > re_min and im_max > im_min):
            raise ValueError("window bounds must satisfy re_min < re_max, im_min < im_max")
        return cls(
            complex((re_min + re_max) / 2.0, (im_min + im_max) / 2.0),
            re_max - re_min, im_max - im_min, nx, ny,
        )

    def real_axis(self) -> np.ndarray:
        i = np.arange(self.nx, dtype=float)
        return self.center.real + (self.width / 2.0) * ((2.0 * i - (self.nx - 1)) / (self.nx - 1))

    def imag_axis(self) -> np.ndarray:
        j = np.arange(self.ny, dtype=float)
        return self.center.imag + (self.height / 2.0) * (((self.ny - 1) - 2.0 * j) / (self.ny - 1))

    def grid(self) -> np.ndarray:
        """Complex pixel centers, shape (ny, nx), row 0 on top."""
        return self.real_axis()[None, :] + 1j * self.imag_axis()[:, None]

    def to_json_dict(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "width": self.width, "height": self.height,
            "nx": self.nx, "ny": self.ny,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Window":
        return cls(complex(d["center"][0], d["center"][1]),
                   d["width"], d["height"], d["nx"], d["ny"])


@dataclass
class Raster:
    """Per-pixel outcome arrays plus the config that produced them.

    ``steps`` is the iteration count actually run for the pixel,
    ``period`` the cycle period it resolved to (-1 where none), and
    ``converged`` whether it resolved at all.
    """

    window: Window
    converged: np.ndarray
    steps: np.ndarray
    period: np.ndarray
    config: dict = field(default_factory=dict)


@dataclass
class Sweep:
    """Recorded |z| tail blocks along a parameter segment."""

    p: np.ndarray           # (samples,) complex parameters
    start_step: int         # global index of the first recorded step
    abs_z: np.ndarray       # (samples, record) float, junk where is_infinity
    is_infinity: np.ndarray  # (samples, record) bool
    config: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# projective-pair kernel

def _pair_step(p, pc, Z, W):
    Z2 = Z * Z
    W2 = W * W
    Zn = Z2 + p * W2
    Wn = W2 - pc * Z2
    # the pair never vanishes jointly (the two quadratics have no common
    # root), so renormalizing to unit max magnitude is always safe
    m = np.maximum(np.abs(Zn), np.abs(Wn))
    return Zn / m, Wn / m


def _pair_from_point(pt: SpherePoint) -> tuple[complex, complex]:
    Z, W = pt.homogeneous()
    m = max(abs(Z), abs(W))
    return Z / m, W / m


def _target_pairs(cycles: Sequence[Cycle]):
    targets = []
    for cycle in cycles:
        for pt in cycle.points:
            tz, tw = _pair_from_point(pt)
            targets.append((tz, tw, abs(tz) ** 2 + abs(tw) ** 2, cycle.period))
    return targets


def _capture_block(p: complex, Z: np.ndarray, W: np.ndarray, targets,
                   eps2: float, max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    """Steps-to-capture for one pixel block against fixed target points."""
    n = Z.size
    steps = np.full(n, max_iter, dtype=np.int32)
    period = np.full(n, -1, dtype=np.int32)
    captured = np.zeros(n, dtype=bool)
    alive = np.arange(n)
    pc = p.conjugate()
    for k in range(max_iter + 1):
        if k:
            Z, W = _pair_step(p, pc, Z, W)
        norm = np.abs(Z) ** 2 + np.abs(W) ** 2
        hit = np.zeros(Z.shape, dtype=bool)
        per = np.full(Z.shape, -1, dtype=np.int32)
        for tz, tw, tn, tq in targets:
            cross = np.abs(Z * tw - tz * W) ** 2
            new = (cross < eps2 * tn * norm) & ~hit
            per[new] = tq
            hit |= new
        if hit.any():
            sel = alive[hit]
            steps[sel] = k
            period[sel] = per[hit]
            captured[sel] = True
            keep = ~hit
            Z, W, alive = Z[keep], W[keep], alive[keep]
            if alive.size == 0:
                break
    return np.where(captured, steps, max_iter), np.where(captured, period, -1)


def _period_block(p: np.ndarray, z0: SpherePoint, transient: int,
                  max_period: int, eps2: float) -> np.ndarray:
    """Settled period per parameter value (vectorized tail-lag scan)."""
    pc = np.conj(p)
    z, w = _pair_from_point(z0)
    Z = np.full(p.shape, z, dtype=complex)
    W = np.full(p.shape, w, dtype=complex)
    for _ in range(transient):
        Z, W = _pair_step(p, pc, Z, W)
    tail_len = 2 * max_period + 1
    tails = [(Z, W, np.abs(Z) ** 2 + np.abs(W) ** 2)]
    for _ in range(tail_len - 1):
        Z, W = _pair_step(p, pc, Z, W)
        tails.append((Z, W, np.abs(Z) ** 2 + np.abs(W) ** 2))
    period = np.full(p.shape, -1, dtype=np.int32)
    for q in range(1, max_period + 1):
        ok = period < 0
        if not ok.any():
            break
        for k in range(q):
            za, wa, na = tails[tail_len - 1 - k]
            zb, wb, nb = tails[tail_len - 1 - k - q]
            cross = np.abs(za * wb - zb * wa) ** 2
            ok = ok & (cross < eps2 * na * nb)
            if not ok.any():
                break
        period[ok] = q
    return period


def _run_blocks(total: int, workers: Optional[int], fn, out_arrays):
    """Apply fn(start, stop) over fixed-size blocks, assembling into out_arrays."""
    blocks = [(s, min(s + BLOCK_PIXELS, total)) for s in range(0, total, BLOCK_PIXELS)]

    def run(block):
        start, stop = block
        results = fn(start, stop)
        for out, res in zip(out_arrays, results):
            out[start:stop] = res

    nworkers = workers if workers else min(8, os.cpu_count() or 1)
    if nworkers <= 1 or len(blocks) == 1:
        for b in blocks:
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            list(pool.map(run, blocks))


# ---------------------------------------------------------------------------
# renderers

def render_julia(param: MapParam, window: Window, max_iter: int = 200,
                 eps: float = 1e-6, cycles: Optional[Sequence[Cycle]] = None,
                 workers: Optional[int] = None) -> Raster:
    """Steps until each pixel's orbit is captured by an attracting cycle.

    ``cycles`` defaults to the attracting cycles the critical orbits land
    on; :class:`ConfigurationError` if there are none and none are supplied.
    ``eps`` is the capture radius in sqrt-overlap units.  A pixel's
    ``steps`` entry is the first iteration count at which it came within
    eps of a target point (0 = already there); unconverged pixels carry
    steps = max_iter and period = -1.
    """
    if cycles is None:
        report = critical_orbits(param)
        cycles = report.attracting_cycles()
        if not cycles:
            raise ConfigurationError(
                f"no attracting cycle found for p={param.p}; supply target "
                "cycles explicitly to render anyway"
            )
    targets = _target_pairs(cycles)
    eps2 = eps * eps
    grid = window.grid().ravel()
    m0 = np.maximum(np.abs(grid), 1.0)
    Z0 = grid / m0
    W0 = (1.0 / m0).astype(complex)
    steps = np.empty(grid.size, dtype=np.int32)
    period = np.empty(grid.size, dtype=np.int32)

    def block(start, stop):
        return _capture_block(param.p, Z0[start:stop].copy(), W0[start:stop].copy(),
                              targets, eps2, max_iter)

    _run_blocks(grid.size, workers, block, (steps, period))
    shape = (window.ny, window.nx)
    steps = steps.reshape(shape)
    period = period.reshape(shape)
    config = {
        "kind": "julia", "p": [param.p.real, param.p.imag],
        "window": window.to_json_dict(), "max_iter": max_iter, "eps": eps,
        "targets": [[_fmt(tz), _fmt(tw), tq] for tz, tw, _, tq in targets],
    }
    return Raster(window, period >= 0, steps, period, config)


def _fmt(c: complex) -> list[float]:
    return [c.real, c.imag]


def render_parameter_space(window: Window, z0=0j, transient: int = 2000,
                           max_period: int = 64, eps: float = 1e-6,
                           workers: Optional[int] = None) -> Raster:
    """Settled cycle period of the orbit of z0 as the parameter varies.

    Each pixel is its own map parameter.  After ``transient`` iterations the
    next 2*max_period+1 points are scanned for the smallest lag q whose
    matches are sustained over a full extra period (the same rule the scalar
    detector uses), with eps in sqrt-overlap units.  Pixels with no settled
    lag are marked unconverged.  Requires transient >= 2*max_period.
    """
    if transient < 2 * max_period:
        raise ValueError("transient must be at least 2*max_period")
    z0 = as_point(z0)
    eps2 = eps * eps
    grid = window.grid().ravel()
    period = np.empty(grid.size, dtype=np.int32)

    def block(start, stop):
        return (_period_block(grid[start:stop], z0, transient, max_period, eps2),)

    _run_blocks(grid.size, workers, block, (period,))
    shape = (window.ny, window.nx)
    period = period.reshape(shape)
    steps = np.full(shape, transient + 2 * max_period, dtype=np.int32)
    config = {
        "kind": "parameter-space", "z0": _point_json(z0),
        "window": window.to_json_dict(), "transient": transient,
        "max_period": max_period, "eps": eps,
    }
    return Raster(window, period >= 0, steps, period, config)


def _point_json(pt: SpherePoint):
    return "inf" if pt.is_infinity else [pt.value.real, pt.value.imag]


def bifurcation_sweep(start: complex = 0j, end: complex = 2j, samples: int = 800,
                      transient: int = 10_000, record: int = 50, z0=0j) -> Sweep:
    """|z| tail blocks along the parameter segment from start to end.

    Runs the orbit of z0 for ``transient`` iterations at every sampled
    parameter, then records |z| for the next ``record`` iterations.  Visits
    to the point at infinity are flagged rather than given a magnitude.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if record < 1:
        raise ValueError("need at least one recorded step")
    t = np.arange(samples) / (samples - 1) if samples > 1 else np.zeros(1)
    p = np.asarray(start) + t * (np.asarray(end) - np.asarray(start))
    p = p.astype(complex)
    pc = np.conj(p)
    z0 = as_point(z0)
    z, w = _pair_from_point(z0)
    Z = np.full(p.shape, z, dtype=complex)
    W = np.full(p.shape, w, dtype=complex)
    for _ in range(transient):
        Z, W = _pair_step(p, pc, Z, W)
    abs_z = np.empty((samples, record), dtype=float)
    is_inf = np.empty((samples, record), dtype=bool)
    for k in range(record):
        Z, W = _pair_step(p, pc, Z, W)
        aw = np.abs(W)
        flag = aw == 0.0
        with np.errstate(divide="ignore", over="ignore"):
            ratio = np.abs(Z) / aw
        flag |= ~np.isfinite(ratio)
        abs_z[:, k] = np.where(flag, 0.0, ratio)
        is_inf[:, k] = flag
    config = {
        "kind": "sweep", "start": _fmt(complex(start)), "end": _fmt(complex(end)),
        "samples": samples, "transient": transient, "record": record,
        "z0": _point_json(z0),
    }
    return Sweep(p, transient + 1, abs_z, is_inf, config)


# ---------------------------------------------------------------------------
# artifact writers

def julia_grayscale(raster: Raster, max_iter: Optional[int] = None) -> np.ndarray:
    """Steps-to-capture as 8-bit grayscale: dark = fast, 255 = never captured.

    Captured pixels map monotonically dark-to-light as
    floor(255 * steps / max_iter), clipped to 254 so the white level stays
    reserved for non-convergence.
    """
    if max_iter is None:
        max_iter = int(raster.config.get("max_iter", raster.steps.max() or 1))
    gray = np.floor(255.0 * raster.steps / max_iter).astype(np.int64)
    gray = np.minimum(gray, 254)
    return np.where(raster.converged, gray, 255).astype(np.uint8)


def period_palette(max_period: int) -> np.ndarray:
    """RGB rows for periods 0..max_period (row 0, unused, is white)."""
    pal = np.empty((max_period + 1, 3), dtype=np.uint8)
    pal[0] = 255
    for q in range(1, max_period + 1):
        r, g, b = colorsys.hsv_to_rgb(q / (max_period + 1), 1.0, 1.0)
        pal[q] = (round(r * 255), round(g * 255), round(b * 255))
    return pal


def period_rgb(raster: Raster, max_period: Optional[int] = None) -> np.ndarray:
    """Period raster as RGB: hue keyed to period, white where unresolved."""
    if max_period is None:
        max_period = int(raster.config.get("max_period", max(1, raster.period.max())))
    pal = period_palette(max_period)
    idx = np.clip(raster.period, 0, max_period)
    rgb = pal[idx]
    rgb[raster.period <= 0] = 255
    return rgb


def write_pgm(path, gray: np.ndarray) -> None:
    """Binary (P5) PGM, maxval 255."""
    gray = np.ascontiguousarray(gray, dtype=np.uint8)
    ny, nx = gray.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (nx, ny))
        fh.write(gray.tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    """Binary (P6) PPM, maxval 255."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    ny, nx, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (nx, ny))
        fh.write(rgb.tobytes())


def write_sweep_csv(path, sweep: Sweep) -> None:
    """CSV rows (p_re,p_im,step,abs_z,is_infinity); abs_z empty at infinity."""
    with open(path, "w", newline="") as fh:
        fh.write("p_re,p_im,step,abs_z,is_infinity\n")
        samples, record = sweep.abs_z.shape
        for i in range(samples):
            pre, pim = float(sweep.p[i].real), float(sweep.p[i].imag)
            for k in range(record):
                step = int(sweep.start_step) + k
                if sweep.is_infinity[i, k]:
                    fh.write(f"{pre!r},{pim!r},{step},,1\n")
                else:
                    fh.write(f"{pre!r},{pim!r},{step},{float(sweep.abs_z[i, k])!r},0\n")


def write_sidecar(artifact_path, config: dict) -> str:
    """Write ``<artifact>.json`` recording the full job config; returns its path."""
    sidecar = f"{artifact_path}.json"
    with open(sidecar, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar

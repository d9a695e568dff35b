"""TDOA source localization over a hydrophone line.

Arrival delays are measured relative to the earliest channel; ranges are
anchored as r_i = r_ref + v * dt_i and the source position is the grid
point minimizing the root of the summed squared range-difference
residuals, with one 10x finer local refinement pass.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioSegment
from .errors import (AmbiguousDelayError, ConfigurationError,
                     InfeasibleGeometryError, InputError, NoSignalError)

DEFAULT_SPEED_OF_SOUND = 1430.0  # m/s, winter water


@dataclass
class ArrayGeometry:
    """Hydrophone positions (meters, 2D) and the medium's speed of sound."""

    positions: dict[str, tuple[float, float]] = field(
        default_factory=lambda: {"H1": (50.0, 0.0), "H2": (0.0, 0.0), "H3": (-50.0, 0.0)})
    speed_of_sound: float = DEFAULT_SPEED_OF_SOUND

    def __post_init__(self):
        if len(self.positions) < 3:
            raise ConfigurationError("geometry needs at least 3 hydrophones")
        if self.speed_of_sound <= 0:
            raise ConfigurationError("speed_of_sound must be positive")
        pts = [tuple(p) for p in self.positions.values()]
        if len(set(pts)) != len(pts):
            raise ConfigurationError("hydrophone positions must be distinct")

    def position(self, hid: str) -> np.ndarray:
        return np.asarray(self.positions[hid], dtype=np.float64)

    def max_separation(self) -> float:
        pts = np.array(list(self.positions.values()), dtype=np.float64)
        diffs = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diffs ** 2).sum(-1)).max())


@dataclass
class TdoaMeasurement:
    """Per-hydrophone arrival delays (seconds) after the reference channel."""

    reference: str
    delays: dict[str, float]

    def __post_init__(self):
        if self.delays.get(self.reference, 0.0) != 0.0:
            raise InputError("reference delay must be exactly 0")
        self.delays = {**self.delays, self.reference: 0.0}
        for hid, dt in self.delays.items():
            if dt < 0:
                raise InputError(f"negative delay for {hid}: {dt}")

    def validate_feasible(self, geometry: ArrayGeometry) -> None:
        max_sep = geometry.max_separation()
        for hid, dt in self.delays.items():
            if dt * geometry.speed_of_sound > max_sep + 1e-9:
                raise InputError(
                    f"delay for {hid} implies range offset "
                    f"{dt * geometry.speed_of_sound:.2f} m beyond the array span {max_sep:.2f} m")

    def range_offsets(self, speed_of_sound: float) -> dict[str, float]:
        """Derived distances d_i = v * dt_i (meters) for each non-reference channel."""
        return {hid: dt * speed_of_sound for hid, dt in self.delays.items()
                if hid != self.reference}


@dataclass
class RegionDescriptor:
    """Geometry branch selected from the delay ordering."""

    kind: str           # "between" | "vicinity" | "boundary"
    anchor: str         # hydrophone whose position centers the search window
    description: str


@dataclass
class LocalizationResult:
    position: tuple[float, float]          # global coordinates, meters
    residual: float                        # sqrt of summed squared residuals
    grid_step: float
    region: RegionDescriptor

    def local_position(self, geometry: ArrayGeometry) -> tuple[float, float]:
        ax, ay = geometry.position(self.region.anchor)
        return (self.position[0] - ax, self.position[1] - ay)


@dataclass
class SearchSpec:
    """Grid search window: half-width around the region anchor, and step."""

    range_m: float = 10.0
    grid_step: float = 0.1
    center: tuple[float, float] | None = None  # default: region anchor position
    refine: bool = True


def forward_delays(source, geometry: ArrayGeometry) -> TdoaMeasurement:
    """Exact geometric delays for a known source position (localization oracle)."""
    src = np.asarray(source, dtype=np.float64)
    dists = {hid: float(np.linalg.norm(src - geometry.position(hid)))
             for hid in geometry.positions}
    ref = min(dists, key=lambda h: (dists[h], h))
    v = geometry.speed_of_sound
    delays = {hid: (d - dists[ref]) / v for hid, d in dists.items()}
    return TdoaMeasurement(reference=ref, delays=delays)


def classify_region(tdoa: TdoaMeasurement, geometry: ArrayGeometry) -> RegionDescriptor:
    """Pick the geometry branch implied by the delay ordering.

    If the second arrival's range offset reaches the reference-to-second
    baseline the source must lie on the far side of the reference
    ("vicinity"); otherwise it lies between the two earliest channels,
    closer to the reference.
    """
    ref = tdoa.reference
    v = geometry.speed_of_sound
    others = sorted((dt, hid) for hid, dt in tdoa.delays.items() if hid != ref)
    if not others:
        raise InputError("measurement needs at least two channels")
    if all(dt == 0.0 for dt, _ in others):
        return RegionDescriptor("boundary", ref, "equidistant from all hydrophones")
    dt2, second = others[0]
    baseline = float(np.linalg.norm(geometry.position(ref) - geometry.position(second)))
    if dt2 * v >= baseline - 1e-9:
        return RegionDescriptor("vicinity", ref, f"vicinity of {ref}")
    return RegionDescriptor("between", ref,
                            f"between {second} and {ref}, closer to {ref}")


def _residual_field(tdoa: TdoaMeasurement, geometry: ArrayGeometry,
                    X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    v = geometry.speed_of_sound
    ref_pos = geometry.position(tdoa.reference)
    r_ref = np.hypot(X - ref_pos[0], Y - ref_pos[1])
    total = np.zeros_like(r_ref)
    for hid, dt in tdoa.delays.items():
        if hid == tdoa.reference:
            continue
        p = geometry.position(hid)
        r_i = np.hypot(X - p[0], Y - p[1])
        total += (r_i - (r_ref + v * dt)) ** 2
    return total


def solve_position(tdoa: TdoaMeasurement, geometry: ArrayGeometry,
                   search: SearchSpec | None = None) -> LocalizationResult:
    """Residual-minimizing grid search for the 2D source position.

    Measurement inconsistency shows up as a non-zero reported residual
    rather than a failure. Ties break by smallest residual then
    lexicographic (x, y) position.
    """
    search = search or SearchSpec()
    tdoa.validate_feasible(geometry)
    region = classify_region(tdoa, geometry)
    if search.center is not None:
        cx, cy = search.center
    else:
        cx, cy = geometry.position(region.anchor)
    best = _scan(tdoa, geometry, cx, cy, search.range_m, search.grid_step)
    if best is None:
        raise InfeasibleGeometryError("empty search grid")
    bx, by, bres = best
    step = search.grid_step
    if search.refine:
        fine = search.grid_step / 10.0
        refined = _scan(tdoa, geometry, bx, by, search.grid_step, fine)
        if refined is not None and refined[2] < bres:
            bx, by, bres = refined
            step = fine
    return LocalizationResult(position=(bx, by), residual=float(np.sqrt(bres)),
                              grid_step=step, region=region)


def _scan(tdoa, geometry, cx, cy, half_width, step):
    # the water region is the y >= 0 half-plane; never scan below it
    xs = np.arange(cx - half_width, cx + half_width + step / 2, step)
    ys = np.arange(max(0.0, cy - half_width), cy + half_width + step / 2, step)
    if len(xs) == 0 or len(ys) == 0:
        return None
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    F = _residual_field(tdoa, geometry, X, Y)
    # lexicographic tie-break: first minimal entry in (x, y) scan order
    idx = np.unravel_index(int(np.argmin(np.round(F, 12))), F.shape)
    return float(X[idx]), float(Y[idx]), float(F[idx])


def residual_surface(tdoa: TdoaMeasurement, geometry: ArrayGeometry,
                     search: SearchSpec | None = None):
    """Residual magnitude over the search grid, for heatmap export."""
    search = search or SearchSpec()
    region = classify_region(tdoa, geometry)
    cx, cy = search.center if search.center is not None else geometry.position(region.anchor)
    xs = np.arange(cx - search.range_m, cx + search.range_m + search.grid_step / 2,
                   search.grid_step)
    ys = np.arange(max(0.0, cy - search.range_m), cy + search.range_m + search.grid_step / 2,
                   search.grid_step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return xs, ys, np.sqrt(_residual_field(tdoa, geometry, X, Y))


def estimate_delays(recordings: dict[str, AudioSegment],
                    energy_floor: float = 1e-6,
                    confidence_floor: float = 0.2) -> TdoaMeasurement:
    """Arrival delays from normalized cross-correlation at sample resolution.

    Channels must share a sample rate and an aligned capture start (single
    multi-channel amplifier). The reference is the channel with the
    earliest detected onset.
    """
    if len(recordings) < 2:
        raise InputError("need at least two channels")
    rates = {seg.sample_rate for seg in recordings.values()}
    if len(rates) != 1:
        raise InputError(f"sample rates differ across channels: {rates}")
    rate = rates.pop()

    onsets = {}
    for hid, seg in recordings.items():
        energy = seg.samples ** 2
        if energy.max() <= energy_floor:
            raise NoSignalError(f"channel {hid} below detection floor")
        threshold = max(energy_floor, 0.05 * energy.max())
        onsets[hid] = int(np.argmax(energy >= threshold))
    first = min(onsets, key=lambda h: (onsets[h], h))
    ref_sig = recordings[first].samples

    lags: dict[str, int] = {first: 0}
    for hid, seg in recordings.items():
        if hid == first:
            continue
        sig = seg.samples
        corr = np.correlate(sig, ref_sig, mode="full")
        norm = np.sqrt(np.dot(sig, sig) * np.dot(ref_sig, ref_sig))
        if norm <= 0:
            raise NoSignalError(f"channel {hid} is silent")
        corr = corr / norm
        if corr.max() < confidence_floor:
            raise AmbiguousDelayError(
                f"correlation peak {corr.max():.3f} below confidence floor for {hid}")
        lags[hid] = int(np.argmax(corr)) - (len(ref_sig) - 1)
    # re-anchor on the truly earliest channel so every delay is non-negative
    ref = min(lags, key=lambda h: (lags[h], h))
    base = lags[ref]
    delays = {hid: (lag - base) / rate for hid, lag in lags.items()}
    return TdoaMeasurement(reference=ref, delays=delays)

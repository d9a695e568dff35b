"""Synthetic event sounds, multi-hydrophone scene rendering, and the
buffered acquisition loop.

Synthesis recipes are invented but versioned: each class has a distinct
band-limited signature so learned-model tests stay meaningful. Band edges
are stored as fractions of Nyquist; at the default 96 kHz rate the bubble
band spans 1-20 kHz.
"""
from __future__ import annotations

import warnings
import zlib
from dataclasses import dataclass

import numpy as np

from .audio import AudioSegment
from .dsp import StreamSegmenter
from .errors import BufferOverrunError, ConfigurationError, InputError
from .localization import ArrayGeometry

RECIPE_VERSION = 1

# class id -> recipe family and band (fractions of the Nyquist frequency)
CLASS_REGISTRY: dict[str, dict] = {
    "knocking_wood":               {"family": "knock", "band": (0.004, 0.010), "decay": 0.05, "rate": 1.2},
    "knocking_plastic":            {"family": "knock", "band": (0.012, 0.022), "decay": 0.02, "rate": 1.5},
    "knocking_concrete":           {"family": "knock", "band": (0.0015, 0.004), "decay": 0.12, "rate": 0.8},
    "bubbles_small":               {"family": "bubbles", "band": (1000 / 48000, 20000 / 48000), "rate": 14.0},
    "bubbles_large":               {"family": "bubbles", "band": (0.01, 0.10), "rate": 5.0},
    "metal_clank":                 {"family": "clank", "band": (0.04, 0.07), "decay": 0.25, "rate": 0.7},
    "plastic_scratching":          {"family": "scratch", "band": (0.06, 0.21), "rate": 3.0},
    "plastic_scratching_knocking": {"family": "scratch_knock", "band": (0.012, 0.022), "rate": 2.0},
    "normal_environmental_noise":  {"family": "ambient", "band": (0.0, 0.35), "rate": 0.0},
    "high_risk_danger":            {"family": "sweep", "band": (0.001, 0.012), "rate": 0.5},
}


@dataclass
class EventSpec:
    class_id: str
    duration: float = 6.0
    seed: int = 0
    loudness: float = 0.0  # relative dB

    def __post_init__(self):
        if self.class_id not in CLASS_REGISTRY:
            raise InputError(f"unknown event class: {self.class_id}")
        if self.duration <= 0:
            raise InputError(f"duration must be positive, got {self.duration}")


@dataclass
class Scene:
    geometry: ArrayGeometry
    events: list[tuple[EventSpec, tuple[float, float], float]]  # (spec, position, onset s)
    duration: float = 6.0
    noise_floor: float = -60.0  # dB rel full scale; -inf disables noise
    seed: int = 0

    def __post_init__(self):
        for spec, pos, onset in self.events:
            if not 0 <= onset < self.duration:
                raise InputError(f"event onset {onset} outside scene duration")
            if pos[1] < 0:
                raise InputError(f"event position {pos} outside the water region (y >= 0)")


def _decaying_burst(rng, n, freq_frac, sample_rate, decay_s, harmonics=3):
    t = np.arange(n) / sample_rate
    f0 = freq_frac * sample_rate / 2.0
    sig = np.zeros(n)
    for k in range(1, harmonics + 1):
        phase = rng.uniform(0, 2 * np.pi)
        sig += np.sin(2 * np.pi * f0 * k * t + phase) / k
    return sig * np.exp(-t / decay_s)


def _bandpass_noise(rng, n, band, sample_rate):
    # FFT-mask white noise to the class band
    x = rng.normal(size=n)
    spec = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    nyq = sample_rate / 2.0
    lo, hi = band[0] * nyq, band[1] * nyq
    spec[(freqs < lo) | (freqs > hi)] = 0.0
    return np.fft.irfft(spec, n)


def synthesize_event(spec: EventSpec, sample_rate: int = 96_000) -> AudioSegment:
    """Deterministic class-signature audio for one event."""
    recipe = CLASS_REGISTRY[spec.class_id]
    rng = np.random.default_rng([RECIPE_VERSION, spec.seed,
                                 zlib.crc32(spec.class_id.encode())])
    n = int(round(spec.duration * sample_rate))
    sig = np.zeros(n)
    family = recipe["family"]
    band = recipe["band"]
    nyq = sample_rate / 2.0

    if family in ("knock", "clank"):
        n_hits = max(1, rng.poisson(recipe["rate"] * spec.duration))
        for _ in range(n_hits):
            start = rng.integers(0, max(1, n - sample_rate // 20))
            burst_n = min(n - start, int(6 * recipe["decay"] * sample_rate))
            f = rng.uniform(*band)
            if family == "clank":
                # inharmonic metallic partials
                t = np.arange(burst_n) / sample_rate
                burst = np.zeros(burst_n)
                for ratio in (1.0, 2.76, 5.40, 8.93):
                    ff = min(f * ratio, 0.95)  # fraction of Nyquist, capped
                    burst += np.sin(2 * np.pi * ff * nyq * t + rng.uniform(0, 2 * np.pi)) / ratio
                burst *= np.exp(-t / recipe["decay"])
            else:
                burst = _decaying_burst(rng, burst_n, f, sample_rate, recipe["decay"])
            sig[start:start + burst_n] += rng.uniform(0.5, 1.0) * burst
    elif family == "bubbles":
        n_bubbles = max(1, rng.poisson(recipe["rate"] * spec.duration))
        for _ in range(n_bubbles):
            start = rng.integers(0, max(1, n - sample_rate // 50))
            dur = rng.uniform(0.004, 0.03)
            burst_n = min(n - start, max(8, int(dur * sample_rate)))
            t = np.arange(burst_n) / sample_rate
            f0 = rng.uniform(*band) * nyq
            f1 = min(f0 * rng.uniform(1.1, 1.6), band[1] * nyq)
            phase = 2 * np.pi * (f0 * t + (f1 - f0) / (2 * dur) * t ** 2)
            env = np.sin(np.pi * np.arange(burst_n) / burst_n) ** 2
            sig[start:start + burst_n] += rng.uniform(0.3, 1.0) * np.sin(phase) * env
    elif family == "scratch":
        noise = _bandpass_noise(rng, n, band, sample_rate)
        # irregular stick-slip envelope
        n_env = max(4, int(recipe["rate"] * spec.duration * 4))
        env_pts = rng.uniform(0.05, 1.0, n_env)
        env = np.interp(np.linspace(0, 1, n), np.linspace(0, 1, n_env), env_pts)
        sig = noise * env
    elif family == "scratch_knock":
        scratch = EventSpec("plastic_scratching", spec.duration, spec.seed + 101, 0.0)
        knock = EventSpec("knocking_plastic", spec.duration, spec.seed + 202, 0.0)
        sig = (0.6 * synthesize_event(scratch, sample_rate).samples
               + synthesize_event(knock, sample_rate).samples)
    elif family == "ambient":
        # pink-ish broadband with slow level wander
        x = rng.normal(size=n)
        spec_f = np.fft.rfft(x)
        freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
        spec_f /= np.sqrt(np.maximum(freqs, 1.0))
        spec_f[freqs > band[1] * nyq] = 0.0
        sig = np.fft.irfft(spec_f, n)
        wander = np.interp(np.linspace(0, 1, n), np.linspace(0, 1, 8),
                           rng.uniform(0.4, 1.0, 8))
        sig *= wander
    elif family == "sweep":
        t = np.arange(n) / sample_rate
        f0, f1 = band[0] * nyq, band[1] * nyq
        reps = max(1, int(recipe["rate"] * spec.duration))
        period = spec.duration / reps
        tt = t % period
        phase = 2 * np.pi * (f0 * tt + (f1 - f0) / (2 * period) * tt ** 2)
        sig = np.sin(phase)
        sig += 0.4 * _bandpass_noise(rng, n, (band[0], band[1] * 3), sample_rate)
    else:  # pragma: no cover
        raise InputError(f"unknown recipe family: {family}")

    peak = np.abs(sig).max()
    if peak > 0:
        sig = sig / peak
    sig *= 10.0 ** (spec.loudness / 20.0)
    return AudioSegment(sig, sample_rate, spec.duration, channel_id="source")


def render_scene(scene: Scene, sample_rate: int = 96_000) -> dict[str, AudioSegment]:
    """Propagate each event to every hydrophone (delay + 1/r attenuation)
    and add seeded Gaussian noise at the configured floor."""
    n = int(round(scene.duration * sample_rate))
    rng = np.random.default_rng(scene.seed)
    channels = {hid: np.zeros(n) for hid in scene.geometry.positions}
    v = scene.geometry.speed_of_sound
    for spec, pos, onset in scene.events:
        src = synthesize_event(spec, sample_rate).samples
        pos = np.asarray(pos, dtype=np.float64)
        for hid in scene.geometry.positions:
            dist = float(np.linalg.norm(pos - scene.geometry.position(hid)))
            delay = dist / v
            start = int(round((onset + delay) * sample_rate))
            att = 1.0 / max(dist, 1.0)
            end = start + len(src)
            if end > n:
                warnings.warn(
                    f"event {spec.class_id} truncated on {hid}: "
                    f"ends at {end / sample_rate:.2f}s of a {scene.duration}s scene")
                end = n
            if start < n:
                channels[hid][start:end] += att * src[: end - start]
    if np.isfinite(scene.noise_floor):
        sigma = 10.0 ** (scene.noise_floor / 20.0)
        for hid in channels:
            channels[hid] += rng.normal(0.0, sigma, n)
    return {hid: AudioSegment(sig, sample_rate, scene.duration, channel_id=hid)
            for hid, sig in channels.items()}


@dataclass
class AcquisitionReport:
    invocations: int
    timestamps: list[float]      # virtual completion time of each buffer
    results: list
    max_backlog: int
    dropped: int


def acquisition_loop(stream, handler, sample_rate: int, duration: float = 6.0,
                     queue_capacity: int = 4, handler_latency=None,
                     channel_id: str = "H1") -> AcquisitionReport:
    """Virtual-time buffered acquisition: one handler call per full buffer.

    Buffers become ready at k * duration on a simulated clock; the handler
    runs sequentially, taking handler_latency(segment) virtual seconds
    (0 when not given). When the bounded queue is full an arriving buffer
    is dropped and BufferOverrunError is raised after the stream ends.
    """
    if queue_capacity < 1:
        raise ConfigurationError("queue_capacity must be >= 1")
    seg = StreamSegmenter(sample_rate, duration, channel_id)
    buffers = []
    for chunk in stream:
        buffers.extend(seg.push(chunk))

    results = []
    timestamps = []
    queue: list[tuple[float, AudioSegment]] = []
    busy_until = 0.0
    max_backlog = 0
    dropped = 0

    def drain(now: float):
        nonlocal busy_until
        while queue and queue[0][0] <= now and busy_until <= now:
            arrival, buf = queue.pop(0)
            start = max(arrival, busy_until)
            latency = handler_latency(buf) if handler_latency else 0.0
            busy_until = start + latency
            results.append(handler(buf))
            timestamps.append(busy_until)

    for k, buf in enumerate(buffers):
        arrival = (k + 1) * duration
        drain(arrival)
        if len(queue) >= queue_capacity and busy_until > arrival:
            dropped += 1
            continue
        queue.append((arrival, buf))
        max_backlog = max(max_backlog, len(queue))
    # stream ended; let the handler finish the backlog
    while queue:
        arrival, buf = queue.pop(0)
        start = max(arrival, busy_until)
        latency = handler_latency(buf) if handler_latency else 0.0
        busy_until = start + latency
        results.append(handler(buf))
        timestamps.append(busy_until)

    if dropped:
        raise BufferOverrunError(dropped)
    return AcquisitionReport(invocations=len(results), timestamps=timestamps,
                             results=results, max_backlog=max_backlog, dropped=dropped)

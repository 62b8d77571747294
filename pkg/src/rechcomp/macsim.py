"""Multiple-access channel with channel-inversion power control and AWGN."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelModel:
    """Per-node, per-slot fading. ``ideal`` has unit gains.

    ``amplitude_cap`` optionally limits |p|; capped nodes arrive with gain
    ``h * p < 1`` instead of 1. Off by default.
    """

    mode: str = "ideal"
    fade_floor: float = 1e-3
    amplitude_cap: float | None = None

    def __post_init__(self):
        if self.mode not in ("ideal", "rayleigh"):
            raise ValueError(f"unknown channel mode {self.mode!r}")
        if self.mode == "rayleigh" and not self.fade_floor > 0:
            raise ValueError("fade_floor must be positive in rayleigh mode")

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.mode == "ideal":
            return np.ones(shape, dtype=complex)
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@dataclass(frozen=True)
class NoiseModel:
    """Circular complex AWGN; ``sigma_z**2`` is the total variance (half per component)."""

    sigma_z: float = 0.0

    def __post_init__(self):
        if self.sigma_z < 0:
            raise ValueError("sigma_z must be non-negative")

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        return self.sigma_z * complex_normal(rng, shape)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circular complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def power_control(h, fade_floor: float = 0.0):
    """Channel-inversion precoder ``p = conj(h) / |h|^2``; works elementwise.

    Gains below ``fade_floor`` are logged as deep fades but still inverted.
    """
    h = np.asarray(h, dtype=complex)
    mag2 = h.real**2 + h.imag**2
    if np.any(mag2 == 0):
        raise ValueError("cannot invert a zero channel gain")
    deep = np.sqrt(mag2) < fade_floor
    if np.any(deep):
        log.info("deep fade on %d node-slot(s): |h| < %g", int(deep.sum()), fade_floor)
    p = np.conj(h) / mag2
    return p[()] if p.ndim == 0 else p


def effective_gains(channel: ChannelModel, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per node-slot (gain after power control, transmit amplitude factor |p|).

    Inversion makes the gain exactly one unless the optional amplitude cap
    clips |p|, in which case the clipped node arrives at ``|h| * cap``.
    """
    p = power_control(h, channel.fade_floor)
    amp = np.abs(p)
    gain = np.ones(h.shape, dtype=complex)
    if channel.amplitude_cap is not None:
        capped = amp > channel.amplitude_cap
        if np.any(capped):
            p_cap = p * (channel.amplitude_cap / amp)
            gain = np.where(capped, h * p_cap, gain)
            amp = np.minimum(amp, channel.amplitude_cap)
    return gain, amp


def transmitted_symbols(x: np.ndarray, C: np.ndarray, levels, Q: int) -> np.ndarray:
    """Per node and slot symbols ``x[kQ + q_k] * C[kQ + q_k, l]``; levels (..., K) -> (..., K, L)."""
    levels = np.asarray(levels)
    K = levels.shape[-1]
    idx = levels + np.arange(K) * Q
    return np.asarray(x)[idx][..., None] * np.asarray(C)[idx]


def simulate(
    x: np.ndarray,
    C: np.ndarray,
    levels,
    Q: int,
    channel: ChannelModel | None = None,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Received sequence(s) for level tuple(s) ``levels`` (K,) or (T, K) -> (L,) or (T, L)."""
    channel = channel or ChannelModel()
    noise = noise or NoiseModel()
    rng = rng if rng is not None else np.random.default_rng()
    levels = np.asarray(levels)
    K = levels.shape[-1]
    if np.any(levels < 0) or np.any(levels >= Q):
        raise ValueError("level index out of range")
    if np.asarray(x).shape[0] != K * Q or np.asarray(C).shape[0] != K * Q:
        raise ValueError("x and C must have K * Q rows")
    s = transmitted_symbols(x, C, levels, Q)
    if channel.mode != "ideal":
        h = channel.draw(rng, s.shape)
        gain, _ = effective_gains(channel, h)
        s = s * gain
    y = s.sum(axis=-2)
    if noise.sigma_z > 0:
        y = y + noise.draw(rng, y.shape)
    return y


def sigma_from_snr(x: np.ndarray, snr_db: float) -> float:
    """Noise level for ``SNR = 20 log10(|x|_2 / sigma_z)``."""
    norm = float(np.linalg.norm(x))
    if norm == 0:
        raise ValueError("SNR is undefined for an all-zero modulation vector")
    return norm * 10.0 ** (-snr_db / 20.0)


def snr_from_sigma(x: np.ndarray, sigma_z: float) -> float:
    return 20.0 * np.log10(float(np.linalg.norm(x)) / sigma_z)

"""Chaotic modulation of wavelet detail bands and full image enhancement.

Each selected detail coefficient, visited in canonical order (finest level
first; lh, hl, hh within a level; row-major within a band), receives
``m[k] * scale`` where m is the modulation sequence. The approximation band
is never touched.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import chaos
from .chaos import ChaosState, ChuaParams
from .errors import InvalidInputError
from .wavelet import FilterBank, WaveletPyramid, dwt2d_forward, dwt2d_inverse


@dataclass(frozen=True)
class ModulationConfig:
    scale: float = 0.01
    level_mask: frozenset[int] | None = None  # None selects every level
    chaos_step: float = chaos.DEFAULT_STEP
    chaos_burn_in: int = chaos.DEFAULT_BURN_IN
    chaos_initial: ChaosState = chaos.DEFAULT_INITIAL
    chaos_stride: int = 1
    normalize_sequence: bool = False

    def __post_init__(self):
        if self.scale < 0:
            raise InvalidInputError("scale must be >= 0")

    def selects(self, level: int) -> bool:
        return self.level_mask is None or level in self.level_mask


def modulate_pyramid(
    pyramid: WaveletPyramid, m, config: ModulationConfig
) -> WaveletPyramid:
    """Add ``m[k] * scale`` to the selected detail coefficients.

    ``m`` must cover every selected coefficient; the running index k
    advances only over selected bands.
    """
    if config.level_mask is not None and not config.level_mask <= set(
        range(1, pyramid.levels + 1)
    ):
        raise InvalidInputError(
            f"level_mask {sorted(config.level_mask)} outside 1..{pyramid.levels}"
        )
    m = np.asarray(m, dtype=np.float64)
    needed = pyramid.detail_count(config.level_mask)
    if m.size < needed:
        raise InvalidInputError(
            f"modulation sequence has {m.size} values, {needed} required"
        )
    out = pyramid.copy()
    k = 0
    for level, triple in enumerate(out.details, start=1):
        if not config.selects(level):
            continue
        for band in triple:
            band += config.scale * m[k : k + band.size].reshape(band.shape)
            k += band.size
    return out


@lru_cache(maxsize=8)
def _cached_sequence(params, initial, step, burn_in, stride, normalize, n):
    traj = chaos.integrate(
        initial, params, step_size=step, burn_in=burn_in, n_samples=n, stride=stride
    )
    seq = chaos.modulation_sequence(traj, n, normalize=normalize)
    seq.flags.writeable = False
    return seq


def modulation_for(pyramid: WaveletPyramid, config: ModulationConfig, params: ChuaParams):
    """Chaos sequence sized for the pyramid's selected detail bands.

    Every image restarts from the same initial state, so the sequence is a
    pure function of (params, config, length) and is cached across calls.
    """
    n = pyramid.detail_count(config.level_mask)
    return _cached_sequence(
        params,
        tuple(config.chaos_initial),
        config.chaos_step,
        config.chaos_burn_in,
        config.chaos_stride,
        config.normalize_sequence,
        n,
    )


def enhance_image(
    image,
    bank: FilterBank,
    levels: int,
    config: ModulationConfig,
    params: ChuaParams,
) -> np.ndarray:
    """Forward transform, modulate details, reconstruct. Shape-preserving."""
    pyramid = dwt2d_forward(image, bank, levels)
    m = modulation_for(pyramid, config, params)
    return dwt2d_inverse(modulate_pyramid(pyramid, m, config), bank)


def difference_map(original, enhanced) -> np.ndarray:
    """Element-wise absolute difference of two equal-shape images."""
    a = np.asarray(original, dtype=np.float64)
    b = np.asarray(enhanced, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch: {a.shape} vs {b.shape}")
    return np.abs(b - a)

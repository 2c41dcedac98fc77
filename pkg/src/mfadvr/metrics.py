"""Image-quality scores against a reference rendering: MSE, PSNR, SSIM, heatmaps.

All scores use the RGB channels only; alpha is ignored because images are
compared as displayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ConfigError
from .image import ImageRGBA

__all__ = ["QualityReport", "mse", "psnr", "ssim", "luminance", "error_heatmap", "compare"]

PSNR_IDENTICAL = math.inf
LUMA = np.array([0.299, 0.587, 0.114])
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
C1 = (0.01 * 255) ** 2
C2 = (0.03 * 255) ** 2


def _same_size(a: ImageRGBA, b: ImageRGBA) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ConfigError(f"image sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")


def mse(a: ImageRGBA, b: ImageRGBA) -> float:
    """Mean squared 8-bit difference over all pixels and RGB channels."""
    _same_size(a, b)
    d = a.rgb.astype(np.float64) - b.rgb.astype(np.float64)
    return float(np.mean(d * d))


def psnr_from_mse(e: float) -> float:
    return PSNR_IDENTICAL if e == 0 else 10.0 * math.log10(255.0**2 / e)


def psnr(a: ImageRGBA, b: ImageRGBA) -> float:
    """Peak signal-to-noise ratio in dB; identical images give ``inf``."""
    return psnr_from_mse(mse(a, b))


def luminance(img: ImageRGBA) -> np.ndarray:
    return img.rgb.astype(np.float64) @ LUMA


def _gaussian_taps() -> np.ndarray:
    r = SSIM_WINDOW // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * SSIM_SIGMA**2))
    return g / g.sum()


def _window_mean(x: np.ndarray) -> np.ndarray:
    # separable Gaussian, kept only where the window fits inside the image
    g = _gaussian_taps()
    r = SSIM_WINDOW // 2
    y = correlate1d(correlate1d(x, g, axis=0, mode="constant"), g, axis=1, mode="constant")
    return y[r:-r, r:-r]


def ssim_map(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Local SSIM of two grayscale arrays at every full-window position."""
    if x.shape[0] < SSIM_WINDOW or x.shape[1] < SSIM_WINDOW:
        raise ConfigError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {x.shape[1]}x{x.shape[0]}")
    mx = _window_mean(x)
    my = _window_mean(y)
    vx = _window_mean(x * x) - mx * mx
    vy = _window_mean(y * y) - my * my
    cxy = _window_mean(x * y) - mx * my
    return ((2 * mx * my + C1) * (2 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2))


def ssim(a: ImageRGBA, b: ImageRGBA) -> float:
    """Mean SSIM of the luminance images (11x11 Gaussian window, sigma 1.5)."""
    _same_size(a, b)
    return float(np.mean(ssim_map(luminance(a), luminance(b))))


def _hot(e: np.ndarray) -> np.ndarray:
    """Black -> red -> yellow -> white as ``e`` goes 0 -> 1."""
    return np.stack([np.clip(3 * e, 0, 1), np.clip(3 * e - 1, 0, 1), np.clip(3 * e - 2, 0, 1)], axis=-1)


def error_heatmap(a: ImageRGBA, b: ImageRGBA) -> ImageRGBA:
    """Per-pixel RGB distance, normalized by the largest possible one, through a hot colormap."""
    _same_size(a, b)
    d = a.rgb.astype(np.float64) - b.rgb.astype(np.float64)
    e = np.sqrt(np.sum(d * d, axis=-1)) / (255.0 * math.sqrt(3.0))
    rgb = np.floor(_hot(e) * 255.0 + 0.5).astype(np.uint8)
    return ImageRGBA.from_rgb(rgb)


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr: float
    ssim: float

    def line(self) -> str:
        return f"mse={self.mse:.6f} psnr={_fmt(self.psnr)} ssim={self.ssim:.6f}"


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def compare(a: ImageRGBA, b: ImageRGBA) -> QualityReport:
    e = mse(a, b)
    return QualityReport(e, psnr_from_mse(e), ssim(a, b))

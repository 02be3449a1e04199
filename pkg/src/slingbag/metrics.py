"""Image-quality metrics: SSIM, SNR and CNR."""

import math
import warnings

import numpy as np
from scipy.signal import correlate2d

from ._validation import check_same_shape


class DegenerateMetricWarning(RuntimeWarning):
    """A metric's denominator vanished; the returned value is infinite."""


def gaussian_window(size=11, sigma=1.5):
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def _normalize(img):
    img = np.asarray(img, dtype=np.float64)
    peak = img.max()
    return img / peak if peak > 0 else img


def ssim(a, b, normalize=True, win_size=11, sigma=1.5, k1=0.01, k2=0.03, data_range=1.0):
    """Mean SSIM over all fully contained ``win_size`` windows.

    Both images are first divided by their own maximum (``normalize``).
    Local statistics use a normalized Gaussian window (weights sum to one),
    so variances are the plain weighted ones.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b, "images")
    if a.ndim != 2:
        raise ValueError("ssim expects 2-D images")
    if min(a.shape) < win_size:
        raise ValueError(f"images must be at least {win_size} pixels on each side")
    if normalize:
        a, b = _normalize(a), _normalize(b)
    w = gaussian_window(win_size, sigma)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    def filt(x):
        return correlate2d(x, w, mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def _masked(img, *masks):
    img = np.asarray(img, dtype=np.float64)
    out = []
    for m in masks:
        m = np.asarray(m, dtype=bool)
        check_same_shape(img, m, "image and mask")
        if not m.any():
            raise ValueError("masks must be nonempty")
        out.append(img[m])
    if np.any(np.asarray(masks[0], bool) & np.asarray(masks[1], bool)):
        raise ValueError("masks must be disjoint")
    return out


def snr(img, signal_mask, noise_mask):
    """``20 log10(mean(signal) / std(noise))`` in dB.

    A zero noise standard deviation returns ``inf`` and emits a
    :class:`DegenerateMetricWarning`.
    """
    sig, noise = _masked(img, signal_mask, noise_mask)
    sd = noise.std()
    mean = sig.mean()
    if sd == 0:
        warnings.warn("noise region is constant; SNR is infinite", DegenerateMetricWarning,
                      stacklevel=2)
        return math.inf
    if mean <= 0:
        return -math.inf
    return 20.0 * math.log10(mean / sd)


def cnr(img, signal_mask, background_mask):
    """``(mean(signal) - mean(background)) / std(background)``."""
    sig, bg = _masked(img, signal_mask, background_mask)
    sd = bg.std()
    if sd == 0:
        warnings.warn("background region is constant; CNR is infinite",
                      DegenerateMetricWarning, stacklevel=2)
        return math.inf
    return float((sig.mean() - bg.mean()) / sd)

"""Mean SSIM with an 11x11 Gaussian window (sigma 1.5) over valid windows.

Reads pairs of raw 8-bit images from stdin as lines "w h hexA hexB" and
prints one score per line.
"""

import sys

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def window(size=11, sigma=1.5):
    ax = np.arange(size) - (size - 1) / 2
    g = np.exp(-(ax**2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b):
    w = window()
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2

    def filt(x):
        return np.einsum("ijkl,kl->ij", sliding_window_view(x, w.shape), w)

    mx, my = filt(a), filt(b)
    vx = filt(a * a) - mx * mx
    vy = filt(b * b) - my * my
    cxy = filt(a * b) - mx * my
    s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2))
    return float(s.mean())


for line in sys.stdin:
    w, h, ha, hb = line.split()
    w, h = int(w), int(h)
    a = np.frombuffer(bytes.fromhex(ha), dtype=np.uint8).reshape(h, w).astype(np.float64)
    b = np.frombuffer(bytes.fromhex(hb), dtype=np.uint8).reshape(h, w).astype(np.float64)
    print(f"{ssim(a, b):.12f}")

"""FFT entry points with a configurable worker count.

pocketfft computes identical results for any worker count (rows are
transformed independently), so changing workers affects speed only.
"""

import scipy.fft as _sfft

_WORKERS = 1


def set_workers(n: int):
    global _WORKERS
    if n < 1:
        raise ValueError("worker count must be >= 1")
    _WORKERS = int(n)


def get_workers() -> int:
    return _WORKERS


def fft2(a):
    return _sfft.fft2(a, workers=_WORKERS)


def ifft2(a):
    return _sfft.ifft2(a, workers=_WORKERS)

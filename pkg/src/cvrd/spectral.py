"""Discrete Fourier/Hilbert transforms and analytic signals.

The Hilbert transform is the usual FFT construction: bins 0 < k < N/2 are
multiplied by -i, bins N/2 < k < N by +i, and the DC bin (plus the Nyquist
bin for even N) is zeroed before transforming back.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ValidationError
from .market_data import ReturnMatrix


def _as_series(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f"expected a 1-d series, got shape {x.shape}")
    if x.size < 2:
        raise InsufficientDataError(f"series needs N >= 2 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("series contains non-finite values")
    return x


def dft(x) -> np.ndarray:
    """Forward DFT ``X[k] = sum_n x[n] exp(-2j*pi*k*n/N)``."""
    return np.fft.fft(_as_series(x))


def idft(X) -> np.ndarray:
    """Inverse of :func:`dft` (complex output, includes the 1/N factor)."""
    return np.fft.ifft(np.asarray(X, dtype=complex))


def hilbert_multiplier(n: int) -> np.ndarray:
    """Frequency response ``-i*sgn(f)`` with DC and Nyquist bins set to zero."""
    h = np.zeros(n, dtype=complex)
    half = (n + 1) // 2  # first negative-frequency bin for odd n; Nyquist for even n
    h[1:half] = -1j
    h[n // 2 + 1:] = 1j
    return h


def discrete_hilbert(x) -> np.ndarray:
    """Discrete Hilbert transform of a real series, returned as a real array."""
    x = _as_series(x)
    y = np.fft.ifft(np.fft.fft(x) * hilbert_multiplier(x.size))
    return y.real.copy()


def analytic_signal(x) -> np.ndarray:
    """``z = x + i*H[x]``; the real part is the input, unchanged."""
    x = _as_series(x)
    z = np.empty(x.size, dtype=complex)
    z.real = x
    z.imag = discrete_hilbert(x)
    return z


@dataclass(frozen=True, eq=False)
class AnalyticMatrix:
    """Column-wise analytic signals of a return window.

    ``means`` holds the column means removed before the transform (zeros
    when centering is off).
    """

    values: np.ndarray
    assets: tuple
    means: np.ndarray
    centered: bool

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim != 2:
            raise ValidationError(f"analytic matrix must be 2-d, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("analytic matrix contains non-finite values")
        v.setflags(write=False)
        m = np.array(self.means, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "assets", tuple(self.assets))

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    def to_csv(self) -> str:
        cols = [f"{a}_{part}" for a in self.assets for part in ("re", "im")]
        lines = [",".join(cols)]
        for row in self.values:
            lines.append(",".join(f"{c.real!r},{c.imag!r}" for c in row))
        return "\n".join(lines) + "\n"


def analytic_matrix(returns, centering: bool = True, assets=None) -> AnalyticMatrix:
    """Apply :func:`analytic_signal` to every column of a return window.

    Parameters
    ----------
    returns : ReturnMatrix or (T, M) array
    centering : bool
        Subtract each column's mean before the transform.
    """
    if isinstance(returns, ReturnMatrix):
        x, assets = returns.returns, returns.assets
    else:
        x = np.asarray(returns, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        assets = tuple(assets) if assets is not None else tuple(f"A{i}" for i in range(x.shape[1]))
    if x.shape[0] < 4:
        raise InsufficientDataError(f"analytic matrix needs a window of >= 4 rows, got {x.shape[0]}")
    if centering:
        # a constant column centres to exact zeros
        means = np.where(np.ptp(x, axis=0) == 0, x[0], x.mean(axis=0))
        x = x - means
    else:
        means = np.zeros(x.shape[1])
    z = np.empty(x.shape, dtype=complex)
    for m in range(x.shape[1]):
        z[:, m] = analytic_signal(x[:, m])
    return AnalyticMatrix(z, assets, means, centering)

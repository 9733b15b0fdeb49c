"""Real and complex covariance estimation and their eigendecompositions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, NotPSDError, NumericalError, ValidationError
from .market_data import ReturnMatrix
from .spectral import AnalyticMatrix

HERMITIAN_TOL = 1e-12
PSD_RTOL = 1e-10
RECONSTRUCTION_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class HermitianCovariance:
    """Covariance matrix of kind ``"real"`` (symmetric) or ``"complex"`` (Hermitian)."""

    matrix: np.ndarray
    kind: str
    sample_count: int
    assets: tuple = ()

    def __post_init__(self):
        if self.kind not in ("real", "complex"):
            raise ValidationError(f"kind must be 'real' or 'complex', got {self.kind!r}")
        c = np.array(self.matrix, dtype=float if self.kind == "real" else complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValidationError(f"covariance must be square, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValidationError("covariance contains non-finite entries")
        if np.max(np.abs(c - c.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValidationError("covariance is not Hermitian to 1e-12")
        d = np.diag(c)
        if np.any(d.real < 0) or np.any(np.abs(np.imag(d)) > HERMITIAN_TOL):
            raise ValidationError("covariance diagonal must be real and >= 0")
        c.setflags(write=False)
        object.__setattr__(self, "matrix", c)
        assets = tuple(self.assets) or tuple(f"A{i}" for i in range(c.shape[0]))
        object.__setattr__(self, "assets", assets)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def to_csv(self) -> str:
        if self.kind == "real":
            lines = [",".join(("", *self.assets))]
            for a, row in zip(self.assets, self.matrix):
                lines.append(",".join((a, *(repr(float(x)) for x in row))))
        else:
            cols = [f"{a}_{p}" for a in self.assets for p in ("re", "im")]
            lines = [",".join(("", *cols))]
            for a, row in zip(self.assets, self.matrix):
                lines.append(",".join((a, *(f"{x.real!r},{x.imag!r}" for x in row))))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues (descending) and unitary ``U`` with ``U C U^H = diag(eigenvalues)``.

    Rows of ``eigenvectors`` are the (conjugated) eigenvectors; the entry of
    largest modulus in each is real and positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_kind: str

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return U.conj().T @ np.diag(self.eigenvalues) @ U


def _gram(xr, xi=None) -> np.ndarray:
    # real part of Z^T conj(Z); xi None means a purely real matrix
    xr = np.ascontiguousarray(xr)
    g = xr.T @ xr
    if xi is not None:
        xi = np.ascontiguousarray(xi)
        g = g + xi.T @ xi
    return g


def _symmetrize(a):
    return 0.5 * (a + a.conj().T)


def sample_covariance(returns) -> HermitianCovariance:
    """Mean-centred covariance with population divisor (window length)."""
    if isinstance(returns, ReturnMatrix):
        x, assets = returns.returns, returns.assets
    else:
        x = np.asarray(returns, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        assets = ()
    n = x.shape[0]
    if n < 2:
        raise InsufficientDataError(f"covariance needs a window of >= 2 rows, got {n}")
    xc = x - np.where(np.ptp(x, axis=0) == 0, x[0], x.mean(axis=0))
    c = _symmetrize(_gram(xc) / n)
    return HermitianCovariance(c, "real", n, assets)


def complex_covariance(signals) -> HermitianCovariance:
    """``C = (1/N) sum_t z_t z_t^H`` over the rows of an analytic matrix.

    No mean is removed here; centering, if wanted, happens when the analytic
    matrix is built.
    """
    if isinstance(signals, AnalyticMatrix):
        z, assets = signals.values, signals.assets
    else:
        z = np.asarray(signals, dtype=complex)
        if z.ndim == 1:
            z = z[:, None]
        assets = ()
    n = z.shape[0]
    if n < 2:
        raise InsufficientDataError(f"covariance needs a window of >= 2 rows, got {n}")
    xr, xi = np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)
    # entry (j, k) = mean_t z_j conj(z_k)
    re = _gram(xr, xi) / n
    im = (np.ascontiguousarray(xi.T) @ xr - np.ascontiguousarray(xr.T) @ xi) / n
    re = 0.5 * (re + re.T)
    im = 0.5 * (im - im.T)
    c = np.empty(re.shape, dtype=complex)
    c.real = re
    c.imag = im
    return HermitianCovariance(c, "complex", n, assets)


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    # columns are eigenvectors; rotate so the largest-modulus entry is real > 0
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        j = int(np.argmax(np.abs(col)))  # first index on ties
        a = col[j]
        out[:, k] = col * (np.conj(a) / abs(a))
        if np.iscomplexobj(out):
            out[j, k] = abs(a)
    return out


def spectral_decomposition(cov: HermitianCovariance) -> SpectralDecomposition:
    """Eigendecomposition sorted by descending eigenvalue.

    A complex covariance with an identically zero imaginary part is
    decomposed as a real symmetric matrix so that both kinds give the same
    basis. Eigenvalues above ``-1e-10 * max`` are clamped to zero; anything
    lower raises :class:`NotPSDError`.
    """
    c = cov.matrix
    real_path = cov.kind == "real" or not np.any(c.imag)
    a = np.ascontiguousarray(c.real if real_path else c)
    try:
        lam, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(lam, kind="stable")[::-1]
    lam, vecs = lam[order], vecs[:, order]
    lam_max = max(lam[0], 0.0)
    if lam[-1] < -PSD_RTOL * lam_max:
        raise NotPSDError(
            f"eigenvalue {lam[-1]:.3e} below PSD tolerance (max {lam_max:.3e})",
            residual=float(-lam[-1]),
        )
    lam = np.maximum(lam, 0.0)
    vecs = _fix_phase(vecs)
    if cov.kind == "complex":
        vecs = vecs.astype(complex)
    U = vecs.conj().T
    resid = np.max(np.abs(U.conj().T @ np.diag(lam) @ U - c), initial=0.0)
    scale = max(np.max(np.abs(c), initial=0.0), np.finfo(float).tiny)
    if resid > RECONSTRUCTION_RTOL * scale:
        raise NumericalError(
            f"eigendecomposition reconstruction residual {resid:.3e} too large",
            residual=float(resid),
        )
    lam.setflags(write=False)
    U.setflags(write=False)
    return SpectralDecomposition(lam, U, cov.kind)

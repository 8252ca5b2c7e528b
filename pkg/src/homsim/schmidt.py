"""Schmidt decomposition of a joint spectral amplitude, Schmidt number and purity."""

from dataclasses import dataclass

import numpy as np

COEFFICIENT_FLOOR = 1e-12


class NonFiniteDataError(ValueError):
    pass


@dataclass(frozen=True)
class SchmidtResult:
    """Schmidt coefficients (descending, summing to one), K = 1/sum(lambda^2), purity = 1/K."""

    coefficients: np.ndarray
    schmidt_number: float
    purity: float

    @classmethod
    def from_coefficients(cls, coefficients):
        lam = np.sort(np.asarray(coefficients, dtype=float))[::-1]
        if np.any(lam < 0):
            raise ValueError("Schmidt coefficients must be non-negative")
        lam = lam[lam >= COEFFICIENT_FLOOR * lam[0]] if lam.size else lam
        lam = lam / lam.sum()
        gamma = float(np.sum(lam**2))
        return cls(lam, 1.0 / gamma, gamma)


def _amplitude_matrix(jsa):
    f = np.asarray(getattr(jsa, "amplitudes", jsa))
    if not np.all(np.isfinite(f)):
        raise NonFiniteDataError("joint spectral amplitude contains non-finite entries")
    return f


def singular_values_gram(f):
    """Singular values through the Hermitian Gram matrix ``f f^dagger``.

    Cross-check for the direct SVD; loses accuracy for singular values below
    ~1e-8 of the largest, which is irrelevant for K.
    """
    f = np.asarray(f)
    gram = f @ f.conj().T if f.shape[0] <= f.shape[1] else f.conj().T @ f
    w = np.linalg.eigvalsh(gram)
    return np.sqrt(np.clip(w[::-1], 0.0, None))


def schmidt_decompose(jsa):
    """Schmidt coefficients of ``jsa`` (JsaMatrix or complex 2-D array) by complex SVD.

    The uniform grid step only rescales all singular values, so the
    coefficients ``s_n^2 / sum(s_m^2)`` do not depend on it.
    """
    s = np.linalg.svd(_amplitude_matrix(jsa), compute_uv=False)
    return SchmidtResult.from_coefficients(s**2)


def schmidt_modes(jsa, n_modes=None):
    """Coefficients plus signal/idler Schmidt modes (columns) on the grid."""
    u, s, vh = np.linalg.svd(_amplitude_matrix(jsa), full_matrices=False)
    lam = s**2 / np.sum(s**2)
    n = lam.size if n_modes is None else n_modes
    return lam[:n], u[:, :n], vh[:n].conj().T


def purity(result: SchmidtResult):
    """Tr(rho_s^2) of the heralded photon, equal to ``sum(lambda_n**2)``."""
    return float(np.sum(result.coefficients**2))

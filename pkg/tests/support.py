"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from procmat.linalg import CMatrix, PartyLayout, hs_coefficients, hs_compose
from procmat.process import ProcessMatrix, allowed_term_mask


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


def random_valid_process(n: int, seed: int, d_in: int = 2, d_out: int = 2) -> ProcessMatrix:
    """A random process that satisfies every validity constraint with margin.

    Project a random Hermitian matrix onto the allowed-term subspace, strip
    its trace, and mix it into the identity process gently enough to keep the
    spectrum positive.
    """
    layout = PartyLayout(n, d_in, d_out)
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, layout.dim)
    coeffs = hs_coefficients(CMatrix(h, layout.factors))
    coeffs[~allowed_term_mask(layout)] = 0.0
    zero = (0,) * len(layout.factors)
    coeffs[zero] = 0.0  # traceless perturbation; the identity part is added back below
    perturb = hs_compose(coeffs, layout.factors)
    scale = layout.total_output_dim / layout.dim
    lam = float(np.abs(np.linalg.eigvalsh(perturb.mat)).max())
    strength = scale / (2.0 * lam) if lam > 0 else 0.0
    mat = scale * np.eye(layout.dim) + strength * perturb.mat
    return ProcessMatrix(CMatrix(mat, layout.factors), layout)


def forbidden_coeff_norm(mat: CMatrix, layout: PartyLayout) -> float:
    coeffs = hs_coefficients(mat)
    return float(np.sqrt((coeffs[~allowed_term_mask(layout)] ** 2).sum()))

"""Permutation symmetry on process space: twirling, sectors, feasibility.

Relabelling the n laboratories acts on process space by unitaries that move
whole lab blocks. Averaging over the full group (the twirl) projects onto the
permutation-invariant operators. For the sign representations the group
average with characters gives orthogonal projectors onto the symmetric and
antisymmetric subspaces; invariant operators are block diagonal across them.

The feasibility scanner asks whether a symmetry sector can host a valid
process at all: it builds the real vector space of Hermitian matrices that
(a) are supported inside the sector and (b) carry no forbidden terms, and
then maximizes |Tr X| over the unit ball of that space. A maximum of zero
means the trace functional vanishes identically there, and since every valid
process has a fixed positive trace, the sector is empty of valid processes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import (
    CMatrix,
    PartyLayout,
    Permutation,
    apply_lab_permutation,
    hs_coefficients_batch,
    kron_all,
    partial_trace,
    permutation_unitary,
)
from .process import ProcessMatrix, allowed_term_mask

SECTOR_LABELS = ("symmetric", "antisymmetric")


@dataclass(frozen=True, eq=False)
class SectorProjector:
    """Orthogonal projector onto a sign sector of the underlying state space."""

    proj: CMatrix
    label: str
    n: int

    @property
    def rank(self) -> int:
        return int(round(float(np.trace(self.proj.mat).real)))


@dataclass(frozen=True, eq=False)
class ChargeSplit:
    """Diagonal blocks of an invariant operator across the two S_2 sectors."""

    plus: CMatrix
    minus: CMatrix
    cross_norm: float


@dataclass(frozen=True)
class FeasibilityReport:
    label: str
    sector_dim: int
    allowed_subspace_dim: int
    max_trace: float
    feasible: bool


class ProductInvarianceReport(NamedTuple):
    invariant: bool
    all_factors_equal: bool


# ---------------------------------------------------------------------------
# group elements and the twirl
# ---------------------------------------------------------------------------


def enumerate_sn(n: int) -> list[Permutation]:
    """All permutations of n labs in lexicographic order."""
    if not 1 <= n <= 6:
        raise ValueError(f"n must be between 1 and 6, got {n}")
    return [Permutation(p) for p in itertools.permutations(range(n))]


def twirl(a: CMatrix, layout: PartyLayout) -> CMatrix:
    """Group average (1/n!) sum_g U_g a U_g^dag; projects onto invariant operators."""
    group = enumerate_sn(layout.n_parties)
    acc = np.zeros_like(a.mat)
    for g in group:
        acc = acc + apply_lab_permutation(a, g, layout).mat
    return CMatrix(acc / len(group), a.factors)


def is_invariant(a: CMatrix, layout: PartyLayout, tol: float = 1e-9) -> bool:
    """True when every lab permutation moves ``a`` by at most ``tol`` (max norm)."""
    return permutation_deviations(a, layout) <= tol


def permutation_deviations(a: CMatrix, layout: PartyLayout) -> float:
    """max over g of ||U_g a U_g^dag - a|| in entrywise max norm."""
    worst = 0.0
    for g in enumerate_sn(layout.n_parties):
        moved = apply_lab_permutation(a, g, layout)
        worst = max(worst, float(np.abs(moved.mat - a.mat).max()))
    return worst


# ---------------------------------------------------------------------------
# sign sectors
# ---------------------------------------------------------------------------


def sector_projector(label: str, layout: PartyLayout) -> SectorProjector:
    """Projector onto the symmetric or antisymmetric subspace of state space."""
    if label not in SECTOR_LABELS:
        raise ValueError(f"unsupported sector label {label!r}")
    group = enumerate_sn(layout.n_parties)
    dim = layout.dim
    acc = np.zeros((dim, dim))
    for g in group:
        weight = 1.0 if label == "symmetric" else float(g.sign)
        acc += weight * permutation_unitary(g, layout).mat.real
    return SectorProjector(CMatrix(acc / len(group), layout.factors), label, layout.n_parties)


def sector_basis(p: SectorProjector) -> np.ndarray:
    """Orthonormal basis of the sector, returned as columns of a (dim, rank) array."""
    vals, vecs = np.linalg.eigh(p.proj.mat)
    cols = vecs[:, vals > 0.5]
    if cols.shape[1] != p.rank:
        raise RuntimeError("projector spectrum is not clean 0/1")
    return cols


def charge_components(w: ProcessMatrix, tol: float = 1e-9) -> ChargeSplit:
    """Split a swap-invariant two-lab operator into its sector blocks.

    Invariant operators carry no cross-sector blocks, so plus + minus must
    reconstruct the input; a cross norm above ``tol`` signals a non-invariant
    input and is reported as an error rather than silently dropped.
    """
    layout = w.layout
    if layout.n_parties != 2:
        raise ValueError("charge components are defined for the two-lab split")
    p_plus = sector_projector("symmetric", layout).proj.mat
    p_minus = sector_projector("antisymmetric", layout).proj.mat
    m = w.mat.mat
    plus = p_plus @ m @ p_plus
    minus = p_minus @ m @ p_minus
    cross_norm = float(np.abs(m - plus - minus).max())
    if cross_norm > tol:
        raise ValueError(
            f"input is not swap invariant: cross-sector norm {cross_norm:.3e} > {tol:.1e}"
        )
    return ChargeSplit(
        plus=CMatrix(plus, w.mat.factors),
        minus=CMatrix(minus, w.mat.factors),
        cross_norm=cross_norm,
    )


# ---------------------------------------------------------------------------
# sector feasibility
# ---------------------------------------------------------------------------


def _hermitian_sector_stack(basis_cols: np.ndarray) -> np.ndarray:
    """Orthonormal (HS inner product) Hermitian basis of operators P X P = X."""
    dim, r = basis_cols.shape
    out = np.empty((r * r, dim, dim), dtype=np.complex128)
    k = 0
    for i in range(r):
        out[k] = np.outer(basis_cols[:, i], basis_cols[:, i].conj())
        k += 1
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for i in range(r):
        for j in range(i + 1, r):
            e = np.outer(basis_cols[:, i], basis_cols[:, j].conj())
            out[k] = (e + e.conj().T) * inv_sqrt2
            out[k + 1] = 1j * (e - e.conj().T) * inv_sqrt2
            k += 2
    return out


def sector_feasibility(
    label: str, layout: PartyLayout, tol: float = 1e-8
) -> FeasibilityReport:
    """Scan a sector for room to host a valid process.

    ``max_trace`` is the norm of the orthogonal projection of the identity
    (the trace functional's dual vector) onto the subspace of sector-supported
    Hermitian matrices with all forbidden coefficients zero; exact linear
    algebra, no optimizer. ``feasible`` is False when that norm vanishes,
    because valid processes need a strictly positive trace. Intended for
    small layouts (two or three qubit labs); larger inputs are best effort.
    """
    mask = allowed_term_mask(layout)
    if label == "full":
        # the HS term basis itself is an orthonormal Hermitian basis here
        allowed_dim = int(mask.sum())
        max_trace = math.sqrt(layout.dim)  # identity term is always allowed
        return FeasibilityReport(label, layout.dim, allowed_dim, max_trace, max_trace > tol)
    proj = sector_projector(label, layout)
    cols = sector_basis(proj)
    stack = _hermitian_sector_stack(cols)
    coeffs = hs_coefficients_batch(stack, layout.factors)
    if float(np.abs(coeffs.imag).max() if np.iscomplexobj(coeffs) else 0.0) > 1e-10:
        raise RuntimeError("sector basis produced complex HS coefficients")
    constraints = np.real(coeffs)[:, ~mask.ravel()]
    u, s, _ = np.linalg.svd(constraints, full_matrices=True)
    rank_cut = 1e-10 * max(1.0, float(s[0]) if s.size else 0.0)
    rank = int((s > rank_cut).sum())
    null_basis = u[:, rank:]
    traces = np.einsum("kaa->k", stack).real
    max_trace = float(np.linalg.norm(null_basis.T @ traces))
    return FeasibilityReport(
        label=label,
        sector_dim=cols.shape[1],
        allowed_subspace_dim=stack.shape[0] - rank,
        max_trace=max_trace,
        feasible=max_trace > tol,
    )


def sector_partial_trace_check(
    label: str,
    n: int,
    trials: int = 50,
    seed: int = 0,
    d_in: int = 2,
    d_out: int = 2,
    tol: float = 1e-10,
) -> bool:
    """Random check that reducing a sector-supported matrix stays in the sector.

    Draws matrices X with P X P = X on n labs, traces out one lab (chosen per
    trial), and verifies the result is supported in the same-label sector of
    the smaller layout.
    """
    if n < 2:
        raise ValueError("need at least two labs to trace one out")
    layout = PartyLayout(n, d_in, d_out)
    small = PartyLayout(n - 1, d_in, d_out)
    p_big = sector_projector(label, layout).proj.mat
    p_small = sector_projector(label, small).proj.mat
    rng = np.random.default_rng(seed)
    dim = layout.dim
    for _ in range(trials):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h = (g + g.conj().T) / 2
        x = p_big @ h @ p_big
        x /= max(1.0, np.abs(x).max())
        lab = int(rng.integers(n))
        keep = [i for j in range(n) if j != lab for i in layout.lab_factor_indices(j)]
        y = partial_trace(CMatrix(x, layout.factors), keep).mat
        dev = float(np.abs(p_small @ y @ p_small - y).max())
        if dev > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# product-operator invariance
# ---------------------------------------------------------------------------


def product_invariance_check(
    ms: Sequence[CMatrix], layout: PartyLayout, tol: float = 1e-9
) -> ProductInvarianceReport:
    """Report whether a product of per-lab operators is permutation invariant.

    ``all_factors_equal`` compares the factors entrywise. Note the product is
    also invariant when the factors merely agree up to scalars; for instrument
    elements drawn at random that degeneracy never shows up.
    """
    if len(ms) != layout.n_parties:
        raise ValueError(f"need {layout.n_parties} factor matrices, got {len(ms)}")
    block = layout.lab_factors
    for m in ms:
        if m.factors != block:
            raise ValueError(
                f"factor matrix has factors {m.factors}, lab block is {block}"
            )
    joint = kron_all(ms)
    invariant = is_invariant(joint, layout, tol)
    equal = all(
        float(np.abs(ms[0].mat - m.mat).max()) <= tol for m in ms[1:]
    )
    return ProductInvarianceReport(invariant=invariant, all_factors_equal=equal)

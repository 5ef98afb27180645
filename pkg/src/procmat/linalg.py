"""Dense complex linear algebra with tensor-factor bookkeeping.

Every operator in this package is a square matrix on a tensor product of
finite-dimensional factors. :class:`CMatrix` pairs the dense array with the
ordered list of factor dimensions so that Kronecker products, partial traces,
Hilbert-Schmidt decompositions and lab-block permutations can all be expressed
without the caller juggling reshape arithmetic.

Conventions:

* matrices are complex128 and immutable (the backing array is write-locked),
* the Hilbert-Schmidt basis on each factor is Hermitian, starts with the
  identity, is traceless beyond index 0, and satisfies Tr[s_i s_j] = d * d_ij,
* for a two-dimensional factor the basis is exactly (1, x, y, z),
* permutations of laboratories move whole lab blocks, with each input factor
  staying attached to its output factor (and frame factors, when present).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

#: absolute tolerance on max|M - M^dag| below which a matrix counts as Hermitian
HERMITICITY_ATOL = 1e-9


# ---------------------------------------------------------------------------
# core value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CMatrix:
    """A dense complex square matrix tagged with its tensor-factor dimensions."""

    mat: np.ndarray
    factors: tuple[int, ...]

    def __post_init__(self):
        arr = np.array(self.mat, dtype=np.complex128, copy=True, order="C")
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        factors = tuple(int(f) for f in self.factors)
        if any(f < 1 for f in factors):
            raise ValueError(f"factor dimensions must be positive, got {factors}")
        if math.prod(factors) != arr.shape[0]:
            raise ValueError(
                f"factors {factors} multiply to {math.prod(factors)}, "
                f"but the matrix has dimension {arr.shape[0]}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def max_abs(self) -> float:
        """Largest entry magnitude."""
        return float(np.abs(self.mat).max()) if self.dim else 0.0

    def is_hermitian(self, atol: float = HERMITICITY_ATOL) -> bool:
        return float(np.abs(self.mat - self.mat.conj().T).max()) <= atol

    def hermitized(self) -> "CMatrix":
        """Return (M + M^dag)/2 with the same factors."""
        return CMatrix((self.mat + self.mat.conj().T) / 2.0, self.factors)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))


@dataclass(frozen=True)
class FrameSpec:
    """Reference-frame factor dimensions attached to every laboratory."""

    d_in: int
    d_out: int = 1

    def __post_init__(self):
        if self.d_in < 1 or self.d_out < 1:
            raise ValueError("frame dimensions must be positive")


@dataclass(frozen=True)
class PartyLayout:
    """Tensor-factor layout for n laboratories with uniform local dimensions.

    The canonical factor order is lab by lab: the lab's input factor, its
    output factor, then (if a frame is attached) the frame input and frame
    output factors.
    """

    n_parties: int
    d_in: int
    d_out: int
    frame: FrameSpec | None = None

    def __post_init__(self):
        if self.n_parties < 1:
            raise ValueError("need at least one laboratory")
        if self.d_in < 1 or self.d_out < 1:
            raise ValueError("local dimensions must be positive")

    @property
    def factors_per_lab(self) -> int:
        return 2 if self.frame is None else 4

    @property
    def lab_factors(self) -> tuple[int, ...]:
        """Factor dimensions of a single lab block, in canonical order."""
        if self.frame is None:
            return (self.d_in, self.d_out)
        return (self.d_in, self.d_out, self.frame.d_in, self.frame.d_out)

    @property
    def factors(self) -> tuple[int, ...]:
        return self.lab_factors * self.n_parties

    @property
    def block_dim(self) -> int:
        return math.prod(self.lab_factors)

    @property
    def dim(self) -> int:
        return self.block_dim**self.n_parties

    @property
    def total_output_dim(self) -> int:
        """Product of every output-side factor dimension (system and frame)."""
        per_lab = self.d_out * (1 if self.frame is None else self.frame.d_out)
        return per_lab**self.n_parties

    def lab_factor_indices(self, lab: int) -> tuple[int, ...]:
        k = self.factors_per_lab
        self._check_lab(lab)
        return tuple(range(lab * k, (lab + 1) * k))

    def input_factor_indices(self, lab: int) -> tuple[int, ...]:
        """Global indices of a lab's input-side factors."""
        k = self.factors_per_lab
        self._check_lab(lab)
        return (lab * k,) if self.frame is None else (lab * k, lab * k + 2)

    def output_factor_indices(self, lab: int) -> tuple[int, ...]:
        """Global indices of a lab's output-side factors."""
        k = self.factors_per_lab
        self._check_lab(lab)
        return (lab * k + 1,) if self.frame is None else (lab * k + 1, lab * k + 3)

    def system_factor_indices(self) -> tuple[int, ...]:
        """Global indices of the system factors of every lab, in order."""
        k = self.factors_per_lab
        return tuple(
            lab * k + off for lab in range(self.n_parties) for off in (0, 1)
        )

    def with_frame(self, d_frame_out: int = 1) -> "PartyLayout":
        """Attach per-lab reference-frame factors (frame input dim = n)."""
        if self.frame is not None:
            raise ValueError("layout already carries a frame")
        return PartyLayout(
            self.n_parties, self.d_in, self.d_out,
            FrameSpec(self.n_parties, d_frame_out),
        )

    def without_frame(self) -> "PartyLayout":
        return PartyLayout(self.n_parties, self.d_in, self.d_out, None)

    def _check_lab(self, lab: int):
        if not 0 <= lab < self.n_parties:
            raise IndexError(f"lab index {lab} out of range for {self.n_parties} labs")


@dataclass(frozen=True)
class Permutation:
    """A bijection on {0, ..., n-1}, stored as its image tuple."""

    image: tuple[int, ...]

    def __post_init__(self):
        image = tuple(int(i) for i in self.image)
        if sorted(image) != list(range(len(image))):
            raise ValueError(f"{image} is not a permutation of 0..{len(image) - 1}")
        object.__setattr__(self, "image", image)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> "Permutation":
        image = list(range(n))
        image[a], image[b] = image[b], image[a]
        return cls(tuple(image))

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i]

    @property
    def sign(self) -> int:
        """Parity of the permutation: +1 for even, -1 for odd."""
        inversions = sum(
            1
            for i, j in itertools.combinations(range(self.n), 2)
            if self.image[i] > self.image[j]
        )
        return -1 if inversions % 2 else 1

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, gi in enumerate(self.image):
            inv[gi] = i
        return Permutation(tuple(inv))

    def __mul__(self, other: "Permutation") -> "Permutation":
        """Composition g * h: apply h first, then g."""
        if self.n != other.n:
            raise ValueError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.image[other.image[i]] for i in range(self.n)))


@dataclass(frozen=True)
class HSBasis:
    """Hermitian operator basis with s_0 = 1, traceless rest, Tr[s_i s_j] = d d_ij."""

    d: int
    ops: tuple[np.ndarray, ...]


# ---------------------------------------------------------------------------
# tensor algebra
# ---------------------------------------------------------------------------


def kron(a: CMatrix, b: CMatrix) -> CMatrix:
    """Tensor product; factor lists concatenate."""
    return CMatrix(np.kron(a.mat, b.mat), a.factors + b.factors)


def kron_all(mats: Sequence[CMatrix]) -> CMatrix:
    if not mats:
        raise ValueError("need at least one matrix")
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


def partial_trace(m: CMatrix, keep: Iterable[int]) -> CMatrix:
    """Trace out every factor not listed in ``keep`` (original order preserved)."""
    k = len(m.factors)
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= k for i in keep):
        raise IndexError(f"keep indices {keep} out of range for {k} factors")
    tensor = m.mat.reshape(m.factors + m.factors)
    # traced factors share a row/col label, kept factors keep distinct ones
    subs_in = list(range(k)) + [k + i if i in keep else i for i in range(k)]
    out = [i for i in keep] + [k + i for i in keep]
    reduced = np.einsum(tensor, subs_in, out)
    new_factors = tuple(m.factors[i] for i in keep)
    d = math.prod(new_factors) if new_factors else 1
    return CMatrix(reduced.reshape(d, d), new_factors)


def reorder_factors(m: CMatrix, order: Sequence[int]) -> CMatrix:
    """Permute tensor factors so that new factor i is old factor ``order[i]``."""
    k = len(m.factors)
    order = [int(i) for i in order]
    if sorted(order) != list(range(k)):
        raise ValueError(f"{order} is not a permutation of the {k} factors")
    tensor = m.mat.reshape(m.factors + m.factors)
    axes = order + [k + i for i in order]
    out = np.ascontiguousarray(np.transpose(tensor, axes=axes)).reshape(m.dim, m.dim)
    return CMatrix(out, tuple(m.factors[i] for i in order))


# ---------------------------------------------------------------------------
# Hilbert-Schmidt basis and transforms
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _basis_stack(d: int) -> np.ndarray:
    """All d*d basis ops as one (d^2, d, d) array; d = 1 yields the scalar [1]."""
    if d < 1:
        raise ValueError("dimension must be positive")
    if d == 1:
        return np.ones((1, 1, 1), dtype=np.complex128)
    ops = [np.eye(d, dtype=np.complex128)]
    scale = math.sqrt(d / 2.0)
    pairs = [(j, l) for j in range(d) for l in range(j + 1, d)]
    for j, l in pairs:
        sym = np.zeros((d, d), dtype=np.complex128)
        sym[j, l] = sym[l, j] = scale
        ops.append(sym)
    for j, l in pairs:
        asym = np.zeros((d, d), dtype=np.complex128)
        asym[j, l] = -1j * scale
        asym[l, j] = 1j * scale
        ops.append(asym)
    for l in range(1, d):
        diag = np.zeros(d, dtype=np.complex128)
        diag[:l] = 1.0
        diag[l] = -l
        ops.append(np.diag(diag) * math.sqrt(d / (l * (l + 1))))
    stack = np.array(ops)
    stack.setflags(write=False)
    return stack


def hs_basis(d: int) -> HSBasis:
    """Hermitian basis for d x d operators, normalized to Tr[s_i s_j] = d d_ij.

    For d = 2 this is exactly (identity, x, y, z). For larger d the traceless
    part is the generalized Gell-Mann family (symmetric pairs, antisymmetric
    pairs, then diagonal ops), rescaled from the usual Tr = 2 convention.
    """
    if d < 2:
        raise ValueError(f"Hilbert-Schmidt basis needs d >= 2, got {d}")
    stack = _basis_stack(d)
    return HSBasis(d, tuple(stack[i] for i in range(stack.shape[0])))


def _require_hermitian(m: CMatrix, what: str):
    dev = float(np.abs(m.mat - m.mat.conj().T).max())
    if dev > HERMITICITY_ATOL:
        raise ValueError(f"{what} requires a Hermitian matrix (deviation {dev:.3e})")


def hs_coefficients(m: CMatrix) -> np.ndarray:
    """Real coefficient tensor w with m = sum_t w[t] * (tensor of basis ops).

    The output has shape ``(f_0^2, ..., f_k^2)`` and w[t] = Tr[m s_t] / dim.
    Requires a Hermitian input; the (tiny) imaginary parts are checked and
    dropped.
    """
    _require_hermitian(m, "Hilbert-Schmidt decomposition")
    k = len(m.factors)
    tensor = m.mat.reshape(m.factors + m.factors)
    args: list = [tensor, list(range(2 * k))]
    for f, d in enumerate(m.factors):
        # basis op entry s_i[b_f, a_f] pairs row a_f (label f) with col b_f (label k+f)
        args += [_basis_stack(d), [2 * k + f, k + f, f]]
    args.append([2 * k + f for f in range(k)])
    w = np.einsum(*args, optimize="greedy") / m.dim
    imag_max = float(np.abs(w.imag).max()) if w.size else 0.0
    if imag_max > 1e-10:
        raise ValueError(f"coefficients unexpectedly complex (max imag {imag_max:.3e})")
    return np.ascontiguousarray(w.real)


def hs_coefficients_batch(mats: np.ndarray, factors: Sequence[int]) -> np.ndarray:
    """Coefficient tensors for a stack of matrices, flattened to (batch, n_terms)."""
    factors = tuple(int(f) for f in factors)
    k = len(factors)
    dim = math.prod(factors)
    batch = mats.shape[0]
    tensor = mats.reshape((batch,) + factors + factors)
    args: list = [tensor, [3 * k] + list(range(2 * k))]
    for f, d in enumerate(factors):
        args += [_basis_stack(d), [2 * k + f, k + f, f]]
    args.append([3 * k] + [2 * k + f for f in range(k)])
    w = np.einsum(*args, optimize="greedy") / dim
    return w.reshape(batch, -1)


def hs_decompose(m: CMatrix, cutoff: float = 0.0) -> dict[tuple[int, ...], float]:
    """Map each basis-index tuple to its real coefficient.

    Coefficients with magnitude <= ``cutoff`` are omitted; the default keeps
    everything except exact zeros, so composing the result reproduces the
    input to working precision.
    """
    w = hs_coefficients(m)
    out: dict[tuple[int, ...], float] = {}
    for t in np.argwhere(np.abs(w) > cutoff):
        key = tuple(int(i) for i in t)
        out[key] = float(w[key])
    return out


def hs_compose(
    coeffs: Mapping[tuple[int, ...], float] | np.ndarray,
    factors: Sequence[int],
) -> CMatrix:
    """Inverse of :func:`hs_decompose`: rebuild the matrix from coefficients."""
    factors = tuple(int(f) for f in factors)
    shape = tuple(f * f for f in factors)
    if isinstance(coeffs, np.ndarray):
        w = np.asarray(coeffs, dtype=np.float64)
        if w.shape != shape:
            raise ValueError(f"coefficient tensor has shape {w.shape}, expected {shape}")
    else:
        w = np.zeros(shape)
        for idx, c in coeffs.items():
            if len(idx) != len(factors):
                raise ValueError(f"index {idx} does not match {len(factors)} factors")
            w[tuple(int(i) for i in idx)] = c
    k = len(factors)
    dim = math.prod(factors)
    args: list = [w, [2 * k + f for f in range(k)]]
    for f, d in enumerate(factors):
        args += [_basis_stack(d), [2 * k + f, f, k + f]]
    args.append(list(range(2 * k)))
    mat = np.einsum(*args, optimize="greedy").reshape(dim, dim)
    return CMatrix(mat, factors)


# ---------------------------------------------------------------------------
# lab permutations and spectra
# ---------------------------------------------------------------------------


def _lab_permutation_index(g: Permutation, layout: PartyLayout) -> np.ndarray:
    """rows[c] = basis index that U_g maps basis state c onto."""
    n, b = layout.n_parties, layout.block_dim
    if g.n != n:
        raise ValueError(f"permutation acts on {g.n} labs, layout has {n}")
    flat = np.arange(layout.dim).reshape([b] * n)
    # U_g sends lab j's content to lab g(j); transposing with axes=image makes
    # output component j read input component g^-1(j), and U_g U_h = U_{gh}
    return np.transpose(flat, axes=g.image).ravel()


def permutation_unitary(g: Permutation, layout: PartyLayout) -> CMatrix:
    """The 0/1 unitary permuting whole lab blocks, with U_g U_h = U_{g h}."""
    rows = _lab_permutation_index(g, layout)
    u = np.zeros((layout.dim, layout.dim))
    u[rows, np.arange(layout.dim)] = 1.0
    return CMatrix(u, layout.factors)


def apply_lab_permutation(m: CMatrix, g: Permutation, layout: PartyLayout) -> CMatrix:
    """U_g m U_g^dag computed by index relabelling (no matrix products)."""
    if m.factors != layout.factors:
        raise ValueError(f"matrix factors {m.factors} do not match layout {layout.factors}")
    rows = _lab_permutation_index(g, layout)
    inv = np.argsort(rows)
    return CMatrix(m.mat[np.ix_(inv, inv)], m.factors)


def min_eigenvalue(m: CMatrix) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    _require_hermitian(m, "min_eigenvalue")
    return float(np.linalg.eigvalsh(m.mat)[0])


def eye(factors: Sequence[int]) -> CMatrix:
    factors = tuple(int(f) for f in factors)
    return CMatrix(np.eye(math.prod(factors)), factors)

"""Process matrices: validity constraints, Born rule, instruments, reduction.

A process matrix W on an n-lab layout is a positive operator whose pairing
Tr[W (M_1 x ... x M_n)] with local instrument elements (in Choi form) yields
outcome probabilities. Normalization against every choice of local CPTP maps
pins the trace to the product of output dimensions and forces a family of
Hilbert-Schmidt coefficients to vanish.

Choi convention used throughout: the map F from the input to the output space
is represented by ``[(I x F)(|phi+><phi+|)]^T`` with ``|phi+> = sum_i |ii>``
unnormalized. Under this convention the identity channel is |phi+><phi+|,
"measure POVM element E, prepare state t" is E x t^T, and trace preservation
reads Tr_out[C] = 1_in.

Which coefficients must vanish: decomposing each lab's CPTP Choi in the
Hilbert-Schmidt basis, trace preservation fixes the (input, trivial-output)
coefficients, so a product term contributes to the normalization sum exactly
when every lab it touches is touched on that lab's output side. Such terms
are forbidden; all others are unconstrained. Note this forbids single-lab
supports like {A_in, A_out} as well: probing lab A with the identity channel
while depolarizing the rest shifts the total probability away from one (see
:func:`mc_normalization_oracle`, which checks the rule by direct sampling).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .linalg import (
    CMatrix,
    PartyLayout,
    _basis_stack,
    hs_coefficients,
    kron_all,
    partial_trace,
)

#: default absolute tolerance for validity checks (CLI override: PROCMAT_TOL)
DEFAULT_TOL = 1e-9


class InvalidProcessError(ValueError):
    """Raised when an operation requires a valid process and the check fails."""

    def __init__(self, report: "ValidityReport"):
        self.report = report
        super().__init__(f"not a valid process: {report.failure_reasons()}")


# ---------------------------------------------------------------------------
# data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    """A candidate process matrix; validity is checked, never assumed."""

    mat: CMatrix
    layout: PartyLayout

    def __post_init__(self):
        if self.mat.factors != self.layout.factors:
            raise ValueError(
                f"matrix factors {self.mat.factors} do not match "
                f"layout factors {self.layout.factors}"
            )


@dataclass(frozen=True, eq=False)
class ChoiMap:
    """Choi operator of a CP map on one lab, on factors (d_in, d_out)."""

    mat: CMatrix
    party: int = 0

    def __post_init__(self):
        if len(self.mat.factors) != 2:
            raise ValueError("a Choi map carries exactly two factors (input, output)")

    @property
    def d_in(self) -> int:
        return self.mat.factors[0]

    @property
    def d_out(self) -> int:
        return self.mat.factors[1]


@dataclass(frozen=True, eq=False)
class Instrument:
    """A nonempty set of CP maps (Choi form) meant to sum to a CPTP map."""

    elements: tuple[ChoiMap, ...]

    def __post_init__(self):
        if not self.elements:
            raise ValueError("an instrument needs at least one element")
        dims = {(e.d_in, e.d_out) for e in self.elements}
        if len(dims) != 1:
            raise ValueError(f"instrument elements have mixed dimensions: {dims}")

    @property
    def d_in(self) -> int:
        return self.elements[0].d_in

    @property
    def d_out(self) -> int:
        return self.elements[0].d_out

    def total(self) -> CMatrix:
        return CMatrix(
            sum(e.mat.mat for e in self.elements), self.elements[0].mat.factors
        )


@dataclass(frozen=True)
class ValidityReport:
    hermitian: bool
    min_eig: float
    trace: float
    trace_dev: float
    forbidden_norm: float
    offending_terms: tuple[tuple[tuple[int, ...], float], ...]
    valid: bool
    tol: float

    def failure_reasons(self) -> str:
        reasons = []
        if not self.hermitian:
            reasons.append("not Hermitian")
        if self.min_eig < -self.tol:
            reasons.append(f"min eigenvalue {self.min_eig:.3e}")
        if self.trace_dev > self.tol:
            reasons.append(f"trace deviation {self.trace_dev:.3e}")
        if self.forbidden_norm > self.tol:
            reasons.append(f"forbidden coefficient norm {self.forbidden_norm:.3e}")
        return "; ".join(reasons) if reasons else "none"


@dataclass(frozen=True)
class InstrumentReport:
    min_element_eig: float
    tp_dev: float
    valid: bool
    tol: float


# ---------------------------------------------------------------------------
# term classification
# ---------------------------------------------------------------------------


def term_allowed(t: Sequence[int], layout: PartyLayout) -> bool:
    """Whether the product term with basis indices ``t`` may appear in a process.

    A term is forbidden exactly when it is nontrivial on at least one lab and
    every lab it touches is touched on that lab's output side.
    """
    t = tuple(int(i) for i in t)
    if len(t) != len(layout.factors):
        raise ValueError(
            f"term has {len(t)} indices, layout has {len(layout.factors)} factors"
        )
    touched_any = False
    for lab in range(layout.n_parties):
        in_nontrivial = any(t[i] > 0 for i in layout.input_factor_indices(lab))
        out_nontrivial = any(t[i] > 0 for i in layout.output_factor_indices(lab))
        if in_nontrivial and not out_nontrivial:
            return True  # an input-only lab kills every normalization probe
        touched_any = touched_any or in_nontrivial or out_nontrivial
    return not touched_any


@lru_cache(maxsize=32)
def allowed_term_mask(layout: PartyLayout) -> np.ndarray:
    """Boolean tensor over all basis-index tuples, True where the term is allowed."""
    shape = tuple(f * f for f in layout.factors)
    k = len(shape)

    def axis_nontrivial(i: int) -> np.ndarray:
        flag = np.zeros(shape[i], dtype=bool)
        flag[1:] = True
        return flag.reshape([shape[i] if j == i else 1 for j in range(k)])

    any_touched = np.zeros((1,) * k, dtype=bool)
    all_touched_on_output = np.ones((1,) * k, dtype=bool)
    for lab in range(layout.n_parties):
        out_flag = np.zeros((1,) * k, dtype=bool)
        for i in layout.output_factor_indices(lab):
            out_flag = out_flag | axis_nontrivial(i)
        touched = out_flag.copy()
        for i in layout.input_factor_indices(lab):
            touched = touched | axis_nontrivial(i)
        any_touched = any_touched | touched
        all_touched_on_output = all_touched_on_output & (~touched | out_flag)
    forbidden = any_touched & all_touched_on_output
    mask = ~forbidden
    mask.setflags(write=False)
    return mask


# ---------------------------------------------------------------------------
# validity
# ---------------------------------------------------------------------------


def validate_process(w: ProcessMatrix, tol: float = DEFAULT_TOL) -> ValidityReport:
    """Check Hermiticity, positivity, trace normalization and forbidden terms.

    The trace of a valid process equals the product of all output dimensions
    (insert the maximally depolarizing channel at every lab to see this).
    """
    m = w.mat
    herm_dev = float(np.abs(m.mat - m.mat.conj().T).max())
    hermitian = herm_dev <= tol
    herm_part = m.hermitized()
    min_eig = float(np.linalg.eigvalsh(herm_part.mat)[0])
    trace = float(np.trace(m.mat).real)
    trace_dev = abs(trace - w.layout.total_output_dim)

    coeffs = hs_coefficients(herm_part)
    mask = allowed_term_mask(w.layout)
    forbidden_coeffs = coeffs[~mask]
    forbidden_norm = float(np.sqrt(np.sum(forbidden_coeffs**2)))

    offending: list[tuple[tuple[int, ...], float]] = []
    if forbidden_norm > tol:
        flat_bad = np.where(~mask.ravel())[0]
        vals = coeffs.ravel()[flat_bad]
        order = np.argsort(-np.abs(vals))
        for j in order[:8]:
            if abs(vals[j]) <= tol:
                break
            idx = np.unravel_index(flat_bad[j], mask.shape)
            offending.append((tuple(int(i) for i in idx), float(vals[j])))

    valid = (
        hermitian
        and min_eig >= -tol
        and trace_dev <= tol
        and forbidden_norm <= tol
    )
    return ValidityReport(
        hermitian=hermitian,
        min_eig=min_eig,
        trace=trace,
        trace_dev=trace_dev,
        forbidden_norm=forbidden_norm,
        offending_terms=tuple(offending),
        valid=valid,
        tol=tol,
    )


def require_valid(w: ProcessMatrix, tol: float = DEFAULT_TOL) -> ValidityReport:
    report = validate_process(w, tol)
    if not report.valid:
        raise InvalidProcessError(report)
    return report


# ---------------------------------------------------------------------------
# Born rule and reduction
# ---------------------------------------------------------------------------


def born_probability(w: ProcessMatrix, ms: Sequence[ChoiMap]) -> float:
    """Tr[W (M_1 x ... x M_n)] for one Choi operator per lab, in lab order."""
    layout = w.layout
    if layout.frame is not None:
        raise ValueError("born_probability expects a frameless system layout")
    if len(ms) != layout.n_parties:
        raise ValueError(f"need {layout.n_parties} local maps, got {len(ms)}")
    for m in ms:
        if (m.d_in, m.d_out) != (layout.d_in, layout.d_out):
            raise ValueError(
                f"local map dims ({m.d_in}, {m.d_out}) do not match layout "
                f"({layout.d_in}, {layout.d_out})"
            )
    joint = kron_all([m.mat for m in ms])
    return float(np.trace(w.mat.mat @ joint.mat).real)


def reduced_process(w: ProcessMatrix, keep_labs: Iterable[int]) -> ProcessMatrix:
    """Trace out the other labs and renormalize by their output dimensions.

    Discarding a lab is the same as inserting the maximally depolarizing
    channel there, which contributes a factor of that lab's output dimension;
    dividing it out keeps valid processes valid.
    """
    layout = w.layout
    keep = sorted(set(int(j) for j in keep_labs))
    if not keep:
        raise ValueError("must keep at least one lab")
    if any(j < 0 or j >= layout.n_parties for j in keep):
        raise IndexError(f"lab indices {keep} out of range")
    if len(keep) == layout.n_parties:
        return w
    keep_factors = [i for j in keep for i in layout.lab_factor_indices(j)]
    discarded = layout.n_parties - len(keep)
    d_out_lab = layout.d_out * (1 if layout.frame is None else layout.frame.d_out)
    divisor = d_out_lab**discarded
    reduced = partial_trace(w.mat, keep_factors)
    new_layout = PartyLayout(len(keep), layout.d_in, layout.d_out, layout.frame)
    return ProcessMatrix(CMatrix(reduced.mat / divisor, reduced.factors), new_layout)


# ---------------------------------------------------------------------------
# channels and instruments
# ---------------------------------------------------------------------------


def identity_choi(d: int) -> CMatrix:
    """Choi operator of the identity channel on a d-dimensional system."""
    phi = np.zeros(d * d)
    phi[:: d + 1] = 1.0
    return CMatrix(np.outer(phi, phi), (d, d))


def depolarizing_choi(d_in: int, d_out: int) -> CMatrix:
    """Choi operator of the channel sending everything to the maximally mixed state."""
    return CMatrix(np.kron(np.eye(d_in), np.eye(d_out) / d_out), (d_in, d_out))


def measure_prepare_choi(povm_element: np.ndarray, output_state: np.ndarray) -> CMatrix:
    """Choi operator of "apply POVM element E, prepare state t": E x t^T."""
    e = np.asarray(povm_element, dtype=np.complex128)
    t = np.asarray(output_state, dtype=np.complex128)
    return CMatrix(np.kron(e, t.T), (e.shape[0], t.shape[0]))


def _tp_corrected(choi: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Conjugate on the input factor so that Tr_out equals the identity exactly."""
    s = np.trace(choi.reshape(d_in, d_out, d_in, d_out), axis1=1, axis2=3)
    vals, vecs = np.linalg.eigh((s + s.conj().T) / 2)
    if vals[0] <= 0:
        raise ValueError("input marginal is singular, cannot correct to TP")
    inv_sqrt = (vecs * (1.0 / np.sqrt(vals))) @ vecs.conj().T
    a = np.kron(inv_sqrt, np.eye(d_out))
    return a @ choi @ a.conj().T


def random_cptp(d_in: int, d_out: int, seed: int, env_dim: int | None = None) -> ChoiMap:
    """A random CPTP Choi operator, deterministic for a fixed seed.

    A complex Gaussian matrix is orthonormalized into a Stinespring isometry,
    converted to Choi form, and then corrected so the trace-preservation
    constraint holds exactly.
    """
    if d_in < 1 or d_out < 1:
        raise ValueError("dimensions must be positive")
    env = env_dim if env_dim is not None else d_in * d_out
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d_out * env, d_in)) + 1j * rng.normal(size=(d_out * env, d_in))
    q, _ = np.linalg.qr(g)
    kraus = q.reshape(d_out, env, d_in)
    # Choi (pre-transpose) = sum_e |v_e><v_e| with v_e = sum_i |i> x K_e|i>
    vecs = kraus.transpose(1, 2, 0).reshape(env, d_in * d_out)
    choi = np.einsum("ei,ej->ij", vecs, vecs.conj()).T
    choi = _tp_corrected(choi, d_in, d_out)
    return ChoiMap(CMatrix(choi, (d_in, d_out)))


def random_instrument(
    d_in: int, d_out: int, n_outcomes: int, seed: int
) -> Instrument:
    """A random instrument: PSD pieces jointly corrected so their sum is TP."""
    if n_outcomes < 1:
        raise ValueError("need at least one outcome")
    rng = np.random.default_rng(seed)
    d = d_in * d_out
    raws = []
    for _ in range(n_outcomes):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        raws.append(g @ g.conj().T / d)
    total = sum(raws)
    s = np.trace(total.reshape(d_in, d_out, d_in, d_out), axis1=1, axis2=3)
    vals, vecs = np.linalg.eigh((s + s.conj().T) / 2)
    inv_sqrt = (vecs * (1.0 / np.sqrt(vals))) @ vecs.conj().T
    a = np.kron(inv_sqrt, np.eye(d_out))
    elements = tuple(
        ChoiMap(CMatrix(a @ r @ a.conj().T, (d_in, d_out))) for r in raws
    )
    return Instrument(elements)


def identity_instrument(d: int) -> Instrument:
    """Single-outcome instrument containing only the identity channel."""
    return Instrument((ChoiMap(identity_choi(d)),))


def z_measure_instrument() -> Instrument:
    """Two-outcome qubit instrument: measure z, reprepare the observed eigenstate."""
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    return Instrument(
        (
            ChoiMap(measure_prepare_choi(p0, p0)),
            ChoiMap(measure_prepare_choi(p1, p1)),
        )
    )


def validate_instrument(ins: Instrument, tol: float = DEFAULT_TOL) -> InstrumentReport:
    """Each element must be PSD and the element sum must be trace preserving."""
    min_eig = math.inf
    for e in ins.elements:
        herm = e.mat.hermitized()
        min_eig = min(min_eig, float(np.linalg.eigvalsh(herm.mat)[0]))
    total = ins.total()
    marginal = partial_trace(total, keep=[0])
    tp_dev = float(np.abs(marginal.mat - np.eye(ins.d_in)).max())
    return InstrumentReport(
        min_element_eig=min_eig,
        tp_dev=tp_dev,
        valid=min_eig >= -tol and tp_dev <= tol,
        tol=tol,
    )


# ---------------------------------------------------------------------------
# normalization oracle
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _probe_menu(d_in: int, d_out: int) -> tuple[np.ndarray, ...]:
    """Deterministic CPTP probes that jointly detect every forbidden term.

    Depolarizing and (when square) identity channels cover the families a
    normalization check must always include; the measure-and-reprepare
    channels give, for every (input op a, output op b != 1) pair, a probe
    whose Choi has a nonzero coefficient on exactly that pair, so terms that
    touch a lab only through its output cannot hide.
    """
    menu = [depolarizing_choi(d_in, d_out).mat]
    if d_in == d_out:
        menu.append(identity_choi(d_in).mat)
    in_ops = _basis_stack(d_in)
    out_ops = _basis_stack(d_out)
    for a in range(d_in * d_in):
        if a == 0:
            vals, vecs = np.ones(d_in), np.eye(d_in, dtype=np.complex128)
        else:
            vals, vecs = np.linalg.eigh(in_ops[a])
        lam = np.abs(vals).max()
        for b in range(1, d_out * d_out):
            bmax = float(np.abs(np.linalg.eigvalsh(out_ops[b])).max())
            choi = np.zeros((d_in * d_out, d_in * d_out), dtype=np.complex128)
            for e in range(d_in):
                proj = np.outer(vecs[:, e], vecs[:, e].conj())
                state = (np.eye(d_out) + (vals[e] / (lam * bmax)) * out_ops[b]) / d_out
                choi += np.kron(proj, state.T)
            menu.append(_tp_corrected(choi, d_in, d_out))
    return tuple(menu)


def mc_normalization_oracle(
    w: ProcessMatrix, samples: int = 1000, seed: int = 0
) -> float:
    """Largest |Tr[W (M_1 x ... x M_n)] - 1| over probe and sampled CPTP products.

    The probe set always contains the all-depolarizing product, the
    all-identity product, and every combination with the identity channel on
    single labs, plus the measure-and-reprepare probes described in
    :func:`_probe_menu`. A process satisfying the normalization constraint
    stays within ~1e-12 of one on all of them; a single forbidden term of
    weight 0.1 or more is pushed well above 0.01. The probe product grows
    like menu**n, so keep n small (n <= 3 is cheap).
    """
    layout = w.layout
    if layout.frame is not None:
        raise ValueError("the normalization oracle expects a frameless layout")
    if samples < 0:
        raise ValueError("samples must be nonnegative")
    n = layout.n_parties
    wm = w.mat.mat
    worst = 0.0

    menu = _probe_menu(layout.d_in, layout.d_out)
    for combo in itertools.product(menu, repeat=n):
        joint = combo[0]
        for c in combo[1:]:
            joint = np.kron(joint, c)
        worst = max(worst, abs(float(np.trace(wm @ joint).real) - 1.0))

    rng = np.random.default_rng(seed)
    child_seeds = rng.integers(0, 2**63 - 1, size=(samples, n))
    for s in range(samples):
        joint = None
        for j in range(n):
            c = random_cptp(layout.d_in, layout.d_out, int(child_seeds[s, j])).mat.mat
            joint = c if joint is None else np.kron(joint, c)
        worst = max(worst, abs(float(np.trace(wm @ joint).real) - 1.0))
    return worst

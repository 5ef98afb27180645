"""Material reference frames: invariant processes and instruments.

Attaching to each lab a frame system prepared in a distinct basis state turns
the lab labels into physically measurable data. Summing the extension over
all lab permutations (the R superoperator below) produces permutation
invariant objects that reproduce the original statistics: conditioning on a
definite frame configuration recovers the local product operators.

The R map obeys two algebraic identities that make everything else work:
it is additive, R(A) + R(B) = R(A + B), and multiplicative, R(A) R(B) =
R(A B). Multiplicativity holds because two permuted copies of the frame
state are orthogonal unless the permutations agree, which collapses the
double sum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import (
    CMatrix,
    PartyLayout,
    Permutation,
    apply_lab_permutation,
    kron_all,
    partial_trace,
    reorder_factors,
)
from .process import (
    DEFAULT_TOL,
    Instrument,
    ProcessMatrix,
    require_valid,
)
from .symmetry import enumerate_sn


@dataclass(frozen=True, eq=False)
class InvariantInstrumentElement:
    """One outcome of a permutation-invariant instrument on system + frame."""

    mat: CMatrix
    outcome: tuple[int, ...]


def framed_layout(base: PartyLayout, d_frame_out: int = 1) -> PartyLayout:
    """Attach per-lab frames: frame input dimension n (one basis state per lab).

    The frame output is trivial by default; that choice makes the instrument
    completion CPTP and the Born statistics carry over exactly, and nothing
    in the construction needs more room.
    """
    return base.with_frame(d_frame_out)


def _check_framed(framed: PartyLayout) -> PartyLayout:
    if framed.frame is None:
        raise ValueError("expected a layout with reference-frame factors")
    if framed.frame.d_in != framed.n_parties:
        raise ValueError(
            f"frame input dimension {framed.frame.d_in} must equal the lab count "
            f"{framed.n_parties}"
        )
    return framed


def _system_factors(framed: PartyLayout) -> tuple[int, ...]:
    return framed.without_frame().factors


def r_map(a: CMatrix, framed: PartyLayout) -> CMatrix:
    """sum_g U_g (a x [0 1 ... n-1]_frame-in x 1_frame-out) U_g^dag.

    ``a`` lives on the system factors only. Lab j's frame input is prepared in
    basis state |j>, and each permutation moves system and frame blocks
    together, so the frame keeps pointing at its own lab.
    """
    _check_framed(framed)
    n = framed.n_parties
    if a.factors != _system_factors(framed):
        raise ValueError(
            f"operator factors {a.factors} do not match the system factors "
            f"{_system_factors(framed)}"
        )
    d_fo = framed.frame.d_out
    frame_parts = []
    for j in range(n):
        marker = np.zeros((n, n))
        marker[j, j] = 1.0
        frame_parts.append(CMatrix(marker, (n,)))
        frame_parts.append(CMatrix(np.eye(d_fo), (d_fo,)))
    raw = kron_all([a] + frame_parts)
    # interleave: (S factors of all labs, then frame factors) -> canonical order
    order = []
    for j in range(n):
        order += [2 * j, 2 * j + 1, 2 * n + 2 * j, 2 * n + 2 * j + 1]
    fiducial = reorder_factors(raw, order)
    acc = np.zeros_like(fiducial.mat)
    for g in enumerate_sn(n):
        acc = acc + apply_lab_permutation(fiducial, g, framed).mat
    return CMatrix(acc, framed.factors)


def invariant_process(
    w: ProcessMatrix, framed: PartyLayout, input_tol: float = DEFAULT_TOL
) -> ProcessMatrix:
    """Encode a process into a permutation-invariant one on system + frame.

    Returns R(W)/n!. The output is again a valid process (each permuted,
    frame-extended copy is valid and the mixture preserves validity) and is
    invariant by construction.
    """
    _check_framed(framed)
    if framed.without_frame() != w.layout:
        raise ValueError("framed layout does not extend the process layout")
    require_valid(w, input_tol)
    n_fact = math.factorial(framed.n_parties)
    out = r_map(w.mat, framed)
    return ProcessMatrix(CMatrix(out.mat / n_fact, out.factors), framed)


def invariant_instrument(
    instruments: Sequence[Instrument], framed: PartyLayout
) -> list[InvariantInstrumentElement]:
    """Extend one instrument per lab into a joint permutation-invariant one.

    The element for outcome (i_1 ... i_n) is R(M_i1 x ... x M_in) plus the
    completion (1 - R(1_system)) / (N d_out_total), shared evenly over the N
    joint outcomes. The completion lives on the frame configurations the R
    image never reaches, so every element stays PSD and the sum is CPTP.
    """
    _check_framed(framed)
    n = framed.n_parties
    if len(instruments) != n:
        raise ValueError(f"need one instrument per lab ({n}), got {len(instruments)}")
    for ins in instruments:
        if (ins.d_in, ins.d_out) != (framed.d_in, framed.d_out):
            raise ValueError("instrument dimensions do not match the layout")
    if framed.frame.d_out != 1:
        raise ValueError(
            "the instrument completion is only trace preserving for a trivial "
            "frame output (d_frame_out = 1)"
        )
    n_joint = math.prod(len(ins.elements) for ins in instruments)
    d_out_total = framed.total_output_dim
    identity_sr = np.eye(framed.dim)
    r_of_identity = r_map(
        CMatrix(np.eye(framed.without_frame().dim), _system_factors(framed)), framed
    )
    completion = (identity_sr - r_of_identity.mat) / (n_joint * d_out_total)

    elements = []
    outcome_ranges = [range(len(ins.elements)) for ins in instruments]
    for outcome in itertools.product(*outcome_ranges):
        product = kron_all(
            [instruments[j].elements[outcome[j]].mat for j in range(n)]
        )
        invariant = r_map(product, framed)
        elements.append(
            InvariantInstrumentElement(
                CMatrix(invariant.mat + completion, framed.factors), tuple(outcome)
            )
        )
    return elements


def born_preservation_check(
    w: ProcessMatrix, instruments: Sequence[Instrument], framed: PartyLayout
) -> float:
    """max over joint outcomes of |Tr[W_inv M_inv] - Tr[W (M_1 x ... x M_n)]|.

    The identity Tr[R(W) R(M)]/n! = Tr[W M] plus the vanishing pairing with
    the completion make the two sides agree whenever the frame output is
    trivial; this runs the comparison numerically outcome by outcome.
    """
    _check_framed(framed)
    n = framed.n_parties
    n_fact = math.factorial(n)
    w_inv = r_map(w.mat, framed).mat / n_fact
    elements = invariant_instrument(instruments, framed)
    worst = 0.0
    for el in elements:
        product = kron_all(
            [instruments[j].elements[el.outcome[j]].mat for j in range(n)]
        )
        plain = float(np.trace(w.mat.mat @ product.mat).real)
        framed_prob = float(np.trace(w_inv @ el.mat.mat).real)
        worst = max(worst, abs(framed_prob - plain))
    return worst


def condition_on_frame(
    el: InvariantInstrumentElement | CMatrix, config: Permutation
) -> CMatrix:
    """Project onto one frame configuration and trace the frames out.

    ``config`` names the configuration reached by permuting the fiducial
    frame assignment with U_config; conditioning an invariant element on it
    returns the correspondingly permuted product of the original local
    operators. The completion term is supported away from every reachable
    configuration, so it drops out.
    """
    mat = el.mat if isinstance(el, InvariantInstrumentElement) else el
    n = config.n
    if len(mat.factors) != 4 * n:
        raise ValueError(
            f"expected {4 * n} factors (4 per lab) for {n} labs, got {len(mat.factors)}"
        )
    labels = config.inverse().image  # lab j holds frame state |g^-1(j)| after U_g
    diag = np.ones(1)
    for j in range(n):
        d_in, d_out, d_fi, d_fo = mat.factors[4 * j : 4 * j + 4]
        if d_fi != n:
            raise ValueError("frame input dimension must equal the lab count")
        pick = np.zeros(d_fi)
        pick[labels[j]] = 1.0
        diag = np.kron(diag, np.ones(d_in * d_out))
        diag = np.kron(diag, pick)
        diag = np.kron(diag, np.ones(d_fo))
    projected = mat.mat * diag[:, None] * diag[None, :]
    system = [i for j in range(n) for i in (4 * j, 4 * j + 1)]
    return partial_trace(CMatrix(projected, mat.factors), system)

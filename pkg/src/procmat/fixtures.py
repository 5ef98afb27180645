"""Deterministic reference processes used by the CLI bundle and the tests."""

from __future__ import annotations

import numpy as np

from .linalg import CMatrix, PartyLayout, hs_compose, kron_all
from .process import ChoiMap, ProcessMatrix, identity_choi
from .symmetry import twirl

#: published coefficients of the bipartite causally indefinite process; the
#: source reports them rounded to four decimals, which leaves the matrix a
#: hair away from PSD (min eigenvalue ~ -1.5e-5, see README)
BRANCIARD_COEFFS = (0.0390, 0.3355, 0.2451, 0.4291, 0.2097)


def identity_process(n: int, d_in: int = 2, d_out: int = 2) -> ProcessMatrix:
    """The fully uncorrelated process: identity scaled to trace prod(d_out)."""
    layout = PartyLayout(n, d_in, d_out)
    scale = layout.total_output_dim / layout.dim
    return ProcessMatrix(CMatrix(np.eye(layout.dim) * scale, layout.factors), layout)


def branciard_process() -> ProcessMatrix:
    """Two qubit labs, swap invariant, causally indefinite (violates a causal
    inequality per its source); all terms sit in the allowed family.

    Factor order is (A_in, A_out, B_in, B_out); basis indices 1/2/3 are x/y/z.
    """
    a0, a1, a2, a3, a4 = BRANCIARD_COEFFS
    coeffs = {
        (0, 0, 0, 0): 1.0,
        (3, 0, 3, 0): a0,
        (3, 0, 0, 0): -a1,
        (0, 0, 3, 0): -a1,
        (3, 0, 0, 3): -a2,
        (0, 3, 3, 0): -a2,
        (3, 0, 3, 3): a3,
        (3, 3, 3, 0): a3,
        (3, 0, 1, 1): a4,
        (3, 0, 2, 2): -a4,
        (1, 1, 3, 0): a4,
        (2, 2, 3, 0): -a4,
    }
    layout = PartyLayout(2, 2, 2)
    scaled = {t: c / 4.0 for t, c in coeffs.items()}
    return ProcessMatrix(hs_compose(scaled, layout.factors), layout)


def state_channel_process(
    rho: np.ndarray, channel: ChoiMap | CMatrix
) -> ProcessMatrix:
    """State rho fed into lab A, channel from A's output to B's input, B discards.

    The operator is rho^(A_in) x T^(A_out, B_in) x 1^(B_out): a causally
    ordered process where only A can signal to B.
    """
    t = channel.mat if isinstance(channel, ChoiMap) else channel
    d_in = int(np.asarray(rho).shape[0])
    d_out, d_b_in = t.factors
    if d_in != d_b_in:
        raise ValueError("state dimension must match the channel output side")
    parts = [
        CMatrix(np.asarray(rho, dtype=np.complex128), (d_in,)),
        t,
        CMatrix(np.eye(d_out), (d_out,)),
    ]
    mat = kron_all(parts)
    layout = PartyLayout(2, d_in, d_out)
    return ProcessMatrix(CMatrix(mat.mat, layout.factors), layout)


def mixed_channel_process(rho: np.ndarray, channel: ChoiMap | CMatrix) -> ProcessMatrix:
    """Even mixture of the channel process with its lab-swapped copy.

    This is the twirl of :func:`state_channel_process`: invariant, but the
    information about where the state was prepared is gone.
    """
    base = state_channel_process(rho, channel)
    return ProcessMatrix(twirl(base.mat, base.layout), base.layout)


def _default_channel_args() -> tuple[np.ndarray, CMatrix]:
    rho = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)
    return rho, identity_choi(2)


def standard_fixtures() -> dict[str, ProcessMatrix]:
    """The named processes bundled with the CLI demo.

    ``channel`` and ``channel_mix`` use state |0><0| and the identity channel.
    """
    rho, chan = _default_channel_args()
    return {
        "identity": identity_process(2),
        "branciard": branciard_process(),
        "channel": state_channel_process(rho, chan),
        "channel_mix": mixed_channel_process(rho, chan),
    }

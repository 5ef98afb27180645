"""Process matrices with permutation symmetry.

Library layout:

* :mod:`procmat.linalg` tensor-factor linear algebra (Kronecker, partial
  trace, Hilbert-Schmidt transforms, lab-block permutation unitaries),
* :mod:`procmat.process` the process data model, validity checks, Born rule,
  instruments and the Monte-Carlo normalization oracle,
* :mod:`procmat.symmetry` twirling, sign-sector projectors, charge splits and
  the sector feasibility scanner,
* :mod:`procmat.frame` material reference frames: invariant processes and
  instruments, Born-rule preservation, frame conditioning,
* :mod:`procmat.fixtures` bundled reference processes,
* :mod:`procmat.procfile` the on-disk JSON format,
* :mod:`procmat.cli` the ``procmat`` command-line tool.
"""

from .linalg import (
    CMatrix,
    FrameSpec,
    HSBasis,
    PartyLayout,
    Permutation,
    apply_lab_permutation,
    hs_basis,
    hs_compose,
    hs_decompose,
    kron,
    kron_all,
    min_eigenvalue,
    partial_trace,
    permutation_unitary,
    reorder_factors,
)
from .process import (
    DEFAULT_TOL,
    ChoiMap,
    Instrument,
    InvalidProcessError,
    ProcessMatrix,
    ValidityReport,
    born_probability,
    depolarizing_choi,
    identity_choi,
    mc_normalization_oracle,
    measure_prepare_choi,
    random_cptp,
    random_instrument,
    reduced_process,
    term_allowed,
    validate_instrument,
    validate_process,
)
from .symmetry import (
    ChargeSplit,
    FeasibilityReport,
    SectorProjector,
    charge_components,
    enumerate_sn,
    is_invariant,
    product_invariance_check,
    sector_basis,
    sector_feasibility,
    sector_partial_trace_check,
    sector_projector,
    twirl,
)
from .frame import (
    InvariantInstrumentElement,
    born_preservation_check,
    condition_on_frame,
    framed_layout,
    invariant_instrument,
    invariant_process,
    r_map,
)

__version__ = "0.1.0"

"""Information Bottleneck and Privacy Funnel rate functions for finite channels."""
from .config import DEFAULT_CONFIG, SolverConfig
from .curves import CurveRecord, read_curve, write_curve
from .ib import (
    EnvelopeGraph,
    HammingSolution,
    IBSolution,
    PhiSample,
    ceb_value,
    g_n,
    hamming_ib,
    hamming_ib_hull,
    ib_value,
    invert_g_n,
    lower_convex_envelope,
    maximize_phi,
    minimize_phi,
    phi,
    reduced_ib,
    set_Q_contains,
)
from .kernels import BACKEND
from .oracle import (
    OracleResult,
    TestChannel,
    cardinality_scan,
    ceb_oracle,
    ib_oracle,
    joint_rates,
    pf_oracle,
)
from .pf import (
    OutOfRegimeError,
    PFSolution,
    TouchPoint,
    bec_pf,
    find_touch_point,
    pf_cardinality_bound,
    pf_symmetric_value,
    pf_value,
)
from .prob import (
    ChannelError,
    ChannelMatrix,
    bms_channel,
    bsc,
    circulant_from_noise,
    conditional_entropy,
    cyclic_convolve,
    entropy,
    hamming_channel,
    mutual_information,
    prob_vector,
    push_forward,
    tito_channel,
    uniform,
)
from .symmetry import (
    Permutation,
    SymmetryGroup,
    SymmetryPair,
    cyclic_shifts_orbit,
    find_symmetry_group,
    is_circulant,
    is_input_symmetric,
)

__version__ = "0.1.0"

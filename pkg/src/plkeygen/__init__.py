"""Physical-layer secret key generation testbed for reciprocal power-line channels.

Channels are modeled as per-frequency 2x2 transmission matrices extracted
from synthetic tree topologies.  Two key generation methods are provided:
peak-position keys from the wide-sense time-domain symmetry of reciprocal
two-ports, and full matrix recovery from locally observable quantities plus
one publicly shared impedance.  Evaluation covers correlation statistics,
normalized key distances and empirical key entropy for the legitimate pair
and a passive eavesdropper.
"""

from ._kernels import NUMBA_ENABLED
from .errors import (
    AllBinsMaskedError,
    ConfigError,
    DegenerateDenominatorError,
    GridMismatchError,
    PlkeygenError,
    RealizationError,
    ReciprocityError,
    TopologyError,
    ZeroEnergyError,
)
from .metrics import (
    abs_correlation,
    det_correlation,
    key_distance,
    key_entropy,
    space_freq_correlation,
    zin_ctf_correlation,
)
from .quantize import SymbolKey, coded_arrange, gray_decode, gray_encode, quantize_levels
from .runner import ExperimentConfig, ResultTable, emit_csv, run, single_realization
from .sounding import ImpulseResponse, NoisySounder, impulse_response, observe
from .spectral import (
    AbcdChannel,
    FrequencyGrid,
    Spectrum,
    Termination,
    abcd_identity,
    abcd_line,
    abcd_shunt,
    asymmetry_metric,
    broadband_grid,
    cascade,
    cascade_chain,
    ctf_forward,
    ctf_reverse,
    narrowband_grid,
    normalize_transadmittance,
    normalize_transimpedance,
    reverse_direction,
    transadmittance_observables,
    transimpedance_observables,
    zin_port1,
    zin_port2,
)
from .tdst import (
    BinaryKey,
    PeakSet,
    TdstConfig,
    blockize,
    detect_peaks,
    limit_first_m,
    peak_support_coincidence,
    tdst_key,
)
from .tmt import (
    SolveOptions,
    TmtObservation,
    TmtSolution,
    delta_mismatch,
    recover_h2,
    solve_abcd,
)
from .topology import (
    Edge,
    LoadSpec,
    PortPair,
    Topology,
    TopologyParams,
    extract_two_port,
    load_topology,
    save_topology,
    subtree_zin,
    synthesize,
    topology_from_dict,
    topology_to_dict,
)

__version__ = "0.1.0"

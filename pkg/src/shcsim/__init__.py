"""Self-homodyne coherent link simulator.

Alamouti polarization-time coding over a digitally subcarrier-multiplexed
dual-polarization transmitter, a linear fiber channel, a single-output
polarization-insensitive coherent frontend, and the matching receiver DSP
with a 2x2 LMS equalizer and one-tap phase tracking.
"""

from .channel import (
    ChannelConfig,
    apply_cd,
    apply_channel,
    cd_delay_spread_s,
    rotation_matrix,
)
from .complexity import (
    ComplexityReport,
    complexity_table,
    fdcdc_complexity,
    proposed_complexity,
)
from .constellation import Constellation, make_constellation, qam_demap, qam_map
from .errors import ConfigurationError, EqualizerDivergence, SyncError
from .frontend import LoState, add_receiver_noise, coherent_detect
from .metrics import (
    BerReport,
    ber_from_q_factor_db,
    count_ber,
    count_ber_per_subcarrier,
    evm_db,
    measured_osnr_db,
    osnr_to_snr_db,
    q_factor_db,
    theory_ber_qam,
)
from .rxdsp import (
    CdcConfig,
    EqualizerConfig,
    EqualizerState,
    alamouti_equalize,
    fd_cdc,
    gsop,
    rx_pipeline,
    single_pol_equalize,
    subcarrier_demux,
    synchronize,
)
from .txdsp import (
    AlamoutiFrame,
    DscmSignal,
    SubcarrierPlan,
    alamouti_encode,
    build_dscm_tx,
    prbs,
)
from .waveform import ComplexWaveform, DualPolWaveform, resample, rrc_shape, rrc_taps

__version__ = "0.1.0"

__all__ = [
    "AlamoutiFrame",
    "BerReport",
    "CdcConfig",
    "ChannelConfig",
    "ComplexWaveform",
    "ComplexityReport",
    "ConfigurationError",
    "Constellation",
    "DscmSignal",
    "DualPolWaveform",
    "EqualizerConfig",
    "EqualizerDivergence",
    "EqualizerState",
    "LoState",
    "SubcarrierPlan",
    "SyncError",
    "add_receiver_noise",
    "alamouti_encode",
    "alamouti_equalize",
    "apply_cd",
    "apply_channel",
    "ber_from_q_factor_db",
    "build_dscm_tx",
    "cd_delay_spread_s",
    "coherent_detect",
    "complexity_table",
    "count_ber",
    "count_ber_per_subcarrier",
    "evm_db",
    "fd_cdc",
    "fdcdc_complexity",
    "gsop",
    "make_constellation",
    "measured_osnr_db",
    "osnr_to_snr_db",
    "prbs",
    "proposed_complexity",
    "q_factor_db",
    "qam_demap",
    "qam_map",
    "resample",
    "rotation_matrix",
    "rrc_shape",
    "rrc_taps",
    "rx_pipeline",
    "single_pol_equalize",
    "subcarrier_demux",
    "synchronize",
    "theory_ber_qam",
]

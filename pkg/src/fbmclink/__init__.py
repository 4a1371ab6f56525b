"""Link-level FBMC/OQAM simulation: MMSE decision-feedback equalization and
dual Tomlinson-Harashima precoding via MSE duality."""

from .channel import (ChannelRealization, apply_channel, generate_bu_channel,
                      ideal_channel, total_subchannel_response)
from .equalizer import (SingularDesignError, UlFilterSet, design_dfe,
                        design_linear, dfe_run, select_latency)
from .filterbank import (PrototypeFilter, afb_analyze, afb_direct,
                         design_prototype, modulated_filter, sfb_direct,
                         sfb_synthesize, sfb_synthesize_real)
from .harness import (DESIGNS, SimConfig, desk_scale, empirical_mse,
                      load_config, noise_variance_from_ebn0, run_cell, sweep)
from .oqam import (SIGMA_X2_HALF, apply_phase, constellation, oqam_destagger,
                   oqam_stagger, qam_demodulate, qam_modulate, slice_pam,
                   slice_qam)
from .sysmat import SubchannelMatrixSet, assemble, assemble_band, convolution_matrix, realify
from .thp import (DlFilterSet, InfeasibleDualityError, dl_mse, dl_receive,
                  oqam_modulo, sc_mse_duality, sum_mse_duality, tau_for_qam,
                  thp_precode, wrap_real)

__version__ = "0.1.0"

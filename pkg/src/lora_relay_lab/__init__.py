"""Link-level simulator and analytic calculator for a two-hop opportunistic
amplify-and-forward relaying LoRa system over Nakagami-m fading."""

__version__ = "0.1.0"

from .analysis import (
    AsymptoticTerms,
    BranchParams,
    SystemKind,
    ThroughputParams,
    analytical_ber,
    asymptotic_ber,
    asymptotic_ber_detail,
    asymptotic_terms,
    branch_cdf_exact,
    branch_pdf,
    conditional_ber,
    coverage_probability,
    detection_constant,
    diversity_order,
    harmonic_number,
    incomplete_gammas,
    maclaurin_coefficient,
    max_cdf,
    max_pdf,
    min_bound_cdf,
    q_function,
    single_link_ber,
    single_link_coverage,
    throughput,
)
from .channel import (
    FadeDraw,
    LinkSpec,
    apply_fading_and_awgn,
    avg_link_snr,
    nakagami_snr_pdf,
    sample_nakagami_gain,
    sample_nakagami_gains,
)
from .exceptions import ConvergenceError, ScenarioError
from .lora_phy import (
    ModemConfig,
    bits_to_symbols,
    count_bit_errors,
    dechirp,
    detect,
    detect_block,
    modulate,
    modulate_block,
    symbols_to_bits,
)
from .montecarlo import (
    CurvePoint,
    EstimateResult,
    EstimationMode,
    SimScenario,
    estimate_ber,
    estimate_coverage,
    estimate_per_and_throughput,
    sweep,
)
from .relay_link import (
    FadingMode,
    RelayTopology,
    SnrDraw,
    amplification_factor,
    draw_end_to_end_snr,
    end_to_end_snr,
    select_best,
    simulate_packet,
)
from .scenario import ScenarioConfig, parse_scenario_file, parse_scenario_text

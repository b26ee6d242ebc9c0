#ifndef FDX_CHAIN_HPP
#define FDX_CHAIN_HPP

#include <cstdint>
#include <vector>

#include "fdx/blocks.hpp"
#include "fdx/budget.hpp"
#include "fdx/waveform.hpp"

namespace fdx::chain {

/// Everything needed to assemble and run the full-duplex UE link simulation.
struct chain_config {
    budget::system_params params;
    budget::stage_allocation alloc;
    wave::ofdm_config ofdm;
    int n_frames = 10;
    std::uint64_t base_seed = 1;
    /// BS PA output backoff from its 1 dB compression point. The default is
    /// calibrated once so the TX-side EVM of the default PA model (knee
    /// sharpness 2) lands at the 3% class; the wire level is normalized to
    /// p_tx_bs afterwards.
    double bs_pa_backoff_db = 6.0;
    /// ADC full scale relative to the RMS of the converter input (4x RMS).
    double adc_headroom_db = 12.0411998265592;
    /// Required total SIC used for the budget-closure status; NaN derives it
    /// from the downlink solver.
    double required_sic_total_db = std::numeric_limits<double>::quiet_NaN();

    // Source/impairment toggles, mostly for experiments and component
    // bookkeeping.
    bool enable_si = true;
    bool enable_noise = true;
    bool enable_pa_nonlinearity = true;
    bool enable_rx_nonlinearity = true;
    bool enable_quantizer = true;

    void validate() const;
};

enum class probe_kind { ofdm, two_tone };

struct correction_point {
    double p_in_dbm = 0.0;
    double im3_sim_dbm = 0.0;   // input-referred, from the matched-pair subtraction
    double im3_pred_dbm = 0.0;  // two-tone prediction 3*p - 2*iip3
};

struct correction_curve {
    std::vector<correction_point> points;
    double offset_db = 0.0;          // mean(sim - pred) over the sweep
    double slope_db_per_db = 0.0;    // LS slope of sim vs p_in; NaN for a single point
};

/// Matched-pair distortion extraction: the probe runs through the nonlinear
/// amp and through an ideal amp of identical gain; the subtracted output is
/// the distortion, measured input-referred and fitted against the two-tone
/// prediction.
correction_curve run_im3_correction_experiment(const wave::ofdm_config& cfg,
                                               const blocks::amp_spec& amp,
                                               const std::vector<double>& sweep_p_in_dbm,
                                               std::uint64_t seed,
                                               probe_kind kind = probe_kind::ofdm);

/// Total distortion channel power at the PA output when driven to
/// target_out_dbm average with the given OFDM config (same matched-pair
/// subtraction).
double measure_pa_oim3(const wave::ofdm_config& cfg, const blocks::amp_spec& pa,
                       double target_out_dbm, std::uint64_t seed);

struct link_sim_report {
    double evm_tx_percent = 0.0;
    double evm_link_percent = 0.0;
    std::vector<double> evm_tx_frames;
    std::vector<double> evm_link_frames;
    budget::node_power_table node_powers;
    // First-frame constellation dumps (reference and equalized receive).
    wave::symbol_frame tx_ref, tx_rx;
    wave::symbol_frame link_ref, link_rx;
    double allocation_total_db = 0.0;
    double required_sic_total_db = 0.0;
    bool allocation_closes_budget = false;
};

/// Simulates the full downlink: BS TX through its PA and the path loss; UE
/// TX through its PA leaking across the EBD; LNA, RF SIC, mixer, BB amp,
/// analog SIC, ADC, digital SIC; then demodulation and EVM against the BS
/// reference symbols.
link_sim_report run_full_link(const chain_config& cfg);

/// Per-component node powers by toggled re-runs with identical seeds:
/// desired from a desired-only run, linear SI from an all-linear SI run,
/// PA and RX IM3 from waveform differences of progressively enabled
/// nonlinearities, noise from a noise-only run. Cross terms (and
/// quantization, which is only active in the full run) land in the
/// bookkeeping residual.
budget::node_power_table measure_node_powers(const chain_config& cfg);

struct comparison_cell {
    std::string node;
    std::string component;
    double measured_dbm = 0.0;
    double analytic_dbm = 0.0;
    double abs_diff_db = 0.0;  // 0 when both sides are -inf
    bool pass = true;
};

struct comparison_report {
    std::vector<comparison_cell> cells;
    bool all_pass = true;
    double max_abs_diff_db = 0.0;
};

/// Cellwise |measured - analytic| for the five tracked components against a
/// tolerance; -inf cells compare as equal.
comparison_report compare_with_budget(const budget::node_power_table& measured,
                                      const budget::node_power_table& analytic, double tol_db);

}  // namespace fdx::chain

#endif  // FDX_CHAIN_HPP

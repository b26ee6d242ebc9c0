#ifndef FDX_BUDGET_HPP
#define FDX_BUDGET_HPP

#include <map>
#include <string>
#include <vector>

#include "fdx/db.hpp"

namespace fdx::budget {

/// All scalar inputs of the link-budget solver: link geometry, per-block
/// gain/noise/linearity specs, and the margins of the allocation rules.
/// Everything is dB/dBm/Hz; NaN marks an optional value to be derived.
struct system_params {
    double p_tx_bs_dbm = 15.0;   // power delivered to the BS antenna
    double p_tx_ue_dbm = kNan;   // power delivered to the UE antenna; derived by the uplink solver when NaN
    double g_bs_dbi = 20.0;
    double g_ue_dbi = 20.0;
    double l_fs_db = kNan;       // free-space path loss; derived from distance/carrier when NaN
    double distance_m = 90.0;
    double carrier_hz = 28e9;
    double nf_bs_db = 8.0;
    double nf_ue_db = 8.0;
    double bw_dl_hz = 400e6;
    double bw_ul_hz = 400e6;
    double snr_link_db = 21.0;   // total link SNR for the modulation
    double snr_tx_ue_db = 24.0;  // TX-side SNR budget, uplink
    double snr_tx_bs_db = 30.0;  // TX-side SNR budget, downlink
    // Downlink design allocations. When NaN the solver derives them
    // (noise SNR from the thermal floor, IM3 SNR from the link split);
    // a given value that disagrees with the derivation is flagged in the
    // budget notes rather than silently replaced.
    double snr_noise_dl_db = kNan;
    double snr_im3_alloc_db = kNan;
    double ebd_tx_insertion_loss_db = 4.0;
    double g_lna_db = 20.0;
    double iip3_lna_dbm = -7.0;
    double iip3_rrx_dbm = -15.0;
    double iip3_mixer_dbm = 0.0;
    double iip3_bbamp_dbm = 5.0;
    double g_mixer_db = 0.0;
    double g_bbamp_db = 20.0;
    double op1db_pa_ue_dbm = 15.0;
    double pa_gain_db = 13.5;
    double pa_smoothness_p = 2.0;  // saturation knee sharpness of the PA model
    double p_oim3_pa_dbm = 0.0;    // PA output IM3 channel power
    double enob_bits = 8.0;
    double im3_correction_db = 8.0;     // modulated-signal correction on the two-tone IM3 formula
    double sic2_additive_term_db = 6.0; // additive constant of the RF-SIC rule
    double margin_noise_db = 3.0;
    double margin_rrx_db = 18.0;
    double margin_pa_im3_db = 10.0;
    double si_neglect_factor = 0.01;

    /// Effective path loss: the given value, or the free-space derivation.
    double effective_l_fs_db() const;

    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;

    static constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
};

struct uplink_report {
    double snr_rx_bs_db = 0.0;
    double snr_noise_db = 0.0;
    double p_rx_bs_min_dbm = 0.0;
    double p_tx_ue_min_dbm = 0.0;
    double p_pa_out_ue_min_dbm = 0.0;
};

/// Derived per-stage SIC requirements and the supporting SNR chain.
struct sic_plan {
    double snr_rx_ue_db = 0.0;
    double snr_noise_db = 0.0;
    double snr_im3_lna_db = 0.0;  // minimum IM3 SNR requirement (or its pinned value)
    double snr_si_db = 0.0;
    double p_rx_ue_dbm = 0.0;
    double p_pa_out_ue_dbm = 0.0;
    double p_im3_lna_plus_noise_dbm = 0.0;
    double sic_total_db = 0.0;
    double sic1_db = 0.0;
    double sic2_db = 0.0;
    double sic3_db = 0.0;
    double sic4_db = 0.0;
    double adc_dr_db = 0.0;
    double adc_residual_db = 0.0;  // SIC left for the digital domain
    bool adc_feasible = true;
};

/// Pinned intermediate values, keyed by the names below. Pinning lets a run
/// reproduce externally given (rounded) figures exactly while the unpinned
/// solve stays available for comparison.
using override_map = std::map<std::string, double>;

/// Keys accepted by solve_downlink overrides.
const std::vector<std::string>& downlink_override_keys();

/// One advisory note from the solver: a computed value that disagrees with
/// a given/pinned reference, tagged with a stable discrepancy id (see the
/// OQ*/R* catalogue in the README).
struct budget_note {
    std::string id;
    std::string quantity;
    double computed = 0.0;
    double reference = 0.0;
    std::string message;
};

double noise_floor_dbm(double bw_hz, double nf_db);
double min_received_power_dbm(double bw_hz, double nf_db, double snr_noise_db);
double friis_received_power_dbm(double p_tx_dbm, double g_tx_dbi, double l_fs_db, double g_rx_dbi);
double free_space_path_loss_db(double distance_m, double carrier_hz);

/// Input-referred IM3 power of a cubic block: 3*p_in - 2*iip3 + correction.
double im3_input_referred_dbm(double p_in_dbm, double iip3_dbm, double correction_db);

/// Residual-SI SNR requirement from the neglect rule:
/// 1/snr_si = factor * (1/snr_noise + 1/snr_im3), in the linear domain.
double snr_si_requirement_db(double snr_noise_db, double snr_im3_db, double neglect_factor);

double sic_total_db(double p_pa_out_ue_dbm, double p_rx_ue_dbm, double snr_si_db);
double sic1_requirement_db(double p_pa_out_ue_dbm, double p_rx_ue_dbm, double snr_im3_db,
                           double iip3_lna_dbm, double correction_db);
double sic2_requirement_db(double oip3_lna_dbm, double iip3_rrx_dbm, double additive_term_db);
double sic3_requirement_db(double p_oim3_pa_dbm, double p_im3_lna_plus_noise_dbm, double sic1_db,
                           double sic2_db, double margin_db);

struct adc_check_result {
    double dr_db = 0.0;
    bool feasible = true;
};
adc_check_result adc_dynamic_range_check(double enob_bits, double sic_total_db, double sic1_db,
                                         double sic2_db, double sic3_db);

/// Digital SIC requirement, floored at zero.
double sic4_requirement_db(double sic_total_db, double sic1_db, double sic2_db, double sic3_db);

uplink_report solve_uplink(const system_params& params);

sic_plan solve_downlink(const system_params& params, const override_map& overrides = {});

/// Notes comparing an unpinned solve against reference values (typically the
/// disabled override set plus any published targets).
std::vector<budget_note> budget_notes(const system_params& params, const sic_plan& computed,
                                      const override_map& references);

// ---------------------------------------------------------------------------
// Node power tracking

struct stage_allocation {
    double sic1_db = 0.0;
    double sic2_db = 0.0;
    double sic3_db = 0.0;
    double sic4_db = 0.0;
    double total_db() const { return sic1_db + sic2_db + sic3_db + sic4_db; }
};

/// Per-node power of each tracked component, dBm. -inf marks an absent
/// component at that node.
struct node_powers {
    std::string node;
    double desired_dbm = kNegInfDb;
    double si_linear_dbm = kNegInfDb;
    double pa_im3_dbm = kNegInfDb;
    double rx_im3_dbm = kNegInfDb;
    double noise_dbm = kNegInfDb;
    double residual_dbm = kNegInfDb;  // cross-term bookkeeping (measured tables only)
};

struct node_power_table {
    std::vector<node_powers> entries;
    const node_powers& at(const std::string& node) const;
};

/// Canonical node names, in chain order.
const std::vector<std::string>& node_names();

/// Analytic per-node component powers for a given stage allocation: gains
/// add, SIC stages subtract their depth from the components present in
/// their reference tap, receiver IM3 is injected at the LNA and the
/// post-LNA stages, noise is a single lumped injection at the LNA input.
node_power_table node_power_track(const system_params& params, const stage_allocation& alloc);

}  // namespace fdx::budget

#endif  // FDX_BUDGET_HPP

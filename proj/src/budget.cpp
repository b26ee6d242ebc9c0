#include "fdx/budget.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fdx::budget {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

double pinned_or(const override_map& ov, const std::string& key, double computed) {
    auto it = ov.find(key);
    return it != ov.end() ? it->second : computed;
}

void check_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be finite");
}

}  // namespace

double system_params::effective_l_fs_db() const {
    if (!std::isnan(l_fs_db)) return l_fs_db;
    return free_space_path_loss_db(distance_m, carrier_hz);
}

void system_params::validate() const {
    if (!(bw_dl_hz > 0.0) || !(bw_ul_hz > 0.0))
        throw std::invalid_argument("bandwidths must be > 0");
    if (!(enob_bits >= 1.0)) throw std::invalid_argument("enob_bits must be >= 1");
    if (!(si_neglect_factor > 0.0) || !(si_neglect_factor < 1.0))
        throw std::invalid_argument("si_neglect_factor must lie in (0, 1)");
    check_finite(g_bs_dbi, "g_bs_dbi");
    check_finite(g_ue_dbi, "g_ue_dbi");
    check_finite(g_lna_db, "g_lna_db");
    check_finite(nf_bs_db, "nf_bs_db");
    check_finite(nf_ue_db, "nf_ue_db");
    check_finite(ebd_tx_insertion_loss_db, "ebd_tx_insertion_loss_db");
    if (!std::isnan(l_fs_db) && !(l_fs_db > 0.0))
        throw std::invalid_argument("l_fs_db must be > 0 when supplied");
    if (std::isnan(l_fs_db)) {
        if (!(distance_m > 0.0)) throw std::invalid_argument("distance_m must be > 0");
        if (!(carrier_hz > 0.0)) throw std::invalid_argument("carrier_hz must be > 0");
    }
}

double noise_floor_dbm(double bw_hz, double nf_db) {
    if (!(bw_hz > 0.0)) throw std::invalid_argument("noise_floor_dbm: bw_hz must be > 0");
    return -174.0 + 10.0 * std::log10(bw_hz) + nf_db;
}

double min_received_power_dbm(double bw_hz, double nf_db, double snr_noise_db) {
    return noise_floor_dbm(bw_hz, nf_db) + snr_noise_db;
}

double friis_received_power_dbm(double p_tx_dbm, double g_tx_dbi, double l_fs_db,
                                double g_rx_dbi) {
    return p_tx_dbm + g_tx_dbi - l_fs_db + g_rx_dbi;
}

double free_space_path_loss_db(double distance_m, double carrier_hz) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("free_space_path_loss_db: distance_m must be > 0");
    if (!(carrier_hz > 0.0)) throw std::invalid_argument("free_space_path_loss_db: carrier_hz must be > 0");
    return 20.0 * std::log10(4.0 * M_PI * distance_m * carrier_hz / kSpeedOfLight);
}

double im3_input_referred_dbm(double p_in_dbm, double iip3_dbm, double correction_db) {
    return 3.0 * p_in_dbm - 2.0 * iip3_dbm + correction_db;
}

double snr_si_requirement_db(double snr_noise_db, double snr_im3_db, double neglect_factor) {
    if (!(neglect_factor > 0.0 && neglect_factor <= 1.0))
        throw std::invalid_argument("snr_si_requirement_db: neglect_factor must lie in (0, 1]");
    const double inv = neglect_factor * (std::pow(10.0, -snr_noise_db / 10.0) +
                                         std::pow(10.0, -snr_im3_db / 10.0));
    return -10.0 * std::log10(inv);
}

double sic_total_db(double p_pa_out_ue_dbm, double p_rx_ue_dbm, double snr_si_db) {
    return p_pa_out_ue_dbm - (p_rx_ue_dbm - snr_si_db);
}

double sic1_requirement_db(double p_pa_out_ue_dbm, double p_rx_ue_dbm, double snr_im3_db,
                           double iip3_lna_dbm, double correction_db) {
    return p_pa_out_ue_dbm -
           (p_rx_ue_dbm - snr_im3_db + 2.0 * iip3_lna_dbm - correction_db) / 3.0;
}

double sic2_requirement_db(double oip3_lna_dbm, double iip3_rrx_dbm, double additive_term_db) {
    return (2.0 / 3.0) * (oip3_lna_dbm - iip3_rrx_dbm) + additive_term_db;
}

double sic3_requirement_db(double p_oim3_pa_dbm, double p_im3_lna_plus_noise_dbm, double sic1_db,
                           double sic2_db, double margin_db) {
    return p_oim3_pa_dbm - p_im3_lna_plus_noise_dbm - sic1_db - sic2_db + margin_db;
}

adc_check_result adc_dynamic_range_check(double enob_bits, double sic_total_db, double sic1_db,
                                         double sic2_db, double sic3_db) {
    if (!(enob_bits >= 1.0)) throw std::invalid_argument("adc_dynamic_range_check: enob_bits must be >= 1");
    adc_check_result r;
    r.dr_db = 6.0 * (enob_bits - 2.0);
    r.feasible = r.dr_db > sic_total_db - (sic1_db + sic2_db + sic3_db);
    return r;
}

double sic4_requirement_db(double sic_total_db, double sic1_db, double sic2_db, double sic3_db) {
    return std::max(0.0, sic_total_db - (sic1_db + sic2_db + sic3_db));
}

uplink_report solve_uplink(const system_params& params) {
    params.validate();
    uplink_report r;
    try {
        r.snr_rx_bs_db = required_component_snr(params.snr_link_db, params.snr_tx_ue_db);
    } catch (const infeasible_error& e) {
        throw infeasible_error("uplink/snr_rx_bs", e.what());
    }
    r.snr_noise_db = r.snr_rx_bs_db + params.margin_noise_db;
    r.p_rx_bs_min_dbm = min_received_power_dbm(params.bw_ul_hz, params.nf_bs_db, r.snr_noise_db);
    const double l_fs = params.effective_l_fs_db();
    r.p_tx_ue_min_dbm = r.p_rx_bs_min_dbm - params.g_ue_dbi + l_fs - params.g_bs_dbi;
    r.p_pa_out_ue_min_dbm = r.p_tx_ue_min_dbm + params.ebd_tx_insertion_loss_db;
    return r;
}

const std::vector<std::string>& downlink_override_keys() {
    static const std::vector<std::string> keys = {
        "p_pa_out_ue_dbm", "p_rx_ue_dbm",  "snr_rx_ue_db",
        "snr_noise_db",    "snr_im3_db",   "snr_si_db",
        "p_im3_lna_plus_noise_dbm",        "sic_total_db",
        "sic1_db",         "sic2_db",      "sic3_db",
    };
    return keys;
}

sic_plan solve_downlink(const system_params& params, const override_map& overrides) {
    params.validate();
    for (const auto& [k, v] : overrides) {
        const auto& keys = downlink_override_keys();
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw std::invalid_argument("solve_downlink: unknown override key '" + k + "'");
        (void)v;
    }

    sic_plan plan;
    const double l_fs = params.effective_l_fs_db();

    // PA output requirement comes from the uplink unless the UE antenna
    // power is given directly.
    double p_pa_out;
    if (!std::isnan(params.p_tx_ue_dbm)) {
        p_pa_out = params.p_tx_ue_dbm + params.ebd_tx_insertion_loss_db;
    } else {
        p_pa_out = solve_uplink(params).p_pa_out_ue_min_dbm;
    }
    plan.p_pa_out_ue_dbm = pinned_or(overrides, "p_pa_out_ue_dbm", p_pa_out);

    plan.p_rx_ue_dbm = pinned_or(
        overrides, "p_rx_ue_dbm",
        friis_received_power_dbm(params.p_tx_bs_dbm, params.g_bs_dbi, l_fs, params.g_ue_dbi));

    try {
        plan.snr_rx_ue_db = pinned_or(overrides, "snr_rx_ue_db",
                                      required_component_snr(params.snr_link_db, params.snr_tx_bs_db));
    } catch (const infeasible_error& e) {
        throw infeasible_error("downlink/snr_rx_ue", e.what());
    }

    const double floor_dbm = noise_floor_dbm(params.bw_dl_hz, params.nf_ue_db);
    const double snr_noise_derived = plan.p_rx_ue_dbm - floor_dbm;
    plan.snr_noise_db = pinned_or(overrides, "snr_noise_db",
                                  std::isnan(params.snr_noise_dl_db) ? snr_noise_derived
                                                                     : params.snr_noise_dl_db);

    // SI-free degenerate: no self-interference, no cancellation needed.
    if (is_neg_inf(plan.p_pa_out_ue_dbm)) {
        plan.snr_im3_lna_db = kPosInfDb;
        plan.snr_si_db = kPosInfDb;
        plan.p_im3_lna_plus_noise_dbm = floor_dbm;
        plan.sic_total_db = plan.sic1_db = plan.sic2_db = plan.sic3_db = plan.sic4_db = 0.0;
        const auto adc = adc_dynamic_range_check(params.enob_bits, 0.0, 0.0, 0.0, 0.0);
        plan.adc_dr_db = adc.dr_db;
        plan.adc_residual_db = 0.0;
        plan.adc_feasible = adc.feasible;
        return plan;
    }

    double snr_im3_min;
    try {
        snr_im3_min = required_component_snr(plan.snr_rx_ue_db, plan.snr_noise_db);
    } catch (const infeasible_error& e) {
        throw infeasible_error("downlink/snr_im3", e.what());
    }
    plan.snr_im3_lna_db = pinned_or(overrides, "snr_im3_db", snr_im3_min);

    // Allocation used downstream: a pinned value wins, then the given
    // design allocation, then the computed minimum requirement.
    const double snr_im3_alloc =
        pinned_or(overrides, "snr_im3_db",
                  std::isnan(params.snr_im3_alloc_db) ? snr_im3_min : params.snr_im3_alloc_db);

    plan.snr_si_db = pinned_or(
        overrides, "snr_si_db",
        snr_si_requirement_db(plan.snr_noise_db, snr_im3_alloc, params.si_neglect_factor));

    plan.sic_total_db = pinned_or(
        overrides, "sic_total_db",
        sic_total_db(plan.p_pa_out_ue_dbm, plan.p_rx_ue_dbm, plan.snr_si_db));

    plan.sic1_db = pinned_or(overrides, "sic1_db",
                             sic1_requirement_db(plan.p_pa_out_ue_dbm, plan.p_rx_ue_dbm,
                                                 snr_im3_alloc, params.iip3_lna_dbm,
                                                 params.im3_correction_db));

    const double oip3_lna = params.g_lna_db + params.iip3_lna_dbm;
    plan.sic2_db = pinned_or(
        overrides, "sic2_db",
        sic2_requirement_db(oip3_lna, params.iip3_rrx_dbm, params.sic2_additive_term_db));

    const double p_si1 = plan.p_pa_out_ue_dbm - plan.sic1_db;
    const double lna_im3_in =
        im3_input_referred_dbm(p_si1, params.iip3_lna_dbm, params.im3_correction_db);
    plan.p_im3_lna_plus_noise_dbm = pinned_or(overrides, "p_im3_lna_plus_noise_dbm",
                                              power_sum_dbm({floor_dbm, lna_im3_in}));

    plan.sic3_db = pinned_or(overrides, "sic3_db",
                             sic3_requirement_db(params.p_oim3_pa_dbm,
                                                 plan.p_im3_lna_plus_noise_dbm, plan.sic1_db,
                                                 plan.sic2_db, params.margin_pa_im3_db));

    plan.sic4_db = sic4_requirement_db(plan.sic_total_db, plan.sic1_db, plan.sic2_db, plan.sic3_db);

    const auto adc = adc_dynamic_range_check(params.enob_bits, plan.sic_total_db, plan.sic1_db,
                                             plan.sic2_db, plan.sic3_db);
    plan.adc_dr_db = adc.dr_db;
    plan.adc_residual_db = plan.sic_total_db - (plan.sic1_db + plan.sic2_db + plan.sic3_db);
    plan.adc_feasible = adc.feasible;
    return plan;
}

namespace {

struct note_tag {
    const char* key;
    const char* id;
};

// Stable ids for the known discrepancies between the bundled reference
// values and the formula chain (OQ*) and plain rounding gaps (R*).
constexpr note_tag kNoteCatalogue[] = {
    {"snr_noise_db", "OQ1"},
    {"snr_si_db", "OQ2"},
    {"sic_total_db", "OQ2"},
    {"sic2_db", "OQ3"},
    {"p_im3_lna_plus_noise_dbm", "OQ4"},
    {"sic3_db", "OQ4"},
    {"sic4_db", "OQ5"},
    {"snr_im3_db", "R1"},
    {"sic1_db", "R2"},
};

double plan_value(const sic_plan& p, const std::string& key) {
    if (key == "p_pa_out_ue_dbm") return p.p_pa_out_ue_dbm;
    if (key == "p_rx_ue_dbm") return p.p_rx_ue_dbm;
    if (key == "snr_rx_ue_db") return p.snr_rx_ue_db;
    if (key == "snr_noise_db") return p.snr_noise_db;
    if (key == "snr_im3_db") return p.snr_im3_lna_db;
    if (key == "snr_si_db") return p.snr_si_db;
    if (key == "p_im3_lna_plus_noise_dbm") return p.p_im3_lna_plus_noise_dbm;
    if (key == "sic_total_db") return p.sic_total_db;
    if (key == "sic1_db") return p.sic1_db;
    if (key == "sic2_db") return p.sic2_db;
    if (key == "sic3_db") return p.sic3_db;
    if (key == "sic4_db") return p.sic4_db;
    throw std::invalid_argument("budget_notes: unknown quantity '" + key + "'");
}

}  // namespace

std::vector<budget_note> budget_notes(const system_params& params, const sic_plan& computed,
                                      const override_map& references) {
    std::vector<budget_note> notes;
    constexpr double kTol = 0.05;

    // Given downlink noise allocation vs the thermal derivation.
    if (!std::isnan(params.snr_noise_dl_db)) {
        const double derived = computed.p_rx_ue_dbm -
                               noise_floor_dbm(params.bw_dl_hz, params.nf_ue_db);
        if (std::fabs(derived - params.snr_noise_dl_db) > kTol) {
            std::ostringstream msg;
            msg << "given downlink noise-SNR allocation " << params.snr_noise_dl_db
                << " dB differs from the thermal-floor derivation " << derived << " dB";
            notes.push_back({"OQ1", "snr_noise_db", derived, params.snr_noise_dl_db, msg.str()});
        }
    }

    for (const auto& tag : kNoteCatalogue) {
        auto it = references.find(tag.key);
        if (it == references.end()) continue;
        if (std::string(tag.key) == "snr_noise_db") continue;  // handled above
        const double got = plan_value(computed, tag.key);
        if (std::fabs(got - it->second) > kTol) {
            std::ostringstream msg;
            msg << tag.key << " computed as " << got << " differs from reference " << it->second;
            notes.push_back({tag.id, tag.key, got, it->second, msg.str()});
        }
    }
    return notes;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& node_names() {
    static const std::vector<std::string> names = {
        "antenna",  "post_sic1",  "post_lna",  "post_sic2", "post_mixer",
        "post_bbamp", "post_sic3", "post_adc", "post_sic4",
    };
    return names;
}

const node_powers& node_power_table::at(const std::string& node) const {
    for (const auto& e : entries)
        if (e.node == node) return e;
    throw std::invalid_argument("node_power_table: no node named '" + node + "'");
}

node_power_table node_power_track(const system_params& params, const stage_allocation& alloc) {
    params.validate();
    if (std::isnan(alloc.sic1_db) || std::isnan(alloc.sic2_db) || std::isnan(alloc.sic3_db) ||
        std::isnan(alloc.sic4_db))
        throw std::invalid_argument("node_power_track: incomplete stage allocation");

    const double l_fs = params.effective_l_fs_db();
    const double p_rx_ue =
        friis_received_power_dbm(params.p_tx_bs_dbm, params.g_bs_dbi, l_fs, params.g_ue_dbi);
    const double p_pa_out = !std::isnan(params.p_tx_ue_dbm)
                                ? params.p_tx_ue_dbm + params.ebd_tx_insertion_loss_db
                                : solve_uplink(params).p_pa_out_ue_min_dbm;
    const double floor_dbm = noise_floor_dbm(params.bw_dl_hz, params.nf_ue_db);

    // Running state, input-referred to each node's own plane.
    double desired = p_rx_ue;
    double si = p_pa_out;           // TX power present at the shared antenna port
    double pa_im3 = params.p_oim3_pa_dbm;
    double rx_im3 = kNegInfDb;
    double noise = floor_dbm;       // lumped cascade NF at the LNA input

    node_power_table table;
    auto push = [&](const std::string& name) {
        table.entries.push_back({name, desired, si, pa_im3, rx_im3, noise, kNegInfDb});
    };

    push("antenna");

    // EBD isolation: attenuates everything arriving from the PA.
    si -= alloc.sic1_db;
    pa_im3 -= alloc.sic1_db;
    push("post_sic1");

    // LNA: gain on all components, plus its own IM3 driven by the SI level
    // at its input.
    const double lna_im3 =
        im3_input_referred_dbm(si, params.iip3_lna_dbm, params.im3_correction_db) +
        params.g_lna_db;
    desired += params.g_lna_db;
    si += params.g_lna_db;
    pa_im3 += params.g_lna_db;
    noise += params.g_lna_db;
    rx_im3 = lna_im3;
    push("post_lna");

    // RF SIC: reference tapped from the PA output, so it sees linear SI and
    // PA IM3 but not receiver-generated IM3.
    si -= alloc.sic2_db;
    pa_im3 -= alloc.sic2_db;
    push("post_sic2");

    const double mixer_im3 =
        im3_input_referred_dbm(si, params.iip3_mixer_dbm, params.im3_correction_db) +
        params.g_mixer_db;
    desired += params.g_mixer_db;
    si += params.g_mixer_db;
    pa_im3 += params.g_mixer_db;
    noise += params.g_mixer_db;
    rx_im3 = power_sum_dbm({rx_im3 + params.g_mixer_db, mixer_im3});
    push("post_mixer");

    const double bb_im3 =
        im3_input_referred_dbm(si, params.iip3_bbamp_dbm, params.im3_correction_db) +
        params.g_bbamp_db;
    desired += params.g_bbamp_db;
    si += params.g_bbamp_db;
    pa_im3 += params.g_bbamp_db;
    noise += params.g_bbamp_db;
    rx_im3 = power_sum_dbm({rx_im3 + params.g_bbamp_db, bb_im3});
    push("post_bbamp");

    si -= alloc.sic3_db;
    pa_im3 -= alloc.sic3_db;
    push("post_sic3");

    // Quantization noise is excluded from the analytic noise row; the
    // simulated comparison attributes it to the bookkeeping residual.
    push("post_adc");

    // Digital SIC references the ideal transmit waveform: PA IM3 is not in
    // the reference and passes through untouched.
    si -= alloc.sic4_db;
    push("post_sic4");

    return table;
}

}  // namespace fdx::budget

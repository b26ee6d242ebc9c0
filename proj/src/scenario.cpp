#include "fdx/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace fdx::scenario {

namespace {

using json = nlohmann::ordered_json;

using param_field = std::pair<const char*, double budget::system_params::*>;

const std::vector<param_field>& param_fields() {
    static const std::vector<param_field> fields = {
        {"p_tx_bs_dbm", &budget::system_params::p_tx_bs_dbm},
        {"p_tx_ue_dbm", &budget::system_params::p_tx_ue_dbm},
        {"g_bs_dbi", &budget::system_params::g_bs_dbi},
        {"g_ue_dbi", &budget::system_params::g_ue_dbi},
        {"l_fs_db", &budget::system_params::l_fs_db},
        {"distance_m", &budget::system_params::distance_m},
        {"carrier_hz", &budget::system_params::carrier_hz},
        {"nf_bs_db", &budget::system_params::nf_bs_db},
        {"nf_ue_db", &budget::system_params::nf_ue_db},
        {"bw_dl_hz", &budget::system_params::bw_dl_hz},
        {"bw_ul_hz", &budget::system_params::bw_ul_hz},
        {"snr_link_db", &budget::system_params::snr_link_db},
        {"snr_tx_ue_db", &budget::system_params::snr_tx_ue_db},
        {"snr_tx_bs_db", &budget::system_params::snr_tx_bs_db},
        {"snr_noise_dl_db", &budget::system_params::snr_noise_dl_db},
        {"snr_im3_alloc_db", &budget::system_params::snr_im3_alloc_db},
        {"ebd_tx_insertion_loss_db", &budget::system_params::ebd_tx_insertion_loss_db},
        {"g_lna_db", &budget::system_params::g_lna_db},
        {"iip3_lna_dbm", &budget::system_params::iip3_lna_dbm},
        {"iip3_rrx_dbm", &budget::system_params::iip3_rrx_dbm},
        {"iip3_mixer_dbm", &budget::system_params::iip3_mixer_dbm},
        {"iip3_bbamp_dbm", &budget::system_params::iip3_bbamp_dbm},
        {"g_mixer_db", &budget::system_params::g_mixer_db},
        {"g_bbamp_db", &budget::system_params::g_bbamp_db},
        {"op1db_pa_ue_dbm", &budget::system_params::op1db_pa_ue_dbm},
        {"pa_gain_db", &budget::system_params::pa_gain_db},
        {"pa_smoothness_p", &budget::system_params::pa_smoothness_p},
        {"p_oim3_pa_dbm", &budget::system_params::p_oim3_pa_dbm},
        {"enob_bits", &budget::system_params::enob_bits},
        {"im3_correction_db", &budget::system_params::im3_correction_db},
        {"sic2_additive_term_db", &budget::system_params::sic2_additive_term_db},
        {"margin_noise_db", &budget::system_params::margin_noise_db},
        {"margin_rrx_db", &budget::system_params::margin_rrx_db},
        {"margin_pa_im3_db", &budget::system_params::margin_pa_im3_db},
        {"si_neglect_factor", &budget::system_params::si_neglect_factor},
    };
    return fields;
}

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw std::invalid_argument(origin + ": " + what);
}

double number_at(const json& obj, const std::string& loc, const std::string& key) {
    const auto& v = obj.at(key);
    if (v.is_string()) {
        // "-inf" is the encodable absent-signal sentinel
        const std::string s = v.get<std::string>();
        if (s == "-inf") return kNegInfDb;
        fail(loc, "value of '" + key + "' must be a number or \"-inf\"");
    }
    if (!v.is_number()) fail(loc, "value of '" + key + "' must be a number");
    return v.get<double>();
}

/// Walks an object with a per-key handler; any key the handler does not
/// recognize is an error naming the full path.
void walk_object(const json& obj, const std::string& loc,
                 const std::function<bool(const std::string&)>& handle) {
    if (!obj.is_object()) fail(loc, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!handle(key)) fail(loc, "unknown key '" + loc + "." + key + "'");
    }
}

void parse_params(const json& obj, const std::string& loc, budget::system_params& out) {
    walk_object(obj, loc, [&](const std::string& key) {
        for (const auto& [name, member] : param_fields()) {
            if (key == name) {
                out.*member = number_at(obj, loc, key);
                return true;
            }
        }
        return false;
    });
}

void parse_ofdm(const json& obj, const std::string& loc, wave::ofdm_config& out) {
    walk_object(obj, loc, [&](const std::string& key) {
        if (key == "scs_hz") out.scs_hz = number_at(obj, loc, key);
        else if (key == "occupied_bw_hz") out.occupied_bw_hz = number_at(obj, loc, key);
        else if (key == "fft_size") out.fft_size = obj.at(key).get<std::size_t>();
        else if (key == "n_active_subcarriers") out.n_active_subcarriers = obj.at(key).get<std::size_t>();
        else if (key == "cp_fraction") out.cp_fraction = number_at(obj, loc, key);
        else if (key == "n_symbols") out.n_symbols = obj.at(key).get<std::size_t>();
        else if (key == "oversampling_factor") out.oversampling_factor = obj.at(key).get<std::size_t>();
        else if (key == "avg_power_dbm") out.avg_power_dbm = number_at(obj, loc, key);
        else return false;
        return true;
    });
}

void parse_allocation(const json& obj, const std::string& loc, budget::stage_allocation& out) {
    walk_object(obj, loc, [&](const std::string& key) {
        if (key == "sic1_db") out.sic1_db = number_at(obj, loc, key);
        else if (key == "sic2_db") out.sic2_db = number_at(obj, loc, key);
        else if (key == "sic3_db") out.sic3_db = number_at(obj, loc, key);
        else if (key == "sic4_db") out.sic4_db = number_at(obj, loc, key);
        else return false;
        return true;
    });
}

void parse_pin_map(const json& obj, const std::string& loc, budget::override_map& out,
                   bool allow_sic4) {
    const auto& keys = budget::downlink_override_keys();
    walk_object(obj, loc, [&](const std::string& key) {
        const bool known = std::find(keys.begin(), keys.end(), key) != keys.end() ||
                           (allow_sic4 && key == "sic4_db");
        if (!known) return false;
        out[key] = number_at(obj, loc, key);
        return true;
    });
}

}  // namespace

chain::chain_config scenario::to_chain_config() const {
    chain::chain_config cfg;
    cfg.params = params;
    cfg.alloc = alloc;
    cfg.ofdm = ofdm;
    cfg.n_frames = n_frames;
    cfg.base_seed = base_seed;
    cfg.bs_pa_backoff_db = bs_pa_backoff_db;
    cfg.enable_si = enable_si;
    cfg.enable_noise = enable_noise;
    cfg.enable_pa_nonlinearity = enable_pa_nonlinearity;
    cfg.enable_rx_nonlinearity = enable_rx_nonlinearity;
    cfg.enable_quantizer = enable_quantizer;
    return cfg;
}

scenario parse_scenario(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(origin, std::string("not valid JSON: ") + e.what());
    }

    scenario sc;
    walk_object(doc, origin, [&](const std::string& key) {
        if (key == "params") parse_params(doc.at(key), origin + ".params", sc.params);
        else if (key == "ofdm") parse_ofdm(doc.at(key), origin + ".ofdm", sc.ofdm);
        else if (key == "allocation") parse_allocation(doc.at(key), origin + ".allocation", sc.alloc);
        else if (key == "overrides")
            parse_pin_map(doc.at(key), origin + ".overrides", sc.overrides, false);
        else if (key == "reference_targets")
            parse_pin_map(doc.at(key), origin + ".reference_targets", sc.reference_targets, true);
        else if (key == "simulation") {
            const auto& sim = doc.at(key);
            walk_object(sim, origin + ".simulation", [&](const std::string& k) {
                if (k == "n_frames") sc.n_frames = sim.at(k).get<int>();
                else if (k == "base_seed") sc.base_seed = sim.at(k).get<std::uint64_t>();
                else if (k == "bs_pa_backoff_db") sc.bs_pa_backoff_db = number_at(sim, origin + ".simulation", k);
                else if (k == "enable_si") sc.enable_si = sim.at(k).get<bool>();
                else if (k == "enable_noise") sc.enable_noise = sim.at(k).get<bool>();
                else if (k == "enable_pa_nonlinearity") sc.enable_pa_nonlinearity = sim.at(k).get<bool>();
                else if (k == "enable_rx_nonlinearity") sc.enable_rx_nonlinearity = sim.at(k).get<bool>();
                else if (k == "enable_quantizer") sc.enable_quantizer = sim.at(k).get<bool>();
                else return false;
                return true;
            });
        } else if (key == "im3_sweep") {
            const auto& sw = doc.at(key);
            const std::string loc = origin + ".im3_sweep";
            walk_object(sw, loc, [&](const std::string& k) {
                if (k == "amp_gain_db") sc.im3_sweep.amp_gain_db = number_at(sw, loc, k);
                else if (k == "amp_iip3_dbm") sc.im3_sweep.amp_iip3_dbm = number_at(sw, loc, k);
                else if (k == "pin_start_dbm") sc.im3_sweep.pin_start_dbm = number_at(sw, loc, k);
                else if (k == "pin_stop_dbm") sc.im3_sweep.pin_stop_dbm = number_at(sw, loc, k);
                else if (k == "pin_step_db") sc.im3_sweep.pin_step_db = number_at(sw, loc, k);
                else if (k == "seed") sc.im3_sweep.seed = sw.at(k).get<std::uint64_t>();
                else if (k == "n_symbols") sc.im3_sweep.n_symbols = sw.at(k).get<std::size_t>();
                else return false;
                return true;
            });
        } else if (key == "outputs") {
            const auto& outs = doc.at(key);
            walk_object(outs, origin + ".outputs", [&](const std::string& k) {
                if (k == "dir") sc.output_dir = outs.at(k).get<std::string>();
                else return false;
                return true;
            });
        } else {
            return false;
        }
        return true;
    });

    sc.params.validate();
    sc.ofdm.validate();
    return sc;
}

scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("scenario: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

void apply_override(scenario& sc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override: expected key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string val = assignment.substr(eq + 1);
    double value;
    if (val == "-inf") {
        value = kNegInfDb;
    } else {
        try {
            std::size_t pos = 0;
            value = std::stod(val, &pos);
            if (pos != val.size()) throw std::invalid_argument(val);
        } catch (const std::exception&) {
            throw std::invalid_argument("override: value of '" + key + "' is not a number");
        }
    }

    for (const auto& [name, member] : param_fields()) {
        if (key == name) {
            sc.params.*member = value;
            return;
        }
    }
    const auto& plan_keys = budget::downlink_override_keys();
    if (std::find(plan_keys.begin(), plan_keys.end(), key) != plan_keys.end()) {
        sc.overrides[key] = value;
        return;
    }
    if (key == "sic1_alloc_db") { sc.alloc.sic1_db = value; return; }
    if (key == "sic2_alloc_db") { sc.alloc.sic2_db = value; return; }
    if (key == "sic3_alloc_db") { sc.alloc.sic3_db = value; return; }
    if (key == "sic4_alloc_db") { sc.alloc.sic4_db = value; return; }
    throw std::invalid_argument("override: unknown key '" + key + "'");
}

}  // namespace fdx::scenario

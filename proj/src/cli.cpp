#include "fdx/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "fdx/chain.hpp"
#include "fdx/scenario.hpp"

namespace fdx::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt_num(double v) {
    if (is_neg_inf(v)) return "-inf";
    if (std::isinf(v)) return "inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

json num_or_string(double v) {
    if (std::isinf(v)) return json(fmt_num(v));  // JSON has no infinities
    return json(v);
}

/// Temp-and-rename so readers never observe a partial file.
void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::invalid_argument("cannot write '" + tmp.string() + "'");
        out << content;
    }
    fs::rename(tmp, path);
}

json plan_to_json(const budget::sic_plan& p) {
    json j;
    j["snr_rx_ue_db"] = num_or_string(p.snr_rx_ue_db);
    j["snr_noise_db"] = num_or_string(p.snr_noise_db);
    j["snr_im3_db"] = num_or_string(p.snr_im3_lna_db);
    j["snr_si_db"] = num_or_string(p.snr_si_db);
    j["p_rx_ue_dbm"] = num_or_string(p.p_rx_ue_dbm);
    j["p_pa_out_ue_dbm"] = num_or_string(p.p_pa_out_ue_dbm);
    j["p_im3_lna_plus_noise_dbm"] = num_or_string(p.p_im3_lna_plus_noise_dbm);
    j["sic_total_db"] = num_or_string(p.sic_total_db);
    j["sic1_db"] = num_or_string(p.sic1_db);
    j["sic2_db"] = num_or_string(p.sic2_db);
    j["sic3_db"] = num_or_string(p.sic3_db);
    j["sic4_db"] = num_or_string(p.sic4_db);
    j["adc_dr_db"] = num_or_string(p.adc_dr_db);
    j["adc_residual_db"] = num_or_string(p.adc_residual_db);
    j["adc_feasible"] = p.adc_feasible;
    return j;
}

void print_kv(std::ostream& out, const char* key, double v) {
    out << "  " << std::left << std::setw(28) << key << fmt_num(v) << "\n";
}

int cmd_budget(const scenario::scenario& sc, bool no_overrides, const std::string& format,
               std::ostream& out) {
    const auto& params = sc.params;
    const budget::override_map active = no_overrides ? budget::override_map{} : sc.overrides;

    const budget::uplink_report up = budget::solve_uplink(params);
    const budget::sic_plan plan = budget::solve_downlink(params, active);

    // Notes always compare the unpinned solve against the scenario's pinned
    // values and published targets.
    budget::override_map refs = sc.overrides;
    for (const auto& [k, v] : sc.reference_targets) refs[k] = v;
    const budget::sic_plan free_plan = budget::solve_downlink(params, {});
    const auto notes = budget::budget_notes(params, free_plan, refs);

    if (format == "json") {
        json j;
        j["uplink"]["snr_rx_bs_db"] = num_or_string(up.snr_rx_bs_db);
        j["uplink"]["snr_noise_db"] = num_or_string(up.snr_noise_db);
        j["uplink"]["p_rx_bs_min_dbm"] = num_or_string(up.p_rx_bs_min_dbm);
        j["uplink"]["p_tx_ue_min_dbm"] = num_or_string(up.p_tx_ue_min_dbm);
        j["uplink"]["p_pa_out_ue_min_dbm"] = num_or_string(up.p_pa_out_ue_min_dbm);
        j["plan"] = plan_to_json(plan);
        j["overrides_active"] = !no_overrides;
        j["notes"] = json::array();
        for (const auto& n : notes) {
            json jn;
            jn["id"] = n.id;
            jn["quantity"] = n.quantity;
            jn["computed"] = num_or_string(n.computed);
            jn["reference"] = num_or_string(n.reference);
            jn["message"] = n.message;
            j["notes"].push_back(jn);
        }
        j["feasible"] = plan.adc_feasible;
        out << j.dump(2) << "\n";
    } else {
        out << "uplink:\n";
        print_kv(out, "snr_rx_bs_db", up.snr_rx_bs_db);
        print_kv(out, "snr_noise_db", up.snr_noise_db);
        print_kv(out, "p_rx_bs_min_dbm", up.p_rx_bs_min_dbm);
        print_kv(out, "p_tx_ue_min_dbm", up.p_tx_ue_min_dbm);
        print_kv(out, "p_pa_out_ue_min_dbm", up.p_pa_out_ue_min_dbm);
        out << "downlink (" << (no_overrides ? "formula values" : "pinned values active")
            << "):\n";
        print_kv(out, "snr_rx_ue_db", plan.snr_rx_ue_db);
        print_kv(out, "snr_noise_db", plan.snr_noise_db);
        print_kv(out, "snr_im3_db", plan.snr_im3_lna_db);
        print_kv(out, "snr_si_db", plan.snr_si_db);
        print_kv(out, "p_rx_ue_dbm", plan.p_rx_ue_dbm);
        print_kv(out, "p_pa_out_ue_dbm", plan.p_pa_out_ue_dbm);
        print_kv(out, "p_im3_lna_plus_noise_dbm", plan.p_im3_lna_plus_noise_dbm);
        print_kv(out, "sic_total_db", plan.sic_total_db);
        print_kv(out, "sic1_db", plan.sic1_db);
        print_kv(out, "sic2_db", plan.sic2_db);
        print_kv(out, "sic3_db", plan.sic3_db);
        print_kv(out, "sic4_db", plan.sic4_db);
        print_kv(out, "adc_dr_db", plan.adc_dr_db);
        print_kv(out, "adc_residual_db", plan.adc_residual_db);
        out << "  adc_feasible                " << (plan.adc_feasible ? "yes" : "no") << "\n";
        if (!notes.empty()) {
            out << "notes:\n";
            for (const auto& n : notes)
                out << "  [" << n.id << "] " << n.message << "\n";
        }
        out << "feasible: " << (plan.adc_feasible ? "yes" : "no") << "\n";
    }
    return plan.adc_feasible ? kOk : kInfeasible;
}

std::string constellation_csv(const wave::symbol_frame& ref, const wave::symbol_frame& rx) {
    std::string csv = "symbol_index,subcarrier_index,I_ref,Q_ref,I_rx,Q_rx\n";
    for (std::size_t s = 0; s < ref.n_symbols; ++s)
        for (std::size_t k = 0; k < ref.n_subcarriers; ++k) {
            const auto& r = ref.at(s, k);
            const auto& x = rx.at(s, k);
            csv += std::to_string(s) + "," + std::to_string(k) + "," + fmt_num(r.real()) + "," +
                   fmt_num(r.imag()) + "," + fmt_num(x.real()) + "," + fmt_num(x.imag()) + "\n";
        }
    return csv;
}

std::string node_table_csv(const budget::node_power_table& table) {
    std::string csv =
        "node,desired_dbm,si_linear_dbm,pa_im3_dbm,rx_im3_dbm,noise_dbm,residual_dbm\n";
    for (const auto& e : table.entries)
        csv += e.node + "," + fmt_num(e.desired_dbm) + "," + fmt_num(e.si_linear_dbm) + "," +
               fmt_num(e.pa_im3_dbm) + "," + fmt_num(e.rx_im3_dbm) + "," + fmt_num(e.noise_dbm) +
               "," + fmt_num(e.residual_dbm) + "\n";
    return csv;
}

int cmd_simulate(const scenario::scenario& sc, bool no_overrides, std::ostream& out) {
    chain::chain_config cfg = sc.to_chain_config();
    const budget::override_map active = no_overrides ? budget::override_map{} : sc.overrides;
    cfg.required_sic_total_db = budget::solve_downlink(cfg.params, active).sic_total_db;

    const chain::link_sim_report rep = chain::run_full_link(cfg);

    fs::create_directories(sc.output_dir);

    json j;
    j["evm_tx_percent"] = rep.evm_tx_percent;
    j["evm_link_percent"] = rep.evm_link_percent;
    j["evm_tx_frames"] = rep.evm_tx_frames;
    j["evm_link_frames"] = rep.evm_link_frames;
    j["n_frames"] = cfg.n_frames;
    j["base_seed"] = cfg.base_seed;
    j["allocation"]["sic1_db"] = cfg.alloc.sic1_db;
    j["allocation"]["sic2_db"] = cfg.alloc.sic2_db;
    j["allocation"]["sic3_db"] = cfg.alloc.sic3_db;
    j["allocation"]["sic4_db"] = cfg.alloc.sic4_db;
    j["allocation_total_db"] = rep.allocation_total_db;
    j["required_sic_total_db"] = rep.required_sic_total_db;
    j["allocation_closes_budget"] = rep.allocation_closes_budget;
    write_file_atomic(fs::path(sc.output_dir) / "report.json", j.dump(2) + "\n");
    write_file_atomic(fs::path(sc.output_dir) / "node_powers.csv",
                      node_table_csv(rep.node_powers));
    write_file_atomic(fs::path(sc.output_dir) / "constellation_tx.csv",
                      constellation_csv(rep.tx_ref, rep.tx_rx));
    write_file_atomic(fs::path(sc.output_dir) / "constellation_link.csv",
                      constellation_csv(rep.link_ref, rep.link_rx));

    out << "EVM_tx = " << fmt_num(rep.evm_tx_percent)
        << " %, EVM_link = " << fmt_num(rep.evm_link_percent) << " % over " << cfg.n_frames
        << " frames\n";
    out << "SIC allocation " << fmt_num(rep.allocation_total_db) << " dB vs required "
        << fmt_num(rep.required_sic_total_db) << " dB ("
        << (rep.allocation_closes_budget ? "budget closes" : "budget does not close") << ")\n";
    return kOk;
}

int cmd_im3_sweep(const scenario::scenario& sc, std::ostream& out) {
    const auto& sw = sc.im3_sweep;
    if (!(sw.pin_step_db > 0.0) && sw.pin_start_dbm != sw.pin_stop_dbm)
        throw std::invalid_argument("im3-sweep: pin_step_db must be > 0");
    if (sw.pin_stop_dbm < sw.pin_start_dbm)
        throw std::invalid_argument("im3-sweep: pin_stop_dbm below pin_start_dbm");

    std::vector<double> sweep;
    if (sw.pin_start_dbm == sw.pin_stop_dbm) {
        sweep.push_back(sw.pin_start_dbm);
    } else {
        for (double p = sw.pin_start_dbm; p <= sw.pin_stop_dbm + 1e-9; p += sw.pin_step_db)
            sweep.push_back(p);
    }

    wave::ofdm_config cfg = sc.ofdm;
    cfg.n_symbols = sw.n_symbols;
    const auto amp = blocks::amp_spec::polynomial(sw.amp_gain_db, sw.amp_iip3_dbm);
    const chain::correction_curve curve =
        chain::run_im3_correction_experiment(cfg, amp, sweep, sw.seed);

    std::string csv = "p_in_dbm,im3_sim_dbm,im3_pred_dbm\n";
    for (const auto& pt : curve.points)
        csv += fmt_num(pt.p_in_dbm) + "," + fmt_num(pt.im3_sim_dbm) + "," +
               fmt_num(pt.im3_pred_dbm) + "\n";
    fs::create_directories(sc.output_dir);
    write_file_atomic(fs::path(sc.output_dir) / "im3_sweep.csv", csv);

    out << "fitted offset_db = " << fmt_num(curve.offset_db);
    if (curve.points.size() >= 2)
        out << ", slope = " << fmt_num(curve.slope_db_per_db) << " dB/dB";
    out << " over " << curve.points.size() << " points\n";
    return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Full-duplex mm-wave link budget solver and baseband link simulator"};
    app.require_subcommand(1);

    std::string scenario_path, format = "table", out_dir;
    bool no_overrides = false;
    std::vector<std::string> cli_overrides;
    int frames = -1;
    std::int64_t seed = -1;
    double pin_start = std::numeric_limits<double>::quiet_NaN();
    double pin_stop = std::numeric_limits<double>::quiet_NaN();
    double pin_step = std::numeric_limits<double>::quiet_NaN();

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
        cmd->add_option("--override", cli_overrides, "key=value assignment applied after parse");
        cmd->add_flag("--no-overrides", no_overrides, "disable the scenario's pinned values");
    };

    CLI::App* budget_cmd = app.add_subcommand("budget", "solve the uplink and SIC budget");
    add_common(budget_cmd);
    budget_cmd->add_option("--format", format, "table|json")
        ->check(CLI::IsMember({"table", "json"}));

    CLI::App* sim_cmd = app.add_subcommand("simulate", "run the full-link simulation");
    add_common(sim_cmd);
    sim_cmd->add_option("--frames", frames, "Monte-Carlo frames");
    sim_cmd->add_option("--seed", seed, "base seed");
    sim_cmd->add_option("--out", out_dir, "output directory");

    CLI::App* sweep_cmd = app.add_subcommand("im3-sweep", "distortion correction-factor sweep");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--pin-start", pin_start, "sweep start, dBm");
    sweep_cmd->add_option("--pin-stop", pin_stop, "sweep stop, dBm");
    sweep_cmd->add_option("--pin-step", pin_step, "sweep step, dB");
    sweep_cmd->add_option("--out", out_dir, "output directory");
    sweep_cmd->add_option("--seed", seed, "sweep seed");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return kOk;
        }
        err << "error: " << e.what() << "\n";
        return kInputError;
    }

    try {
        scenario::scenario sc = scenario::load_scenario(scenario_path);
        for (const auto& ov : cli_overrides) scenario::apply_override(sc, ov);
        sc.params.validate();

        if (budget_cmd->parsed()) return cmd_budget(sc, no_overrides, format, out);
        if (sim_cmd->parsed()) {
            if (frames > 0) sc.n_frames = frames;
            if (seed >= 0) sc.base_seed = static_cast<std::uint64_t>(seed);
            if (!out_dir.empty()) sc.output_dir = out_dir;
            return cmd_simulate(sc, no_overrides, out);
        }
        if (sweep_cmd->parsed()) {
            if (!std::isnan(pin_start)) sc.im3_sweep.pin_start_dbm = pin_start;
            if (!std::isnan(pin_stop)) sc.im3_sweep.pin_stop_dbm = pin_stop;
            if (!std::isnan(pin_step)) sc.im3_sweep.pin_step_db = pin_step;
            if (seed >= 0) sc.im3_sweep.seed = static_cast<std::uint64_t>(seed);
            if (!out_dir.empty()) sc.output_dir = out_dir;
            return cmd_im3_sweep(sc, out);
        }
        err << "error: no command selected\n";
        return kInputError;
    } catch (const infeasible_error& e) {
        err << "infeasible at " << e.step() << ": " << e.what() << "\n";
        return kInfeasible;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace fdx::cli

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fdx/budget.hpp"

using namespace fdx;
using namespace fdx::budget;

namespace {

// Parameter set of the bundled reference scenario (mm-wave 64-QAM link,
// 400 MHz, 90 m) with the downlink design allocations given.
system_params reference_params() {
    system_params p;
    p.l_fs_db = 101.0;
    p.snr_noise_dl_db = 28.0;
    p.snr_im3_alloc_db = 23.0;
    return p;
}

override_map reference_pins() {
    return {{"snr_noise_db", 28.0},
            {"snr_im3_db", 23.0},
            {"snr_si_db", 44.0},
            {"p_im3_lna_plus_noise_dbm", -73.0}};
}

}  // namespace

TEST_CASE("noise_floor_dbm") {
    CHECK(noise_floor_dbm(400e6, 8.0) == doctest::Approx(-79.98).epsilon(0.0005));
    CHECK(noise_floor_dbm(1.0, 0.0) == doctest::Approx(-174.0));
    CHECK(noise_floor_dbm(400e6, 0.0) == doctest::Approx(-87.98).epsilon(0.0005));
    CHECK_THROWS_AS(noise_floor_dbm(0.0, 3.0), std::invalid_argument);
}

TEST_CASE("min_received_power_dbm") {
    CHECK(min_received_power_dbm(400e6, 8.0, 27.0) == doctest::Approx(-52.98).epsilon(0.0005));
    CHECK(min_received_power_dbm(400e6, 8.0, 0.0) == doctest::Approx(-79.98).epsilon(0.0005));
    CHECK(min_received_power_dbm(100e6, 5.0, 20.0) == doctest::Approx(-69.0).epsilon(0.0015));
}

TEST_CASE("friis_received_power_dbm") {
    CHECK(friis_received_power_dbm(8.0, 20.0, 101.0, 20.0) == doctest::Approx(-53.0));
    CHECK(friis_received_power_dbm(15.0, 20.0, 101.0, 20.0) == doctest::Approx(-46.0));
    CHECK(friis_received_power_dbm(0.0, 0.0, 0.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("free_space_path_loss_db") {
    CHECK(free_space_path_loss_db(90.0, 28e9) == doctest::Approx(100.5).epsilon(0.002));
    CHECK(free_space_path_loss_db(1.0, 299792458.0 / (4.0 * M_PI)) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    // +6.02 dB per distance doubling
    CHECK(free_space_path_loss_db(180.0, 28e9) -
              free_space_path_loss_db(90.0, 28e9) == doctest::Approx(6.0206).epsilon(1e-6));
    CHECK_THROWS_AS(free_space_path_loss_db(0.0, 28e9), std::invalid_argument);
}

TEST_CASE("im3_input_referred_dbm") {
    CHECK(im3_input_referred_dbm(-30.0, -7.0, 0.0) == doctest::Approx(-76.0));
    CHECK(im3_input_referred_dbm(-30.0, -7.0, 8.0) == doctest::Approx(-68.0));
}

TEST_CASE("snr_si_requirement_db") {
    CHECK(snr_si_requirement_db(28.0, 23.0, 0.01) == doctest::Approx(41.8).epsilon(0.0025));
    // quasi-infinite noise SNR: single-term limit 23 + 20
    CHECK(snr_si_requirement_db(300.0, 23.0, 0.01) == doctest::Approx(43.0).epsilon(0.0025));
    // factor-1 degenerate collapses to the plain combination
    CHECK(snr_si_requirement_db(28.0, 23.0, 1.0) ==
          doctest::Approx(combine_snr({28.0, 23.0})).epsilon(1e-12));
    CHECK_THROWS_AS(snr_si_requirement_db(28.0, 23.0, 0.0), std::invalid_argument);
}

TEST_CASE("sic_total_db") {
    CHECK(sic_total_db(12.0, -46.0, 44.0) == doctest::Approx(102.0));
    CHECK(sic_total_db(12.0, -46.0, 41.8) == doctest::Approx(99.8));
    CHECK(sic_total_db(0.0, 0.0, 0.0) == doctest::Approx(0.0));

    SUBCASE("identity rearrangement") {
        CHECK(sic_total_db(12.3, -45.6, 41.2) + (-45.6 - 41.2) == doctest::Approx(12.3));
    }
}

TEST_CASE("sic1_requirement_db") {
    CHECK(sic1_requirement_db(12.0, -46.0, 23.0, -7.0, 8.0) ==
          doctest::Approx(42.33).epsilon(0.0012));
    CHECK(sic1_requirement_db(0.0, 0.0, 0.0, 0.0, 0.0) == doctest::Approx(0.0));
    CHECK(sic1_requirement_db(12.0, -46.0, 23.0, -4.0, 8.0) ==
          doctest::Approx(40.33).epsilon(0.0012));

    SUBCASE("slope of -2/3 dB per dB of LNA IIP3") {
        const double base = sic1_requirement_db(12.0, -46.0, 23.0, -7.0, 8.0);
        for (double d = 1.0; d <= 5.0; d += 1.0)
            CHECK(sic1_requirement_db(12.0, -46.0, 23.0, -7.0 + d, 8.0) - base ==
                  doctest::Approx(-2.0 / 3.0 * d).epsilon(1e-9));
    }
}

TEST_CASE("sic2_requirement_db") {
    CHECK(sic2_requirement_db(13.0, -15.0, 6.0) == doctest::Approx(24.67).epsilon(0.0005));
    CHECK(sic2_requirement_db(0.0, 0.0, 6.0) == doctest::Approx(6.0));
    // additive term from the symbolic re-derivation of the margin rule
    CHECK(sic2_requirement_db(13.0, -15.0, 10.0 / 3.0) == doctest::Approx(22.0).epsilon(0.0025));
}

TEST_CASE("sic3_requirement_db") {
    // direct evaluation with the combined floor/IM3 level
    const double p_comb = power_sum_dbm({-80.0, -69.0});
    CHECK(sic3_requirement_db(0.0, p_comb, 42.0, 25.0, 10.0) ==
          doctest::Approx(11.7).epsilon(0.02));
    CHECK(sic3_requirement_db(0.0, -73.0, 42.0, 25.0, 10.0) == doctest::Approx(16.0));
    CHECK(sic3_requirement_db(0.0, 0.0, 0.0, 0.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("adc_dynamic_range_check") {
    auto r = adc_dynamic_range_check(8.0, 102.0, 42.0, 25.0, 16.0);
    CHECK(r.dr_db == doctest::Approx(36.0));
    CHECK(r.feasible);
    r = adc_dynamic_range_check(5.0, 102.0, 42.0, 25.0, 16.0);
    CHECK(r.dr_db == doctest::Approx(18.0));
    CHECK_FALSE(r.feasible);  // 18 is not > 19
    r = adc_dynamic_range_check(2.0, 50.0, 30.0, 20.0, 10.0);
    CHECK(r.dr_db == doctest::Approx(0.0));
    CHECK(r.feasible);  // residual is negative
    CHECK_THROWS_AS(adc_dynamic_range_check(0.5, 0, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("sic4_requirement_db") {
    CHECK(sic4_requirement_db(102.0, 42.0, 25.0, 16.0) == doctest::Approx(19.0));
    CHECK(sic4_requirement_db(102.0, 102.0, 0.0, 0.0) == doctest::Approx(0.0));
    CHECK(sic4_requirement_db(102.0, 42.33, 24.67, 16.0) == doctest::Approx(19.0).epsilon(0.0012));
    // floored at zero
    CHECK(sic4_requirement_db(50.0, 42.0, 25.0, 16.0) == doctest::Approx(0.0));
}

TEST_CASE("solve_uplink reference numbers") {
    const auto r = solve_uplink(reference_params());
    CHECK(r.snr_rx_bs_db == doctest::Approx(24.02).epsilon(0.0025));
    CHECK(r.snr_noise_db == doctest::Approx(27.02).epsilon(0.0025));
    CHECK(r.p_rx_bs_min_dbm == doctest::Approx(-53.0).epsilon(0.002));
    CHECK(r.p_tx_ue_min_dbm == doctest::Approx(8.0).epsilon(0.01));
    CHECK(r.p_pa_out_ue_min_dbm == doctest::Approx(12.0).epsilon(0.005));
    CHECK(r.p_pa_out_ue_min_dbm ==
          doctest::Approx(r.p_tx_ue_min_dbm + 4.0).epsilon(1e-12));
}

TEST_CASE("solve_uplink degenerate pass-through") {
    system_params p = reference_params();
    p.margin_noise_db = 0.0;
    p.l_fs_db = std::numeric_limits<double>::quiet_NaN();
    p.distance_m = 299792458.0 / (4.0 * M_PI * p.carrier_hz);  // 0 dB path loss
    p.g_bs_dbi = p.g_ue_dbi = 0.0;
    p.ebd_tx_insertion_loss_db = 0.0;
    const auto r = solve_uplink(p);
    CHECK(r.p_tx_ue_min_dbm == doctest::Approx(r.p_rx_bs_min_dbm).epsilon(1e-9));
    CHECK(r.p_pa_out_ue_min_dbm == doctest::Approx(r.p_tx_ue_min_dbm));
}

TEST_CASE("solve_uplink halved bandwidth") {
    system_params p = reference_params();
    p.bw_ul_hz = 200e6;
    CHECK(solve_uplink(p).p_tx_ue_min_dbm == doctest::Approx(5.03).epsilon(0.01));
}

TEST_CASE("solve_uplink infeasible TX budget") {
    system_params p = reference_params();
    p.snr_tx_ue_db = 20.0;  // below the 21 dB link requirement
    CHECK_THROWS_AS(solve_uplink(p), infeasible_error);
}

TEST_CASE("solve_downlink with reference pins") {
    const auto plan = solve_downlink(reference_params(), reference_pins());
    CHECK(plan.snr_rx_ue_db == doctest::Approx(21.6).epsilon(0.005));
    CHECK(plan.snr_noise_db == doctest::Approx(28.0));
    CHECK(plan.snr_im3_lna_db == doctest::Approx(23.0));
    CHECK(plan.snr_si_db == doctest::Approx(44.0));
    CHECK(plan.p_rx_ue_dbm == doctest::Approx(-46.0));
    CHECK(plan.sic_total_db == doctest::Approx(102.0).epsilon(0.001));
    CHECK(plan.sic1_db == doctest::Approx(42.33).epsilon(0.0015));
    CHECK(plan.sic2_db == doctest::Approx(24.67).epsilon(0.0005));
    CHECK(plan.sic3_db == doctest::Approx(16.0).epsilon(0.005));
    CHECK(plan.sic4_db == doctest::Approx(19.0).epsilon(0.005));
    CHECK(plan.adc_dr_db == doctest::Approx(36.0));
    CHECK(plan.adc_feasible);
    // requirement-boundary identity
    CHECK(plan.sic4_db ==
          doctest::Approx(plan.sic_total_db - plan.sic1_db - plan.sic2_db - plan.sic3_db)
              .epsilon(1e-12));
}

TEST_CASE("solve_downlink formula values") {
    const auto plan = solve_downlink(reference_params());
    CHECK(plan.snr_rx_ue_db == doctest::Approx(21.5844).epsilon(0.0001));
    CHECK(plan.snr_im3_lna_db == doctest::Approx(22.7097).epsilon(0.0001));
    CHECK(plan.snr_si_db == doctest::Approx(41.8067).epsilon(0.0001));
    CHECK(plan.sic_total_db == doctest::Approx(99.848).epsilon(0.0001));
    CHECK(plan.sic1_db == doctest::Approx(42.3746).epsilon(0.0001));
    CHECK(plan.sic2_db == doctest::Approx(24.6667).epsilon(0.0001));
    CHECK(plan.p_im3_lna_plus_noise_dbm == doctest::Approx(-68.666).epsilon(0.0001));
    CHECK(plan.sic3_db == doctest::Approx(11.625).epsilon(0.001));
    CHECK(plan.sic4_db == doctest::Approx(21.18).epsilon(0.001));
    CHECK(plan.adc_feasible);
}

TEST_CASE("solve_downlink without given allocations falls back to derivations") {
    system_params p = reference_params();
    p.snr_noise_dl_db = p.snr_im3_alloc_db = std::numeric_limits<double>::quiet_NaN();
    const auto plan = solve_downlink(p);
    // thermal derivation: -46 - (-79.98)
    CHECK(plan.snr_noise_db == doctest::Approx(33.98).epsilon(0.001));
    CHECK(plan.snr_im3_lna_db == doctest::Approx(required_component_snr(plan.snr_rx_ue_db,
                                                                        plan.snr_noise_db))
                                     .epsilon(1e-12));
    // with allocation == computed minimum the neglect rule collapses to
    // snr_rx_ue + 10log10(1/factor)
    CHECK(plan.snr_si_db == doctest::Approx(plan.snr_rx_ue_db + 20.0).epsilon(1e-9));
}

TEST_CASE("solve_downlink SI-free degenerate") {
    system_params p = reference_params();
    p.p_tx_ue_dbm = kNegInfDb;
    const auto plan = solve_downlink(p);
    CHECK(plan.sic_total_db == 0.0);
    CHECK(plan.sic1_db == 0.0);
    CHECK(plan.sic2_db == 0.0);
    CHECK(plan.sic3_db == 0.0);
    CHECK(plan.sic4_db == 0.0);
    CHECK(plan.adc_feasible);
}

TEST_CASE("solve_downlink reports the infeasible step") {
    system_params p = reference_params();
    p.snr_tx_bs_db = 20.0;  // below the total link requirement
    try {
        solve_downlink(p);
        FAIL("expected infeasibility");
    } catch (const infeasible_error& e) {
        CHECK(std::string(e.step()).find("snr_rx_ue") != std::string::npos);
    }
}

TEST_CASE("solve_downlink rejects unknown override keys") {
    CHECK_THROWS_AS(solve_downlink(reference_params(), {{"bogus_db", 1.0}}),
                    std::invalid_argument);
}

TEST_CASE("budget notes flag reference deviations") {
    const auto params = reference_params();
    const auto free_plan = solve_downlink(params);
    override_map refs = reference_pins();
    refs["sic_total_db"] = 102.0;
    refs["sic3_db"] = 16.0;
    refs["sic4_db"] = 17.0;
    const auto notes = budget_notes(params, free_plan, refs);

    auto has = [&](const std::string& id, const std::string& qty) {
        for (const auto& n : notes)
            if (n.id == id && n.quantity == qty) return true;
        return false;
    };
    CHECK(has("OQ1", "snr_noise_db"));  // 28 given vs ~34 derived
    CHECK(has("OQ2", "snr_si_db"));     // 41.8 computed vs 44 pinned
    CHECK(has("OQ2", "sic_total_db"));  // 99.85 vs 102
    CHECK(has("OQ4", "sic3_db"));       // 11.6 vs 16
    CHECK(has("OQ5", "sic4_db"));       // 21.2 vs 17
    CHECK(has("R1", "snr_im3_db"));     // 22.71 vs 23
}

TEST_CASE("system_params validation") {
    system_params p = reference_params();
    p.bw_dl_hz = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = reference_params();
    p.si_neglect_factor = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = reference_params();
    p.enob_bits = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = reference_params();
    p.l_fs_db = -3.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("node_power_track reference allocation") {
    const system_params p = reference_params();
    const stage_allocation alloc{40.0, 28.0, 16.0, 10.0};
    const auto table = node_power_track(p, alloc);
    const double p_pa = solve_uplink(p).p_pa_out_ue_min_dbm;

    CHECK(table.entries.size() == node_names().size());
    CHECK(table.at("antenna").desired_dbm == doctest::Approx(-46.0));
    CHECK(table.at("antenna").si_linear_dbm == doctest::Approx(p_pa));
    // the EBD isolation is the first stage: SI at the receiver input
    CHECK(table.at("post_sic1").si_linear_dbm == doctest::Approx(p_pa - 40.0).epsilon(1e-12));
    CHECK(table.at("post_sic1").noise_dbm == doctest::Approx(-79.98).epsilon(0.0005));
    CHECK(is_neg_inf(table.at("post_sic1").rx_im3_dbm));
    CHECK(table.at("post_lna").desired_dbm == doctest::Approx(-26.0));
    // receiver IM3 appears at the LNA and is untouched by the RF canceller
    CHECK(std::isfinite(table.at("post_lna").rx_im3_dbm));
    CHECK(table.at("post_sic2").rx_im3_dbm ==
          doctest::Approx(table.at("post_lna").rx_im3_dbm));
    // digital SIC leaves PA IM3 alone
    CHECK(table.at("post_sic4").pa_im3_dbm == doctest::Approx(table.at("post_adc").pa_im3_dbm));
    CHECK(table.at("post_sic4").si_linear_dbm ==
          doctest::Approx(table.at("post_adc").si_linear_dbm - 10.0).epsilon(1e-12));
}

TEST_CASE("node_power_track budget closure identity") {
    const system_params p = reference_params();
    const stage_allocation alloc{42.33, 24.67, 16.0, 19.0};
    const auto table = node_power_track(p, alloc);
    const double p_pa = solve_uplink(p).p_pa_out_ue_min_dbm;
    const double gains = p.g_lna_db + p.g_mixer_db + p.g_bbamp_db;
    const double expected = p_pa - alloc.total_db() + gains;
    CHECK(std::fabs(table.at("post_sic4").si_linear_dbm - expected) < 1e-9);
}

TEST_CASE("node_power_track gain-only propagation") {
    system_params p = reference_params();
    p.p_oim3_pa_dbm = kNegInfDb;
    const stage_allocation alloc{0.0, 0.0, 0.0, 0.0};
    const auto table = node_power_track(p, alloc);
    const double p_pa = solve_uplink(p).p_pa_out_ue_min_dbm;
    const double offset = p_pa - (-46.0);
    for (const auto& e : table.entries)
        CHECK(e.si_linear_dbm - e.desired_dbm == doctest::Approx(offset).epsilon(1e-12));
}

TEST_CASE("node_power_track rejects incomplete allocation") {
    stage_allocation alloc;
    alloc.sic2_db = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(node_power_track(reference_params(), alloc), std::invalid_argument);
}

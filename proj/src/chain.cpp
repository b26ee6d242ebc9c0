#include "fdx/chain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace fdx::chain {

namespace {

using blocks::amp_spec;
using blocks::canceller_spec;
using blocks::reference_tap;
using wave::cplx;
using wave::waveform;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t frame, std::uint64_t stream) {
    return splitmix64(splitmix64(base ^ (frame * 0xd1342543de82ef95ULL)) ^
                      (stream * 0xaf251af3b0f025b5ULL));
}

waveform scale_to_power(waveform wf, double target_dbm) {
    const double p = wf.avg_power_dbm();
    if (is_neg_inf(p)) throw std::invalid_argument("scale_to_power: zero-power waveform");
    const double amp = std::pow(10.0, (target_dbm - p) / 20.0);
    waveform out = std::move(wf);
    for (auto& s : out.samples) s *= amp;
    return out;
}

waveform zero_like(const waveform& wf) {
    waveform z;
    z.sample_rate_hz = wf.sample_rate_hz;
    z.power_scale = wf.power_scale;
    z.samples.assign(wf.samples.size(), cplx{0.0, 0.0});
    return z;
}

waveform add(const waveform& a, const waveform& b) {
    if (a.samples.size() != b.samples.size())
        throw std::invalid_argument("chain: waveform length mismatch in sum");
    waveform out = a;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += b.samples[i];
    return out;
}

waveform diff(const waveform& a, const waveform& b) {
    if (a.samples.size() != b.samples.size())
        throw std::invalid_argument("chain: waveform length mismatch in difference");
    waveform out = a;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] -= b.samples[i];
    return out;
}

bool has_power(const waveform& wf) {
    for (const auto& s : wf.samples)
        if (s != cplx{0.0, 0.0}) return true;
    return false;
}

/// Plane indices through the receiver, plus the PA-output plane used for
/// the shared-antenna-port view of the SI.
enum plane : std::size_t {
    kPaOut = 0,
    kRxInput,
    kPostLna,
    kPostSic2,
    kPostMixer,
    kPostBbamp,
    kPostSic3,
    kPostAdc,
    kPostSic4,
    kNumPlanes
};

struct run_toggles {
    bool desired = true;
    bool si = true;
    bool noise = true;
    bool pa_nl = true;
    bool rx_nl = true;
    bool quant = true;
};

struct frame_sim {
    std::array<waveform, kNumPlanes> planes;
    waveform tx_bs;             // BS PA output at wire level
    wave::symbol_frame bs_ref;  // BS reference constellation
};

/// Drive the PA so its measured average output power hits the target; the
/// compression droop makes this a short fixed-point iteration in dB.
waveform drive_pa_to(const waveform& x, const amp_spec& pa, double target_out_dbm) {
    double in_dbm = target_out_dbm - pa.gain_db;
    waveform y;
    for (int it = 0; it < 4; ++it) {
        y = blocks::amplify(scale_to_power(x, in_dbm), pa);
        in_dbm += target_out_dbm - y.avg_power_dbm();
    }
    return y;
}

frame_sim simulate_frame(const chain_config& cfg, std::uint64_t frame, const run_toggles& t) {
    wave::ofdm_config gen_cfg = cfg.ofdm;
    gen_cfg.avg_power_dbm = 0.0;

    const auto& prm = cfg.params;
    const double l_fs = prm.effective_l_fs_db();
    const double path_loss = l_fs - prm.g_bs_dbi - prm.g_ue_dbi;
    const double p_pa_out_target = !std::isnan(prm.p_tx_ue_dbm)
                                       ? prm.p_tx_ue_dbm + prm.ebd_tx_insertion_loss_db
                                       : budget::solve_uplink(prm).p_pa_out_ue_min_dbm;

    frame_sim out;

    // BS transmitter
    auto [bs_ref, x_bs] = wave::generate_frame(gen_cfg, stream_seed(cfg.base_seed, frame, 1));
    out.bs_ref = std::move(bs_ref);
    waveform y_bs;
    if (t.pa_nl) {
        const amp_spec bs_pa = amp_spec::saturating(prm.pa_gain_db, prm.op1db_pa_ue_dbm,
                                                    prm.pa_smoothness_p);
        const double drive = prm.op1db_pa_ue_dbm - prm.pa_gain_db - cfg.bs_pa_backoff_db;
        y_bs = blocks::amplify(scale_to_power(x_bs, drive), bs_pa);
    } else {
        y_bs = x_bs;
    }
    out.tx_bs = scale_to_power(std::move(y_bs), prm.p_tx_bs_dbm);
    const waveform desired_at_ant =
        t.desired ? blocks::attenuate(out.tx_bs, path_loss) : zero_like(out.tx_bs);

    // UE transmitter and the EBD leak
    auto [ue_ref, x_ue] = wave::generate_frame(gen_cfg, stream_seed(cfg.base_seed, frame, 2));
    (void)ue_ref;
    waveform y_ue;
    if (t.si && !is_neg_inf(p_pa_out_target)) {
        if (t.pa_nl) {
            const amp_spec ue_pa = amp_spec::saturating(prm.pa_gain_db, prm.op1db_pa_ue_dbm,
                                                        prm.pa_smoothness_p);
            y_ue = drive_pa_to(x_ue, ue_pa, p_pa_out_target);
        } else {
            y_ue = scale_to_power(x_ue, p_pa_out_target);
        }
    } else {
        y_ue = zero_like(x_ue);  // silent transmitter: no SI couples anywhere
    }
    out.planes[kPaOut] = y_ue;

    waveform r = add(desired_at_ant, blocks::attenuate(y_ue, cfg.alloc.sic1_db));
    if (t.noise)
        r = blocks::add_awgn(r, prm.nf_ue_db, prm.bw_dl_hz, stream_seed(cfg.base_seed, frame, 3));
    out.planes[kRxInput] = r;

    auto rf_cancel = [&](const waveform& sig, double depth_db) {
        if (!has_power(y_ue)) return sig;  // no SI coupled, canceller disengaged
        return blocks::cancel(sig, y_ue, canceller_spec{depth_db, reference_tap::pa_output});
    };

    r = t.rx_nl ? blocks::polynomial_amp(r, amp_spec::polynomial(prm.g_lna_db, prm.iip3_lna_dbm))
                : blocks::linear_amp(r, prm.g_lna_db);
    out.planes[kPostLna] = r;

    r = rf_cancel(r, cfg.alloc.sic2_db);
    out.planes[kPostSic2] = r;

    r = t.rx_nl
            ? blocks::polynomial_amp(r, amp_spec::polynomial(prm.g_mixer_db, prm.iip3_mixer_dbm))
            : blocks::linear_amp(r, prm.g_mixer_db);
    out.planes[kPostMixer] = r;

    r = t.rx_nl
            ? blocks::polynomial_amp(r, amp_spec::polynomial(prm.g_bbamp_db, prm.iip3_bbamp_dbm))
            : blocks::linear_amp(r, prm.g_bbamp_db);
    out.planes[kPostBbamp] = r;

    r = rf_cancel(r, cfg.alloc.sic3_db);
    out.planes[kPostSic3] = r;

    if (t.quant && has_power(r)) {
        blocks::adc_spec adc;
        adc.enob_bits = prm.enob_bits;
        adc.full_scale_dbm = r.avg_power_dbm() + cfg.adc_headroom_db;
        r = blocks::quantize(r, adc);
    }
    out.planes[kPostAdc] = r;

    if (t.si && has_power(y_ue))
        r = blocks::cancel(r, x_ue,
                           canceller_spec{cfg.alloc.sic4_db, reference_tap::ideal_tx_digital});
    out.planes[kPostSic4] = r;

    return out;
}

double band_power_dbm(const waveform& wf, double bw_hz) {
    return wave::measure_channel_power(wf, {-bw_hz / 2.0, bw_hz / 2.0});
}

double lin_mw(double dbm) { return is_neg_inf(dbm) ? 0.0 : std::pow(10.0, dbm / 10.0); }

cplx ls_gain_of(const std::vector<cplx>& rx, const std::vector<cplx>& ref) {
    cplx num{0.0, 0.0};
    double den = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += std::conj(ref[i]) * rx[i];
        den += std::norm(ref[i]);
    }
    return num / den;
}

}  // namespace

void chain_config::validate() const {
    params.validate();
    ofdm.validate();
    if (n_frames < 1) throw std::invalid_argument("chain_config: n_frames must be >= 1");
    if (std::isnan(alloc.sic1_db) || std::isnan(alloc.sic2_db) || std::isnan(alloc.sic3_db) ||
        std::isnan(alloc.sic4_db))
        throw std::invalid_argument("chain_config: stage allocation incomplete");
    if (alloc.sic1_db < 0 || alloc.sic2_db < 0 || alloc.sic3_db < 0 || alloc.sic4_db < 0)
        throw std::invalid_argument("chain_config: stage depths must be >= 0");
}

correction_curve run_im3_correction_experiment(const wave::ofdm_config& cfg,
                                               const blocks::amp_spec& amp,
                                               const std::vector<double>& sweep_p_in_dbm,
                                               std::uint64_t seed, probe_kind kind) {
    if (amp.model != blocks::amp_model::polynomial)
        throw std::invalid_argument("run_im3_correction_experiment: polynomial amp required");
    if (sweep_p_in_dbm.empty())
        throw std::invalid_argument("run_im3_correction_experiment: empty sweep");
    const double p_max = *std::max_element(sweep_p_in_dbm.begin(), sweep_p_in_dbm.end());
    if (p_max > amp.iip3_dbm - 10.0)
        throw std::invalid_argument(
            "run_im3_correction_experiment: sweep enters hard saturation (p_in above IIP3 - 10 dB)");

    correction_curve curve;

    if (kind == probe_kind::ofdm) {
        wave::ofdm_config gen_cfg = cfg;
        gen_cfg.avg_power_dbm = 0.0;
        const waveform base = wave::generate_frame(gen_cfg, seed).second;
        for (double p_in : sweep_p_in_dbm) {
            const waveform x = scale_to_power(base, p_in);
            const waveform d = diff(blocks::polynomial_amp(x, amp),
                                    blocks::linear_amp(x, amp.gain_db));
            correction_point pt;
            pt.p_in_dbm = p_in;
            pt.im3_sim_dbm = d.avg_power_dbm() - amp.gain_db;
            pt.im3_pred_dbm = 3.0 * p_in - 2.0 * amp.iip3_dbm;
            curve.points.push_back(pt);
        }
    } else {
        // Two equal tones, bin aligned; one IM3 product is measured and the
        // prediction uses the per-tone power, so the modulation correction
        // vanishes by construction.
        constexpr std::size_t n = 32768;
        const std::size_t k1 = n / 8, k2 = n / 8 + n / 64;
        const std::size_t kim3 = 2 * k1 - k2;
        for (double p_in : sweep_p_in_dbm) {
            waveform x;
            x.sample_rate_hz = cfg.sample_rate_hz();
            x.samples.resize(n);
            const double a = db_to_amplitude(p_in);
            for (std::size_t i = 0; i < n; ++i) {
                const double ph = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
                x.samples[i] = a * (std::polar(1.0, ph * static_cast<double>(k1)) +
                                    std::polar(1.0, ph * static_cast<double>(k2)));
            }
            const waveform d = diff(blocks::polynomial_amp(x, amp),
                                    blocks::linear_amp(x, amp.gain_db));
            const double df = x.sample_rate_hz / static_cast<double>(n);
            const double f_im3 = static_cast<double>(kim3) * df;
            correction_point pt;
            pt.p_in_dbm = p_in;
            pt.im3_sim_dbm =
                wave::measure_channel_power(d, {f_im3 - df / 2.0, f_im3 + df / 2.0}) -
                amp.gain_db;
            pt.im3_pred_dbm = 3.0 * p_in - 2.0 * amp.iip3_dbm;
            curve.points.push_back(pt);
        }
    }

    double acc = 0.0;
    for (const auto& pt : curve.points) acc += pt.im3_sim_dbm - pt.im3_pred_dbm;
    curve.offset_db = acc / static_cast<double>(curve.points.size());

    if (curve.points.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& pt : curve.points) {
            sx += pt.p_in_dbm;
            sy += pt.im3_sim_dbm;
            sxx += pt.p_in_dbm * pt.p_in_dbm;
            sxy += pt.p_in_dbm * pt.im3_sim_dbm;
        }
        const double nn = static_cast<double>(curve.points.size());
        curve.slope_db_per_db = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    } else {
        curve.slope_db_per_db = std::numeric_limits<double>::quiet_NaN();
    }
    return curve;
}

double measure_pa_oim3(const wave::ofdm_config& cfg, const blocks::amp_spec& pa,
                       double target_out_dbm, std::uint64_t seed) {
    wave::ofdm_config gen_cfg = cfg;
    gen_cfg.avg_power_dbm = 0.0;
    const waveform x = wave::generate_frame(gen_cfg, seed).second;
    double in_dbm = target_out_dbm - pa.gain_db;
    waveform y, xin;
    for (int it = 0; it < 4; ++it) {
        xin = scale_to_power(x, in_dbm);
        y = blocks::amplify(xin, pa);
        in_dbm += target_out_dbm - y.avg_power_dbm();
    }
    return diff(y, blocks::linear_amp(xin, pa.gain_db)).avg_power_dbm();
}

budget::node_power_table measure_node_powers(const chain_config& cfg) {
    cfg.validate();
    const auto& names = budget::node_names();
    const double bw = static_cast<double>(cfg.ofdm.n_active_subcarriers) * cfg.ofdm.scs_hz;

    struct acc {
        double desired = 0, si = 0, pa_im3 = 0, rx_im3 = 0, noise = 0, residual = 0;
    };
    std::vector<acc> sums(names.size());

    for (int f = 0; f < cfg.n_frames; ++f) {
        const auto frame = static_cast<std::uint64_t>(f);
        run_toggles a{true, false, false, cfg.enable_pa_nonlinearity, cfg.enable_rx_nonlinearity,
                      false};
        run_toggles b{false, true, false, false, false, false};
        run_toggles c{false, true, false, cfg.enable_pa_nonlinearity, false, false};
        run_toggles d{false, true, false, cfg.enable_pa_nonlinearity, cfg.enable_rx_nonlinearity,
                      false};
        run_toggles e{false, false, true, cfg.enable_pa_nonlinearity, cfg.enable_rx_nonlinearity,
                      false};
        run_toggles fl{true, cfg.enable_si, cfg.enable_noise, cfg.enable_pa_nonlinearity,
                       cfg.enable_rx_nonlinearity, cfg.enable_quantizer};
        if (!cfg.enable_si) b.si = c.si = d.si = false;
        if (!cfg.enable_noise) e.noise = false;

        const frame_sim ra = simulate_frame(cfg, frame, a);
        const frame_sim rb = simulate_frame(cfg, frame, b);
        const frame_sim rc = simulate_frame(cfg, frame, c);
        const frame_sim rd = simulate_frame(cfg, frame, d);
        const frame_sim re = simulate_frame(cfg, frame, e);
        const frame_sim rf = simulate_frame(cfg, frame, fl);

        for (std::size_t node = 0; node < names.size(); ++node) {
            // Node 0 views the SI side at the PA/antenna port and the desired
            // and noise at the receiver reference plane.
            const std::size_t si_plane = node == 0 ? kPaOut : node;
            const std::size_t rx_plane = node == 0 ? kRxInput : node;
            sums[node].desired += lin_mw(band_power_dbm(ra.planes[rx_plane], bw));
            sums[node].si += lin_mw(band_power_dbm(rb.planes[si_plane], bw));
            sums[node].pa_im3 +=
                lin_mw(band_power_dbm(diff(rc.planes[si_plane], rb.planes[si_plane]), bw));
            sums[node].rx_im3 +=
                lin_mw(band_power_dbm(diff(rd.planes[si_plane], rc.planes[si_plane]), bw));
            sums[node].noise += lin_mw(band_power_dbm(re.planes[rx_plane], bw));
            waveform cross = diff(rf.planes[rx_plane], ra.planes[rx_plane]);
            cross = diff(cross, rd.planes[rx_plane]);
            cross = diff(cross, re.planes[rx_plane]);
            sums[node].residual += lin_mw(band_power_dbm(cross, bw));
        }
    }

    budget::node_power_table table;
    const double n = static_cast<double>(cfg.n_frames);
    auto to_dbm = [&](double mw_sum) {
        const double mw = mw_sum / n;
        return mw > 0.0 ? 10.0 * std::log10(mw) : kNegInfDb;
    };
    for (std::size_t node = 0; node < names.size(); ++node) {
        budget::node_powers row;
        row.node = names[node];
        row.desired_dbm = to_dbm(sums[node].desired);
        row.si_linear_dbm = to_dbm(sums[node].si);
        row.pa_im3_dbm = to_dbm(sums[node].pa_im3);
        row.rx_im3_dbm = to_dbm(sums[node].rx_im3);
        row.noise_dbm = to_dbm(sums[node].noise);
        row.residual_dbm = to_dbm(sums[node].residual);
        table.entries.push_back(row);
    }
    return table;
}

link_sim_report run_full_link(const chain_config& cfg) {
    cfg.validate();
    link_sim_report rep;

    // Per-frame flat equalization (the per-frame TX normalization is a
    // per-frame gain); error and reference powers pool across frames.
    double tx_err = 0.0, tx_pwr = 0.0, link_err = 0.0, link_pwr = 0.0;

    run_toggles full{true, cfg.enable_si, cfg.enable_noise, cfg.enable_pa_nonlinearity,
                     cfg.enable_rx_nonlinearity, cfg.enable_quantizer};

    for (int f = 0; f < cfg.n_frames; ++f) {
        const frame_sim r = simulate_frame(cfg, static_cast<std::uint64_t>(f), full);
        wave::ofdm_config demod_cfg = cfg.ofdm;
        demod_cfg.avg_power_dbm = 0.0;
        wave::symbol_frame tx_syms = wave::demodulate_frame(r.tx_bs, demod_cfg, 1.0);
        wave::symbol_frame rx_syms =
            wave::demodulate_frame(r.planes[kPostSic4], demod_cfg, 1.0);

        auto accumulate = [&](wave::symbol_frame& syms, const wave::symbol_frame& ref,
                              double& err_acc, double& pwr_acc) {
            const cplx g = ls_gain_of(syms.points, ref.points);
            double err = 0.0, pwr = 0.0;
            for (std::size_t i = 0; i < syms.points.size(); ++i) {
                syms.points[i] /= g;
                err += std::norm(syms.points[i] - ref.points[i]);
                pwr += std::norm(ref.points[i]);
            }
            err_acc += err;
            pwr_acc += pwr;
            return 100.0 * std::sqrt(err / pwr);
        };
        rep.evm_tx_frames.push_back(accumulate(tx_syms, r.bs_ref, tx_err, tx_pwr));
        rep.evm_link_frames.push_back(accumulate(rx_syms, r.bs_ref, link_err, link_pwr));

        if (f == 0) {
            rep.tx_ref = r.bs_ref;
            rep.link_ref = r.bs_ref;
            rep.tx_rx = tx_syms;    // already equalized
            rep.link_rx = rx_syms;  // already equalized
        }
    }

    rep.evm_tx_percent = 100.0 * std::sqrt(tx_err / tx_pwr);
    rep.evm_link_percent = 100.0 * std::sqrt(link_err / link_pwr);

    rep.node_powers = measure_node_powers(cfg);

    rep.allocation_total_db = cfg.alloc.total_db();
    rep.required_sic_total_db = std::isnan(cfg.required_sic_total_db)
                                    ? budget::solve_downlink(cfg.params).sic_total_db
                                    : cfg.required_sic_total_db;
    rep.allocation_closes_budget = rep.allocation_total_db >= rep.required_sic_total_db;
    return rep;
}

comparison_report compare_with_budget(const budget::node_power_table& measured,
                                      const budget::node_power_table& analytic, double tol_db) {
    if (measured.entries.size() != analytic.entries.size())
        throw std::invalid_argument("compare_with_budget: node schemas differ");
    comparison_report rep;
    static constexpr const char* comp_names[5] = {"desired", "si_linear", "pa_im3", "rx_im3",
                                                  "noise"};
    for (std::size_t i = 0; i < measured.entries.size(); ++i) {
        const auto& m = measured.entries[i];
        const auto& a = analytic.entries[i];
        if (m.node != a.node)
            throw std::invalid_argument("compare_with_budget: node schemas differ");
        const double mv[5] = {m.desired_dbm, m.si_linear_dbm, m.pa_im3_dbm, m.rx_im3_dbm,
                              m.noise_dbm};
        const double av[5] = {a.desired_dbm, a.si_linear_dbm, a.pa_im3_dbm, a.rx_im3_dbm,
                              a.noise_dbm};
        for (int c = 0; c < 5; ++c) {
            comparison_cell cell;
            cell.node = m.node;
            cell.component = comp_names[c];
            cell.measured_dbm = mv[c];
            cell.analytic_dbm = av[c];
            if (is_neg_inf(mv[c]) && is_neg_inf(av[c]))
                cell.abs_diff_db = 0.0;
            else
                cell.abs_diff_db = std::fabs(mv[c] - av[c]);
            cell.pass = cell.abs_diff_db <= tol_db;
            rep.all_pass = rep.all_pass && cell.pass;
            rep.max_abs_diff_db = std::max(rep.max_abs_diff_db, cell.abs_diff_db);
            rep.cells.push_back(std::move(cell));
        }
    }
    return rep;
}

}  // namespace fdx::chain

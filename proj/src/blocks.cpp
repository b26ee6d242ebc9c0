#include "fdx/blocks.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace fdx::blocks {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Portable standard-normal pairs (Box-Muller on explicit 53-bit uniforms),
/// independent of the standard library's distribution internals.
class gaussian_source {
  public:
    explicit gaussian_source(std::uint64_t seed) : rng_(splitmix64(seed)) {}

    cplx next_circular() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }

  private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    double uniform_open() {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return u;
    }
    std::mt19937_64 rng_;
};

void check_samples_finite(const waveform& wf, const char* who) {
    for (const auto& s : wf.samples)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw std::invalid_argument(std::string(who) + ": non-finite sample");
}

}  // namespace

void amp_spec::validate() const {
    if (!std::isfinite(gain_db)) throw std::invalid_argument("amp_spec: gain_db must be finite");
    if (model == amp_model::polynomial && !std::isfinite(iip3_dbm))
        throw std::invalid_argument("amp_spec: iip3_dbm must be finite");
    if (model == amp_model::saturating && !(smoothness_p > 0.0))
        throw std::invalid_argument("amp_spec: smoothness_p must be > 0");
}

waveform polynomial_amp(const waveform& wf, const amp_spec& spec) {
    if (spec.model != amp_model::polynomial)
        throw std::invalid_argument("polynomial_amp: spec selects a different model");
    spec.validate();
    check_samples_finite(wf, "polynomial_amp");
    const double a1 = db_to_amplitude(spec.gain_db);
    const double p_iip3 = std::pow(10.0, spec.iip3_dbm / 10.0);
    waveform out = wf;
    for (auto& s : out.samples) {
        s = a1 * s * (1.0 - std::norm(s) / p_iip3);
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw std::invalid_argument("polynomial_amp: output sample not finite");
    }
    return out;
}

waveform saturating_amp(const waveform& wf, const amp_spec& spec) {
    if (spec.model != amp_model::saturating)
        throw std::invalid_argument("saturating_amp: spec selects a different model");
    spec.validate();
    check_samples_finite(wf, "saturating_amp");
    const double g = db_to_amplitude(spec.gain_db);
    const double p = spec.smoothness_p;
    // CW output compresses by exactly 1 dB when (1 + r^2p)^(1/2p) = 10^(1/20);
    // place that point at op1db_dbm.
    const double r1_sq = std::pow(std::pow(10.0, p / 10.0) - 1.0, 1.0 / p);
    const double a_sat_sq = std::pow(10.0, (spec.op1db_dbm + 1.0) / 10.0) / r1_sq;
    waveform out = wf;
    for (auto& s : out.samples) {
        const double r2p = std::pow(std::norm(s) * g * g / a_sat_sq, p);
        s = g * s / std::pow(1.0 + r2p, 1.0 / (2.0 * p));
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw std::invalid_argument("saturating_amp: output sample not finite");
    }
    return out;
}

waveform amplify(const waveform& wf, const amp_spec& spec) {
    return spec.model == amp_model::polynomial ? polynomial_amp(wf, spec)
                                               : saturating_amp(wf, spec);
}

waveform linear_amp(const waveform& wf, double gain_db) {
    const double g = db_to_amplitude(gain_db);
    waveform out = wf;
    for (auto& s : out.samples) s *= g;
    return out;
}

waveform add_awgn(const waveform& wf, double nf_db, double bw_hz, std::uint64_t seed) {
    if (!(bw_hz > 0.0)) throw std::invalid_argument("add_awgn: bw_hz must be > 0");
    if (bw_hz > wf.sample_rate_hz)
        throw std::invalid_argument("add_awgn: bw_hz exceeds the sample rate");
    // White density across the full sample rate; any bw-wide band then holds
    // -174 + 10log10(bw) + nf dBm.
    const double density_mw_per_hz = std::pow(10.0, (-174.0 + nf_db) / 10.0);
    const double total_mw = density_mw_per_hz * wf.sample_rate_hz / wf.power_scale;
    const double sigma = std::sqrt(total_mw / 2.0);
    gaussian_source gauss(seed);
    waveform out = wf;
    for (auto& s : out.samples) s += sigma * gauss.next_circular();
    return out;
}

waveform attenuate(const waveform& wf, double loss_db) {
    const double g = db_to_amplitude(-loss_db);
    waveform out = wf;
    for (auto& s : out.samples) s *= g;
    return out;
}

waveform cancel(const waveform& signal, const waveform& reference, const canceller_spec& spec) {
    if (signal.samples.size() != reference.samples.size())
        throw std::invalid_argument("cancel: signal and reference lengths differ");
    if (signal.sample_rate_hz != reference.sample_rate_hz)
        throw std::invalid_argument("cancel: sample rates differ");
    if (spec.depth_db < 0.0) throw std::invalid_argument("cancel: depth_db must be >= 0");

    cplx num{0.0, 0.0};
    double den = 0.0;
    for (std::size_t i = 0; i < signal.samples.size(); ++i) {
        num += std::conj(reference.samples[i]) * signal.samples[i];
        den += std::norm(reference.samples[i]);
    }
    if (den <= 0.0) throw std::invalid_argument("cancel: zero-power reference");
    const double frac =
        std::isinf(spec.depth_db) ? 1.0 : 1.0 - db_to_amplitude(-spec.depth_db);
    const cplx k = frac * (num / den);
    waveform out = signal;
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] -= k * reference.samples[i];
    return out;
}

waveform quantize(const waveform& wf, const adc_spec& spec) {
    if (!(spec.enob_bits >= 1.0)) throw std::invalid_argument("quantize: enob_bits must be >= 1");
    const double a_fs = db_to_amplitude(spec.full_scale_dbm) / std::sqrt(wf.power_scale);
    const double levels = std::pow(2.0, spec.enob_bits);
    const double step = 2.0 * a_fs / levels;
    const double rail = a_fs - step / 2.0;
    auto q = [&](double v) {
        const double mid = step * (std::floor(v / step) + 0.5);
        return std::clamp(mid, -rail, rail);
    };
    waveform out = wf;
    for (auto& s : out.samples) s = {q(s.real()), q(s.imag())};
    return out;
}

double measure_two_tone_iip3(const amp_spec& spec, double probe_per_tone_dbm) {
    spec.validate();
    // Probe well inside the extrapolation region of the respective model.
    double auto_probe;
    if (spec.model == amp_model::polynomial) {
        auto_probe = spec.iip3_dbm - 30.0;
        if (!std::isnan(probe_per_tone_dbm) && probe_per_tone_dbm > spec.iip3_dbm - 15.0)
            throw std::invalid_argument("measure_two_tone_iip3: probe in the compression region");
    } else {
        const double p1db_in = spec.op1db_dbm - spec.gain_db + 1.0;
        auto_probe = p1db_in - 15.0;
        if (!std::isnan(probe_per_tone_dbm) && probe_per_tone_dbm > p1db_in - 6.0)
            throw std::invalid_argument("measure_two_tone_iip3: probe in the compression region");
    }
    const double probe_dbm = std::isnan(probe_per_tone_dbm) ? auto_probe : probe_per_tone_dbm;

    constexpr std::size_t n = 4096;
    constexpr std::size_t k1 = 401, k2 = 481;  // IM3 at 2*k1-k2 = 321 and 2*k2-k1 = 561
    const double amp = db_to_amplitude(probe_dbm);
    waveform probe;
    probe.sample_rate_hz = static_cast<double>(n);  // 1 Hz bins; placement is all that matters
    probe.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n);
        probe.samples[i] =
            amp * (std::polar(1.0, 2.0 * M_PI * static_cast<double>(k1) * t) +
                   std::polar(1.0, 2.0 * M_PI * static_cast<double>(k2) * t));
    }

    const waveform resp = amplify(probe, spec);
    std::vector<cplx> spec_bins(resp.samples);
    {
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n),
                                          reinterpret_cast<fftw_complex*>(spec_bins.data()),
                                          reinterpret_cast<fftw_complex*>(spec_bins.data()),
                                          FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
    auto bin_power_dbm = [&](std::size_t k) {
        return 10.0 * std::log10(std::norm(spec_bins[k]) / (static_cast<double>(n) * n));
    };
    const double fund_dbm = bin_power_dbm(k1);
    const double im3_dbm = bin_power_dbm(2 * k1 - k2);
    return probe_dbm + (fund_dbm - im3_dbm) / 2.0;
}

}  // namespace fdx::blocks

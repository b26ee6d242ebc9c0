#include "fdx/waveform.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>

namespace fdx::wave {

namespace {

// FFTW's planner is not thread safe; execution on plan-owned arrays is.
std::mutex g_fftw_mutex;

/// In-place complex DFT. sign = FFTW_FORWARD (-1) or FFTW_BACKWARD (+1),
/// unnormalized in both directions.
void dft(std::vector<cplx>& data, int sign) {
    if (data.empty()) return;
    const int n = static_cast<int>(data.size());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(data.data()),
                                reinterpret_cast<fftw_complex*>(data.data()), sign,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fftw_destroy_plan(plan);
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::size_t ofdm_config::cp_len() const {
    return static_cast<std::size_t>(std::llround(cp_fraction * static_cast<double>(ifft_size())));
}

double ofdm_config::subcarrier_scale() const {
    return db_to_amplitude(avg_power_dbm) / std::sqrt(static_cast<double>(n_active_subcarriers));
}

void ofdm_config::validate() const {
    if (fft_size == 0 || (fft_size & (fft_size - 1)) != 0)
        throw std::invalid_argument("ofdm_config: fft_size must be a power of two");
    if (oversampling_factor == 0)
        throw std::invalid_argument("ofdm_config: oversampling_factor must be >= 1");
    if (n_active_subcarriers == 0 || n_active_subcarriers % 2 != 0)
        throw std::invalid_argument("ofdm_config: n_active_subcarriers must be even and > 0");
    if (n_active_subcarriers > fft_size - 2)
        throw std::invalid_argument("ofdm_config: n_active_subcarriers exceeds the usable grid");
    if (!(scs_hz > 0.0)) throw std::invalid_argument("ofdm_config: scs_hz must be > 0");
    if (cp_fraction < 0.0 || cp_fraction >= 1.0)
        throw std::invalid_argument("ofdm_config: cp_fraction must lie in [0, 1)");
    // occupied_bw_hz is the nominal channel; the realized bandwidth is
    // n_active * scs, allowed to sit within two subcarriers of nominal
    // (an even active count cannot always hit the nominal value exactly)
    const double bw = static_cast<double>(n_active_subcarriers) * scs_hz;
    if (std::fabs(bw - occupied_bw_hz) > 2.0 * scs_hz)
        throw std::invalid_argument(
            "ofdm_config: n_active_subcarriers*scs_hz must match occupied_bw_hz within two "
            "subcarriers");
}

double waveform::mean_square() const {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : samples) acc += std::norm(s);
    return acc / static_cast<double>(samples.size());
}

double waveform::avg_power_dbm() const {
    const double p = power_scale * mean_square();
    return p > 0.0 ? 10.0 * std::log10(p) : kNegInfDb;
}

cplx qam64_point(unsigned index) {
    // Gray-coded 8-PAM per rail, unit average power (levels /sqrt(42)).
    static constexpr double levels[8] = {-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0};
    const double norm = 1.0 / std::sqrt(42.0);
    return {levels[index & 7u] * norm, levels[(index >> 3) & 7u] * norm};
}

std::pair<symbol_frame, waveform> generate_frame(const ofdm_config& cfg, std::uint64_t seed) {
    cfg.validate();

    symbol_frame frame;
    frame.n_symbols = cfg.n_symbols;
    frame.n_subcarriers = cfg.n_active_subcarriers;
    frame.points.resize(frame.n_symbols * frame.n_subcarriers);

    waveform wf;
    wf.sample_rate_hz = cfg.sample_rate_hz();
    wf.samples.resize(cfg.frame_len());

    const std::size_t nfft = cfg.ifft_size();
    const std::size_t cp = cfg.cp_len();
    const std::size_t half = cfg.n_active_subcarriers / 2;
    const double scale = cfg.subcarrier_scale();

    std::mt19937_64 rng(splitmix64(seed));
    std::vector<cplx> spectrum(nfft);

    for (std::size_t sym = 0; sym < cfg.n_symbols; ++sym) {
        std::fill(spectrum.begin(), spectrum.end(), cplx{0.0, 0.0});
        for (std::size_t i = 0; i < cfg.n_active_subcarriers; ++i) {
            const cplx pt = qam64_point(static_cast<unsigned>(rng() & 63u));
            frame.at(sym, i) = pt;
            // subcarrier i: k = i - half for i < half (negative bins), else
            // k = i - half + 1 (positive bins), skipping DC
            const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(i) -
                                     static_cast<std::ptrdiff_t>(half) + (i >= half ? 1 : 0);
            const std::size_t bin = k >= 0 ? static_cast<std::size_t>(k)
                                           : nfft - static_cast<std::size_t>(-k);
            spectrum[bin] = pt * scale;
        }
        dft(spectrum, FFTW_BACKWARD);
        cplx* out = wf.samples.data() + sym * cfg.symbol_len();
        std::copy(spectrum.end() - static_cast<std::ptrdiff_t>(cp), spectrum.end(), out);
        std::copy(spectrum.begin(), spectrum.end(), out + cp);
    }
    return {std::move(frame), std::move(wf)};
}

symbol_frame demodulate_frame(const waveform& wf, const ofdm_config& cfg, cplx reference_gain) {
    cfg.validate();
    if (wf.samples.size() != cfg.frame_len())
        throw std::invalid_argument("demodulate_frame: waveform length does not match the frame");
    if (reference_gain == cplx{0.0, 0.0})
        throw std::invalid_argument("demodulate_frame: zero reference gain");

    symbol_frame frame;
    frame.n_symbols = cfg.n_symbols;
    frame.n_subcarriers = cfg.n_active_subcarriers;
    frame.points.resize(frame.n_symbols * frame.n_subcarriers);

    const std::size_t nfft = cfg.ifft_size();
    const std::size_t cp = cfg.cp_len();
    const std::size_t half = cfg.n_active_subcarriers / 2;
    const cplx inv_gain =
        1.0 / (reference_gain * cfg.subcarrier_scale() * static_cast<double>(nfft));

    std::vector<cplx> spectrum(nfft);
    for (std::size_t sym = 0; sym < cfg.n_symbols; ++sym) {
        const cplx* in = wf.samples.data() + sym * cfg.symbol_len() + cp;
        std::copy(in, in + nfft, spectrum.begin());
        dft(spectrum, FFTW_FORWARD);
        for (std::size_t i = 0; i < cfg.n_active_subcarriers; ++i) {
            const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(i) -
                                     static_cast<std::ptrdiff_t>(half) + (i >= half ? 1 : 0);
            const std::size_t bin = k >= 0 ? static_cast<std::size_t>(k)
                                           : nfft - static_cast<std::size_t>(-k);
            frame.at(sym, i) = spectrum[bin] * inv_gain;
        }
    }
    return frame;
}

double measure_evm(const symbol_frame& rx, const symbol_frame& ref) {
    if (rx.n_symbols != ref.n_symbols || rx.n_subcarriers != ref.n_subcarriers)
        throw std::invalid_argument("measure_evm: frame dimensions differ");
    double err = 0.0, pwr = 0.0;
    for (std::size_t i = 0; i < rx.points.size(); ++i) {
        err += std::norm(rx.points[i] - ref.points[i]);
        pwr += std::norm(ref.points[i]);
    }
    if (pwr <= 0.0) throw std::invalid_argument("measure_evm: zero-power reference");
    return 100.0 * std::sqrt(err / pwr);
}

cplx ls_gain(const symbol_frame& rx, const symbol_frame& ref) {
    if (rx.points.size() != ref.points.size())
        throw std::invalid_argument("ls_gain: frame dimensions differ");
    cplx num{0.0, 0.0};
    double den = 0.0;
    for (std::size_t i = 0; i < rx.points.size(); ++i) {
        num += std::conj(ref.points[i]) * rx.points[i];
        den += std::norm(ref.points[i]);
    }
    if (den <= 0.0) throw std::invalid_argument("ls_gain: zero-power reference");
    return num / den;
}

double measure_papr(const waveform& wf, double percentile) {
    if (wf.samples.empty()) throw std::invalid_argument("measure_papr: empty waveform");
    if (!(percentile > 0.0 && percentile <= 100.0))
        throw std::invalid_argument("measure_papr: percentile must lie in (0, 100]");
    std::vector<double> pw(wf.samples.size());
    std::transform(wf.samples.begin(), wf.samples.end(), pw.begin(),
                   [](const cplx& s) { return std::norm(s); });
    const double mean = std::accumulate(pw.begin(), pw.end(), 0.0) / pw.size();
    if (mean <= 0.0) throw std::invalid_argument("measure_papr: zero-power waveform");
    std::sort(pw.begin(), pw.end());
    const auto idx = static_cast<std::size_t>(
        std::min<double>(std::ceil(percentile / 100.0 * pw.size()), pw.size()) - 1);
    return 10.0 * std::log10(pw[idx] / mean);
}

double measure_channel_power(const waveform& wf, const freq_band& band) {
    if (wf.samples.empty()) throw std::invalid_argument("measure_channel_power: empty waveform");
    const double nyq = wf.sample_rate_hz / 2.0;
    if (!(band.lo_hz < band.hi_hz) || band.lo_hz < -nyq || band.hi_hz > nyq)
        throw std::invalid_argument("measure_channel_power: band outside the Nyquist range");

    std::vector<cplx> spec(wf.samples);
    dft(spec, FFTW_FORWARD);
    const double n = static_cast<double>(spec.size());
    const double df = wf.sample_rate_hz / n;
    double acc = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        double f = static_cast<double>(k) * df;
        if (f >= nyq) f -= wf.sample_rate_hz;
        if (f >= band.lo_hz && f <= band.hi_hz) acc += std::norm(spec[k]);
    }
    const double p = wf.power_scale * acc / (n * n);
    return p > 0.0 ? 10.0 * std::log10(p) : kNegInfDb;
}

waveform_stats measure_stats(const waveform& wf, const ofdm_config& cfg, double papr_percentile) {
    waveform_stats st;
    st.avg_power_dbm = wf.avg_power_dbm();
    st.papr_db = measure_papr(wf, papr_percentile);
    st.occupied_bw_hz = static_cast<double>(cfg.n_active_subcarriers) * cfg.scs_hz;
    return st;
}

}  // namespace fdx::wave

#ifndef FDX_WAVEFORM_HPP
#define FDX_WAVEFORM_HPP

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "fdx/db.hpp"

namespace fdx::wave {

using cplx = std::complex<double>;

/// OFDM numerology. With the defaults (SCS 120 kHz, 4096-point grid, 3332
/// active subcarriers) the occupied bandwidth is 399.84 MHz.
struct ofdm_config {
    double scs_hz = 120e3;
    double occupied_bw_hz = 400e6;
    std::size_t fft_size = 4096;              // subcarrier grid size (power of two)
    std::size_t n_active_subcarriers = 3332;  // even, split around a DC null
    double cp_fraction = 1.0 / 16.0;          // cyclic prefix as a fraction of the symbol
    std::size_t n_symbols = 14;
    std::size_t oversampling_factor = 2;      // sample_rate / (fft_size * scs)
    double avg_power_dbm = 0.0;               // generation target channel power

    std::size_t ifft_size() const { return fft_size * oversampling_factor; }
    std::size_t cp_len() const;
    std::size_t symbol_len() const { return ifft_size() + cp_len(); }
    std::size_t frame_len() const { return n_symbols * symbol_len(); }
    double sample_rate_hz() const {
        return static_cast<double>(fft_size) * scs_hz * static_cast<double>(oversampling_factor);
    }
    /// Per-subcarrier amplitude applied at generation; demodulation divides
    /// it back out so a unit reference gain recovers the constellation.
    double subcarrier_scale() const;

    void validate() const;
};

/// Grid of constellation points, n_symbols x n_active_subcarriers.
/// Subcarrier index runs from the most negative active bin upward,
/// skipping DC.
struct symbol_frame {
    std::size_t n_symbols = 0;
    std::size_t n_subcarriers = 0;
    std::vector<cplx> points;  // row-major [symbol][subcarrier]

    cplx& at(std::size_t sym, std::size_t sc) { return points[sym * n_subcarriers + sc]; }
    const cplx& at(std::size_t sym, std::size_t sc) const {
        return points[sym * n_subcarriers + sc];
    }
    std::size_t size() const { return points.size(); }
};

/// Complex baseband sample buffer. Sample magnitude squared is power in mW
/// scaled by power_scale, so avg_power_dbm() is exact bookkeeping.
struct waveform {
    std::vector<cplx> samples;
    double sample_rate_hz = 0.0;
    double power_scale = 1.0;

    double mean_square() const;
    double avg_power_dbm() const;
    std::size_t size() const { return samples.size(); }
};

struct waveform_stats {
    double avg_power_dbm = 0.0;
    double papr_db = 0.0;
    double occupied_bw_hz = 0.0;
};

struct freq_band {
    double lo_hz = 0.0;
    double hi_hz = 0.0;
};

/// Uniformly random 64-QAM on the active subcarriers (unit-average-power
/// alphabet), per-symbol inverse FFT, cyclic prefix prepended. Deterministic
/// per seed; average power lands on cfg.avg_power_dbm.
std::pair<symbol_frame, waveform> generate_frame(const ofdm_config& cfg, std::uint64_t seed);

/// CP strip, per-symbol FFT, active-subcarrier extraction, equalization by a
/// single complex gain (flat channel). reference_gain == 1 inverts
/// generate_frame exactly.
symbol_frame demodulate_frame(const waveform& wf, const ofdm_config& cfg, cplx reference_gain);

/// RMS error vector magnitude in percent: 100*sqrt(sum|rx-ref|^2/sum|ref|^2).
double measure_evm(const symbol_frame& rx, const symbol_frame& ref);

/// Least-squares complex gain fitting rx onto ref (data-aided flat equalizer).
cplx ls_gain(const symbol_frame& rx, const symbol_frame& ref);

/// PAPR at a percentile of the instantaneous-power CCDF; percentile 100 is
/// the true peak.
double measure_papr(const waveform& wf, double percentile);

/// Integrated periodogram power over [band.lo_hz, band.hi_hz], dBm. The full
/// Nyquist band reproduces avg_power_dbm exactly (Parseval).
double measure_channel_power(const waveform& wf, const freq_band& band);

waveform_stats measure_stats(const waveform& wf, const ofdm_config& cfg,
                             double papr_percentile = 99.9);

/// Unit-average-power 64-QAM constellation point for a 6-bit index.
cplx qam64_point(unsigned index);

}  // namespace fdx::wave

#endif  // FDX_WAVEFORM_HPP

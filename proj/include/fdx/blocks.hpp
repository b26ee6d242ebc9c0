#ifndef FDX_BLOCKS_HPP
#define FDX_BLOCKS_HPP

#include <cstdint>

#include "fdx/waveform.hpp"

namespace fdx::blocks {

using wave::cplx;
using wave::waveform;

enum class amp_model { polynomial, saturating };

/// Behavioral amplifier: a memoryless cubic (characterized by IIP3) or a
/// saturating envelope model (characterized by OP1dB and a knee sharpness).
struct amp_spec {
    amp_model model = amp_model::polynomial;
    double gain_db = 0.0;
    double iip3_dbm = 0.0;     // polynomial model
    double op1db_dbm = 0.0;    // saturating model
    double smoothness_p = 2.0; // saturating model knee

    static amp_spec polynomial(double gain_db, double iip3_dbm) {
        return {amp_model::polynomial, gain_db, iip3_dbm, 0.0, 2.0};
    }
    static amp_spec saturating(double gain_db, double op1db_dbm, double smoothness_p = 2.0) {
        return {amp_model::saturating, gain_db, 0.0, op1db_dbm, smoothness_p};
    }
    void validate() const;
};

enum class reference_tap { pa_output, ideal_tx_digital };

struct canceller_spec {
    double depth_db = 0.0;  // may be +inf for ideal cancellation
    reference_tap tap = reference_tap::pa_output;
};

struct adc_spec {
    double enob_bits = 8.0;
    double full_scale_dbm = 0.0;  // power of a full-scale complex tone
};

/// y = a1*x + a3*|x|^2*x with a1 from gain_db and a3 = -a1 / p_iip3 under
/// the mean-square power calibration, so a two-tone probe reproduces
/// 3*P - 2*IIP3 exactly.
waveform polynomial_amp(const waveform& wf, const amp_spec& spec);

/// Memoryless envelope saturation y = g*x / (1 + (|g*x|/A_sat)^(2p))^(1/(2p)),
/// with A_sat set so the CW output 1 dB compression point equals op1db_dbm.
waveform saturating_amp(const waveform& wf, const amp_spec& spec);

/// Dispatch on spec.model.
waveform amplify(const waveform& wf, const amp_spec& spec);

/// Ideal linear amplifier (gain only), the reference arm of the
/// distortion-extraction setup.
waveform linear_amp(const waveform& wf, double gain_db);

/// Circular complex white Gaussian noise with density -174 + nf_db dBm/Hz,
/// i.e. in-band power -174 + 10log10(bw_hz) + nf_db dBm over any bw_hz-wide
/// band. Deterministic per seed.
waveform add_awgn(const waveform& wf, double nf_db, double bw_hz, std::uint64_t seed);

waveform attenuate(const waveform& wf, double loss_db);

/// output = signal - k*reference with k scaled from the least-squares
/// projection so the reference-correlated component drops by exactly
/// depth_db; components orthogonal to the reference pass unchanged.
waveform cancel(const waveform& signal, const waveform& reference, const canceller_spec& spec);

/// Uniform mid-rise quantization of I and Q, 2^enob levels across the
/// +-full-scale amplitude; out-of-range samples clip.
waveform quantize(const waveform& wf, const adc_spec& spec);

/// Two-tone intercept-point extraction: synthesizes a bin-aligned two-tone
/// probe, measures fundamental and IM3 output powers, extrapolates.
/// probe_per_tone_dbm NaN picks a level well inside the weakly nonlinear
/// region; an explicit level in the compression region is rejected.
double measure_two_tone_iip3(const amp_spec& spec,
                             double probe_per_tone_dbm = std::numeric_limits<double>::quiet_NaN());

}  // namespace fdx::blocks

#endif  // FDX_BLOCKS_HPP

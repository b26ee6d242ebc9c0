#ifndef FDX_DB_HPP
#define FDX_DB_HPP

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace fdx {

/// Sentinel for an absent signal ("-inf dBm"). Encodable in reports as the
/// literal string "-inf"; arithmetic on it follows IEEE-754 rules.
inline constexpr double kNegInfDb = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInfDb = std::numeric_limits<double>::infinity();

inline bool is_neg_inf(double x) { return std::isinf(x) && x < 0.0; }

inline double db_to_linear(double x_db) {
    if (std::isnan(x_db)) throw std::invalid_argument("db_to_linear: NaN input");
    return std::pow(10.0, x_db / 10.0);
}

inline double linear_to_db(double x) {
    if (std::isnan(x)) throw std::invalid_argument("linear_to_db: NaN input");
    if (x < 0.0) throw std::invalid_argument("linear_to_db: negative power");
    return 10.0 * std::log10(x);
}

/// Amplitude (voltage-like) scale factor for a power ratio in dB.
inline double db_to_amplitude(double x_db) { return std::pow(10.0, x_db / 20.0); }

/// Sum of powers given in dBm, returned in dBm. -inf entries are absent
/// signals and drop out; an all--inf list sums to -inf.
inline double power_sum_dbm(std::span<const double> terms_dbm) {
    if (terms_dbm.empty()) throw std::invalid_argument("power_sum_dbm: empty list");
    double acc = 0.0;
    for (double t : terms_dbm) {
        if (std::isnan(t)) throw std::invalid_argument("power_sum_dbm: NaN term");
        if (is_neg_inf(t)) continue;
        acc += std::pow(10.0, t / 10.0);
    }
    return acc > 0.0 ? 10.0 * std::log10(acc) : kNegInfDb;
}

inline double power_sum_dbm(std::initializer_list<double> terms_dbm) {
    return power_sum_dbm(std::span<const double>(terms_dbm.begin(), terms_dbm.size()));
}

/// Reciprocal-sum combination of SNRs in the linear domain:
/// 1/snr_total = sum_i 1/snr_i. Result is <= min(inputs).
inline double combine_snr(std::span<const double> snrs_db) {
    if (snrs_db.empty()) throw std::invalid_argument("combine_snr: empty list");
    double inv = 0.0;
    for (double s : snrs_db) {
        if (std::isnan(s)) throw std::invalid_argument("combine_snr: NaN term");
        if (s == kPosInfDb) continue;  // ideal component contributes nothing
        inv += std::pow(10.0, -s / 10.0);
    }
    return inv > 0.0 ? -10.0 * std::log10(inv) : kPosInfDb;
}

inline double combine_snr(std::initializer_list<double> snrs_db) {
    return combine_snr(std::span<const double>(snrs_db.begin(), snrs_db.size()));
}

/// Raised when a budget requirement cannot be met; carries the step that
/// failed so the solver can report where the allocation broke down.
class infeasible_error : public std::runtime_error {
  public:
    infeasible_error(std::string step, const std::string& what)
        : std::runtime_error(what), step_(std::move(step)) {}
    const std::string& step() const noexcept { return step_; }

  private:
    std::string step_;
};

/// Inverse of combine_snr for two components: the SNR x such that
/// combine_snr({snr_known, x}) == snr_total. Infeasible when the known
/// component alone already violates the total.
inline double required_component_snr(double snr_total_db, double snr_known_db) {
    if (!std::isfinite(snr_total_db))
        throw std::invalid_argument("required_component_snr: non-finite total");
    const double inv_total = std::pow(10.0, -snr_total_db / 10.0);
    const double inv_known = snr_known_db == kPosInfDb ? 0.0 : std::pow(10.0, -snr_known_db / 10.0);
    const double inv_x = inv_total - inv_known;
    if (inv_x <= 0.0)
        throw infeasible_error("required_component_snr",
                               "known component (" + std::to_string(snr_known_db) +
                                   " dB) alone already violates the total SNR (" +
                                   std::to_string(snr_total_db) + " dB)");
    return -10.0 * std::log10(inv_x);
}

}  // namespace fdx

#endif  // FDX_DB_HPP

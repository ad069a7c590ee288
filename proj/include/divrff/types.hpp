#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>

namespace divrff {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kSampleRate = 20e6;
inline constexpr double kSamplePeriod = 1.0 / kSampleRate;
inline constexpr int kFftSize = 64;
inline constexpr double kPi = 3.14159265358979323846;

enum class PreambleFormat { NonHT, HTMF };

/// Baseband sample sequence plus the metadata the receive chain needs.
///
/// `active_begin`/`active_length` mark the transmitted preamble inside a
/// padded capture; SNR is calibrated over that extent. A negative length
/// means the whole buffer is active.
struct ComplexSignal {
    CVector samples;
    double sample_rate = kSampleRate;
    double center_freq_hz = 0.0;
    std::optional<PreambleFormat> format;
    Index active_begin = 0;
    Index active_length = -1;

    Index size() const { return samples.size(); }
    Index active_end() const {
        return active_length < 0 ? samples.size() : active_begin + active_length;
    }
};

}  // namespace divrff

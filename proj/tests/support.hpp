#pragma once

// Shared helpers for the unit tests. Oracles here are written independently
// of the library code they check.

#include "divrff/channel.hpp"
#include "divrff/dsp.hpp"
#include "divrff/harness.hpp"
#include "divrff/impairments.hpp"
#include "divrff/random.hpp"
#include "divrff/types.hpp"
#include "divrff/waveform.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

using divrff::Complex;
using divrff::CVector;
using divrff::Index;
using divrff::RVector;

/// O(N^2) DFT with the same sign convention as divrff::fft.
inline CVector direct_dft(const CVector& x) {
    const Index n = x.size();
    CVector out = CVector::Zero(n);
    for (Index k = 0; k < n; ++k)
        for (Index m = 0; m < n; ++m)
            out[k] += x[m] * std::polar(1.0, -2.0 * divrff::kPi * static_cast<double>(k * m) / static_cast<double>(n));
    return out;
}

/// Parses a whitespace-separated list of integers.
inline std::vector<int> parse_ints(const std::string& text) {
    std::istringstream in(text);
    std::vector<int> out;
    int v;
    while (in >> v) out.push_back(v);
    return out;
}

/// Training sequences as printed in the 802.11 standard, lowest tone first.
inline const std::string kLltfTable =
    "1 1 -1 -1 1 1 -1 1 -1 1 1 1 1 1 1 -1 -1 1 1 -1 1 -1 1 1 1 1 "
    "0 "
    "1 -1 -1 1 1 -1 1 -1 1 -1 -1 -1 -1 -1 1 1 -1 -1 1 -1 1 -1 1 1 1 1";
inline const std::string kHtltfTable =
    "1 1 1 1 -1 -1 1 1 -1 1 -1 1 1 1 1 1 1 -1 -1 1 1 -1 1 -1 1 1 1 1 "
    "0 "
    "1 -1 -1 1 1 -1 1 -1 1 -1 -1 -1 -1 -1 1 1 -1 -1 1 -1 1 -1 1 1 1 1 -1 -1";
/// L-STF over tones -26..26 in units of (1 + j); entries are 0 or +-1.
inline const std::string kLstfTable =
    "0 0 1 0 0 0 -1 0 0 0 1 0 0 0 -1 0 0 0 -1 0 0 0 1 0 0 0 "
    "0 "
    "0 0 0 -1 0 0 0 -1 0 0 0 1 0 0 0 1 0 0 0 1 0 0 0 1 0 0";

/// 64-bin oracle spectrum built from a table starting at tone -half.
inline CVector table_spectrum(const std::string& table, int half, Complex unit = 1.0) {
    const auto vals = parse_ints(table);
    CVector out = CVector::Zero(64);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const int tone = static_cast<int>(i) - half;
        out[(tone + 64) % 64] = static_cast<double>(vals[i]) * unit;
    }
    return out;
}

/// Transmitter with every nonlinear and CFO term removed.
inline divrff::DeviceProfile linear_transmitter(std::uint64_t seed) {
    auto p = divrff::sample_profile(seed, divrff::DeviceRole::Transmitter, true).linear_only();
    p.device_id = "tx" + std::to_string(seed);
    return p;
}

inline divrff::DeviceProfile linear_receiver(std::uint64_t seed) {
    auto p = divrff::sample_profile(seed, divrff::DeviceRole::Receiver, false).linear_only();
    p.device_id = "rx" + std::to_string(seed);
    return p;
}

/// Full chain: impairments, channel, preprocessing and field spectra.
inline divrff::CaptureSpectra run_chain(const divrff::DeviceProfile& tx, const divrff::DeviceProfile& rx,
                                        const divrff::ChannelRealization& ch, Index lead = 200, Index backoff = 3) {
    const auto y = divrff::simulate_capture(tx, rx, ch, lead, 160);
    return divrff::analyze_capture(y, {}, backoff);
}

inline double max_abs_diff(const RVector& a, const RVector& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("divrff_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil

#pragma once

#include "divrff/features.hpp"
#include "divrff/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace divrff {

enum class LowpassMethod {
    /// Least-squares projection onto the span of the level-4 approximation
    /// synthesis basis. Idempotent and energy non-increasing.
    Projection,
    /// Zero the detail bands and run waverec. Matches common toolboxes but is
    /// neither idempotent nor energy-bounded at the edges of short inputs.
    ZeroDetails,
};

/// db4, four levels, half-point symmetric extension. Only the low-pass
/// method is selectable.
struct WaveletConfig {
    static constexpr int levels = 4;
    LowpassMethod method = LowpassMethod::Projection;
};

struct RefScore {
    std::string device_id;
    double eta_lf = 0.0;
    double energy_before = 0.0;
    double energy_after = 0.0;
};

/// Shortest input accepted by the 4-level transform.
inline constexpr Index kMinWaveletInput = 8;

/// Low-frequency component of `amplitude` at the coarsest level, same length.
/// Throws Error(Length) below kMinWaveletInput samples.
RVector lowpass_reconstruct(const RVector& amplitude, const WaveletConfig& cfg = {});

/// Low-frequency energy ratio of the unit-energy-normalized amplitude.
/// Throws Error(DegenerateInput) for a zero or non-finite input.
RefScore eta_lf(const RVector& amplitude, const WaveletConfig& cfg = {}, std::string device_id = {});

/// |Y_L / X_L| on the 52 L-LTF tones, the CSI amplitude scored by eta_lf.
RVector csi_amplitude(const FieldSpectrum& lltf);

using Candidate = std::pair<std::string, RVector>;

/// Scores sorted by eta_lf descending; equal scores keep input order.
/// Throws Error(EmptyCandidates).
std::vector<RefScore> rank_references(const std::vector<Candidate>& candidates, const WaveletConfig& cfg = {});

/// Highest eta_lf; the first candidate wins a tie.
std::string select_reference(const std::vector<Candidate>& candidates, const WaveletConfig& cfg = {});

}  // namespace divrff

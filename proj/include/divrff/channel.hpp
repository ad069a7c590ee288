#pragma once

#include "divrff/types.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace divrff {

enum class ChannelKind { Flat, Selective };

/// One static channel draw plus its noise level. `snr_db` = +inf disables
/// noise. For Selective, `delays` are integer sample delays strictly
/// increasing from 0 and the taps carry unit total energy.
struct ChannelRealization {
    ChannelKind kind = ChannelKind::Flat;
    Complex alpha{1.0, 0.0};
    CVector taps = CVector::Ones(1);
    std::vector<int> delays{0};
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;

    void validate() const;

    /// Impulse response on a dense delay grid (index = delay in samples).
    CVector impulse_response() const;
};

/// Tap-delay profile for selective draws: `tap_count` consecutive delays
/// 0..tap_count-1 with expected power proportional to exp(-l / decay).
struct SelectiveParams {
    int tap_count = 4;
    double decay = 1.5;
};

/// Named scenario presets: flat, selective (SelectiveParams defaults), LOS,
/// NLOS, mobile (NLOS redrawn per frame), corridor.
struct ScenarioPreset {
    std::string label;
    ChannelKind kind;
    SelectiveParams params;
    bool per_frame;
};
ScenarioPreset scenario_preset(const std::string& label);

/// Flat: y = alpha x. Selective: y = h (*) x truncated to |x|. Then AWGN at
/// `snr_db` relative to the clean received power over the active extent;
/// the noise stream is seeded by `ch.seed`.
ComplexSignal apply_channel(const ChannelRealization& ch, const ComplexSignal& x);

/// Adds complex AWGN so that mean power over [active_begin, active_end) of
/// the input divided by the noise variance equals snr_db.
ComplexSignal add_awgn(const ComplexSignal& x, double snr_db, std::uint64_t seed);

/// Flat: Rayleigh alpha with E|alpha|^2 = 1. Selective: complex Gaussian taps
/// with exponentially decaying powers, normalized to unit energy.
ChannelRealization sample_channel(ChannelKind kind, double snr_db, std::uint64_t seed,
                                  const SelectiveParams& params = {});

}  // namespace divrff

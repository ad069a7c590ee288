// SPDX-License-Identifier: Apache-2.0

#include "divrff/channel.hpp"

#include "divrff/dsp.hpp"
#include "divrff/error.hpp"
#include "divrff/random.hpp"

#include <cmath>

namespace divrff {

void ChannelRealization::validate() const {
    if (kind == ChannelKind::Flat) {
        if (!(std::abs(alpha) > 0.0)) throw Error(ErrorKind::Config, "flat channel needs |alpha| > 0");
        return;
    }
    if (taps.size() == 0 || static_cast<std::size_t>(taps.size()) != delays.size())
        throw Error(ErrorKind::Config, "selective channel needs one delay per tap");
    if (delays.front() != 0) throw Error(ErrorKind::Config, "first tap delay must be 0");
    for (std::size_t i = 1; i < delays.size(); ++i)
        if (delays[i] <= delays[i - 1]) throw Error(ErrorKind::Config, "tap delays must increase strictly");
    if (std::abs(taps.squaredNorm() - 1.0) > 1e-9)
        throw Error(ErrorKind::Config, "selective taps must have unit energy");
}

CVector ChannelRealization::impulse_response() const {
    if (kind == ChannelKind::Flat) return CVector::Constant(1, alpha);
    CVector h = CVector::Zero(delays.back() + 1);
    for (std::size_t i = 0; i < delays.size(); ++i) h[delays[i]] += taps[static_cast<Index>(i)];
    return h;
}

ScenarioPreset scenario_preset(const std::string& label) {
    if (label == "flat") return {label, ChannelKind::Flat, {}, false};
    if (label == "selective") return {label, ChannelKind::Selective, {}, false};
    if (label == "LOS") return {label, ChannelKind::Selective, {4, 1.0}, false};
    if (label == "NLOS") return {label, ChannelKind::Selective, {8, 4.0}, false};
    if (label == "mobile") return {label, ChannelKind::Selective, {8, 4.0}, true};
    if (label == "corridor") return {label, ChannelKind::Selective, {6, 2.0}, false};
    throw Error(ErrorKind::Config, "unknown channel scenario '" + label + "'");
}

ComplexSignal add_awgn(const ComplexSignal& x, double snr_db, std::uint64_t seed) {
    if (!std::isfinite(snr_db)) {
        if (snr_db > 0) return x;
        throw Error(ErrorKind::Config, "snr_db must be finite or +inf");
    }
    const Index begin = x.active_begin;
    const Index end = x.active_end();
    const double signal_power = mean_power(x.samples.segment(begin, end - begin));
    const double variance = signal_power / std::pow(10.0, snr_db / 10.0);
    ComplexSignal out = x;
    Rng rng(seed);
    for (Index n = 0; n < out.size(); ++n) out.samples[n] += complex_gaussian(rng, variance);
    return out;
}

ComplexSignal apply_channel(const ChannelRealization& ch, const ComplexSignal& x) {
    ComplexSignal out = x;
    if (ch.kind == ChannelKind::Flat) {
        out.samples = ch.alpha * x.samples;
    } else {
        out.samples = convolve_truncated(x.samples, ch.impulse_response());
    }
    return add_awgn(out, ch.snr_db, derive_seed(ch.seed, {0x6E6F697365ULL}));
}

ChannelRealization sample_channel(ChannelKind kind, double snr_db, std::uint64_t seed,
                                  const SelectiveParams& params) {
    Rng rng(seed);
    ChannelRealization ch;
    ch.kind = kind;
    ch.snr_db = snr_db;
    ch.seed = seed;
    if (kind == ChannelKind::Flat) {
        ch.alpha = complex_gaussian(rng, 1.0);
        return ch;
    }
    if (params.tap_count < 1 || !(params.decay > 0.0))
        throw Error(ErrorKind::Config, "selective channel needs tap_count >= 1 and decay > 0");
    ch.taps.resize(params.tap_count);
    ch.delays.resize(static_cast<std::size_t>(params.tap_count));
    double total = 0.0;
    for (int l = 0; l < params.tap_count; ++l) total += std::exp(-l / params.decay);
    for (int l = 0; l < params.tap_count; ++l) {
        ch.delays[static_cast<std::size_t>(l)] = l;
        ch.taps[l] = complex_gaussian(rng, std::exp(-l / params.decay) / total);
    }
    ch.taps /= ch.taps.norm();
    return ch;
}

}  // namespace divrff

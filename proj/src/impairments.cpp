// SPDX-License-Identifier: Apache-2.0

#include "divrff/impairments.hpp"

#include "divrff/dsp.hpp"
#include "divrff/error.hpp"
#include "divrff/random.hpp"
#include "divrff/waveform.hpp"

#include <cmath>

namespace divrff {
namespace {

CVector apply_iq(const CVector& z, const IqCoefficients& c) {
    return c.k1 * z.array() + c.k2 * z.array().conjugate();
}

CVector apply_pa(const CVector& x, const CVector& coeffs) {
    if (coeffs.size() == 1) return coeffs[0] * x;
    CVector out(x.size());
    for (Index n = 0; n < x.size(); ++n) {
        const double p = std::norm(x[n]);
        Complex acc(0.0);
        double pk = 1.0;
        for (Index k = 0; k < coeffs.size(); ++k) {
            acc += coeffs[k] * pk;
            pk *= p;
        }
        out[n] = x[n] * acc;
    }
    return out;
}

bool is_identity_iq(const DeviceProfile& p) {
    return p.iq_gain_imbalance == 1.0 && p.iq_phase_imbalance == 0.0;
}

// Multiplies the HT-LTF symbol's spectrum by the tilt and rebuilds its CP.
void apply_band_tilt(CVector& x, const BandTilt& tilt) {
    const Index sym_begin = kLegacyLength + kHtltfCpLength;
    CVector spec = fft(x.segment(sym_begin, kFftSize));
    for (int tone = -kFftSize / 2; tone < kFftSize / 2; ++tone) spec[tone_to_bin(tone)] *= tilt.gain(tone);
    const CVector sym = ifft(spec);
    x.segment(kLegacyLength, kHtltfCpLength) = sym.tail(kHtltfCpLength);
    x.segment(sym_begin, kFftSize) = sym;
}

}  // namespace

double BandTilt::gain(int tone) const {
    if (!enabled) return 1.0;
    const double t = static_cast<double>(tone) / 28.0;
    return std::pow(10.0, (linear_db * t + quadratic_db * t * t) / 20.0);
}

IqCoefficients iq_coefficients(double gain, double phase) {
    return {0.5 * (1.0 + gain * std::polar(1.0, -phase)), 0.5 * (1.0 - gain * std::polar(1.0, phase))};
}

DeviceProfile DeviceProfile::identity(std::string id) {
    DeviceProfile p;
    p.device_id = std::move(id);
    return p;
}

void DeviceProfile::validate() const {
    if (fir_taps.size() == 0) throw Error(ErrorKind::Config, "fir_taps must be nonempty");
    for (Index k = 1; k < fir_taps.size(); ++k)
        if (std::abs(fir_taps[k]) > std::abs(fir_taps[0]))
            throw Error(ErrorKind::Config, "fir_taps[0] must be the dominant tap");
    if (!(iq_gain_imbalance > 0.0)) throw Error(ErrorKind::Config, "iq_gain_imbalance must be > 0");
    if (pa_coeffs.size() == 0 || pa_coeffs[0] != Complex(1.0))
        throw Error(ErrorKind::Config, "pa_coeffs[0] must be 1");
    if (!std::isfinite(cfo_hz)) throw Error(ErrorKind::Config, "cfo_hz must be finite");
}

DeviceProfile DeviceProfile::linear_only() const {
    DeviceProfile p = *this;
    p.dc_offset = 0.0;
    p.iq_gain_imbalance = 1.0;
    p.iq_phase_imbalance = 0.0;
    p.pa_coeffs = CVector::Ones(1);
    p.cfo_hz = 0.0;
    return p;
}

ComplexSignal apply_transmitter(const DeviceProfile& profile, const ComplexSignal& x) {
    ComplexSignal out = x;
    CVector s = x.samples;
    if (profile.band_tilt.enabled && x.format == PreambleFormat::HTMF && x.active_begin == 0 &&
        s.size() >= kHtmfLength)
        apply_band_tilt(s, profile.band_tilt);
    s = convolve_truncated(s, profile.fir_taps);
    if (profile.dc_offset != Complex(0.0)) s.array() += profile.dc_offset;
    if (!is_identity_iq(profile))
        s = apply_iq(s, iq_coefficients(profile.iq_gain_imbalance, profile.iq_phase_imbalance));
    s = apply_pa(s, profile.pa_coeffs);
    if (profile.cfo_hz != 0.0) s = rotate(s, profile.cfo_hz, x.sample_rate);
    out.samples = std::move(s);
    return out;
}

ComplexSignal apply_receiver(const DeviceProfile& profile, const ComplexSignal& y) {
    ComplexSignal out = y;
    CVector s = y.samples;
    if (profile.cfo_hz != 0.0) s = rotate(s, -profile.cfo_hz, y.sample_rate);
    s = apply_pa(s, profile.pa_coeffs);
    if (!is_identity_iq(profile))
        s = apply_iq(s, iq_coefficients(profile.iq_gain_imbalance, profile.iq_phase_imbalance));
    if (profile.dc_offset != Complex(0.0)) s.array() += profile.dc_offset;
    s = convolve_truncated(s, profile.fir_taps);
    out.samples = std::move(s);
    return out;
}

DeviceProfile sample_profile(std::uint64_t rng_seed, DeviceRole role, bool field_distinct,
                             const ProfileRanges& ranges) {
    Rng rng(rng_seed);
    DeviceProfile p;
    p.seed = rng_seed;

    const double dc_max = std::pow(10.0, ranges.dc_max_dbc / 20.0);
    p.dc_offset = std::polar(uniform(rng, 0.0, dc_max), uniform(rng, -kPi, kPi));
    p.iq_gain_imbalance = std::pow(10.0, uniform(rng, -ranges.iq_gain_max_db, ranges.iq_gain_max_db) / 20.0);
    p.iq_phase_imbalance = uniform(rng, -ranges.iq_phase_max_deg, ranges.iq_phase_max_deg) * kPi / 180.0;

    const int taps = std::max(1, ranges.fir_tap_count);
    const double secondary_max = std::pow(10.0, ranges.fir_secondary_max_db / 20.0);
    p.fir_taps = CVector::Zero(taps);
    p.fir_taps[0] = 1.0;
    for (int k = 1; k < taps; ++k)
        p.fir_taps[k] = std::polar(uniform(rng, 0.0, secondary_max), uniform(rng, -kPi, kPi));

    p.pa_coeffs = CVector::Zero(2);
    p.pa_coeffs[0] = 1.0;
    // Mild compression with a small AM/PM component.
    p.pa_coeffs[1] = -std::polar(uniform(rng, 0.0, ranges.pa_cubic_max), uniform(rng, -0.5, 0.5));

    p.cfo_hz = uniform(rng, -ranges.cfo_max_hz, ranges.cfo_max_hz);

    const double lin = uniform(rng, -ranges.tilt_max_db, ranges.tilt_max_db);
    const double quad = uniform(rng, -ranges.tilt_max_db, ranges.tilt_max_db);
    if (role == DeviceRole::Transmitter && field_distinct) {
        p.band_tilt.enabled = true;
        p.band_tilt.linear_db = lin;
        p.band_tilt.quadratic_db = quad;
    }
    return p;
}

}  // namespace divrff

#pragma once

#include "divrff/types.hpp"

#include <cstdint>
#include <string>

namespace divrff {

enum class DeviceRole { Transmitter, Receiver };

/// Smooth gain over tone index applied only to the transmitted HT-LTF, so a
/// transmitter's HT-LTF response differs from its L-LTF response:
/// gain_dB(t) = linear_db * t + quadratic_db * t^2 with t = tone / 28.
struct BandTilt {
    bool enabled = false;
    double linear_db = 0.0;
    double quadratic_db = 0.0;

    double gain(int tone) const;
};

/// Hardware impairment set of one radio.
///
/// Transmit order: tilt (HT-LTF only) -> FIR -> DC -> IQ imbalance -> PA -> CFO.
/// Receive order is the mirror: CFO -> PA -> IQ imbalance -> DC -> FIR.
/// With dc = 0, gain = 1, phase = 0 and pa = [1] the chain is a convolution
/// with `fir_taps`, and the division features cancel it exactly.
struct DeviceProfile {
    std::string device_id;
    Complex dc_offset{0.0, 0.0};
    double iq_gain_imbalance = 1.0;
    double iq_phase_imbalance = 0.0;  // radians
    CVector fir_taps = CVector::Ones(1);
    /// Odd-order memoryless polynomial: y = sum_k pa[k] x |x|^(2k).
    CVector pa_coeffs = CVector::Ones(1);
    double cfo_hz = 0.0;
    BandTilt band_tilt;
    std::uint64_t seed = 0;

    static DeviceProfile identity(std::string id = "identity");

    /// Throws Error(Config) when an invariant is violated.
    void validate() const;

    /// Drops DC, IQ imbalance, PA and CFO, keeping FIR and tilt.
    DeviceProfile linear_only() const;
};

/// Sampling ranges for `sample_profile`. Defaults: DC <= -30 dBc,
/// +/-1 dB gain and +/-3 deg phase imbalance, 3-tap FIR with secondary taps
/// <= -20 dB, CFO uniform in +/-200 kHz, third-order PA term within 1%.
struct ProfileRanges {
    double dc_max_dbc = -30.0;
    double iq_gain_max_db = 1.0;
    double iq_phase_max_deg = 3.0;
    int fir_tap_count = 3;
    double fir_secondary_max_db = -20.0;
    double pa_cubic_max = 0.01;
    double cfo_max_hz = 200e3;
    double tilt_max_db = 1.5;
};

/// Transmit-side impairments. HT-LTF tilt is applied only when `x.format`
/// is HT-MF and the frame starts at sample 0.
ComplexSignal apply_transmitter(const DeviceProfile& profile, const ComplexSignal& x);

/// Receive-side impairments; `cfo_hz` is the receiver's LO offset, so the
/// net CFO seen downstream is tx.cfo_hz - rx.cfo_hz.
ComplexSignal apply_receiver(const DeviceProfile& profile, const ComplexSignal& y);

/// Draws a random profile. Receivers never carry a band tilt; transmitters
/// carry one only when `field_distinct` is set.
DeviceProfile sample_profile(std::uint64_t rng_seed, DeviceRole role, bool field_distinct,
                             const ProfileRanges& ranges = {});

/// IQ imbalance as y = k1 z + k2 conj(z).
struct IqCoefficients {
    Complex k1;
    Complex k2;
};
IqCoefficients iq_coefficients(double gain, double phase);

}  // namespace divrff

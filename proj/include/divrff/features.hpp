#pragma once

#include "divrff/types.hpp"
#include "divrff/waveform.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace divrff {

enum class Extractor { RD_STF, RD_LTF, HL, DV };

std::string_view to_string(Extractor e);
Extractor extractor_from_string(std::string_view s);

/// Feature dimension: 12 / 52 / 52 / 12.
int feature_dim(Extractor e);

/// 64-bin spectrum of one training field after its repeated windows are
/// averaged in time.
struct FieldSpectrum {
    Field field = Field::LLTF;
    CVector bins = CVector::Zero(kFftSize);
};

/// Unit-energy, nonnegative per-tone magnitudes.
struct FeatureVector {
    Extractor extractor = Extractor::RD_LTF;
    RVector values;
    std::vector<int> tone_indices;
    std::optional<std::string> device_hint;
};

struct DivisionOptions {
    /// A divisor bin below `epsilon` times the divisor's RMS over the used
    /// tones is an error, never clamped.
    double epsilon = 1e-6;
    /// Divide out the known transmitted sequences (X_H / X_L, X_S / X_L).
    /// DV only: false divides the raw field spectra.
    bool compensate_sequences = true;
};

/// Averages the field's 64-sample windows and transforms them. Needs a
/// synchronized, CFO-compensated capture.
FieldSpectrum field_spectrum(const ComplexSignal& signal, Index frame_start, Field field);

/// Reference-device division: |unknown / model| on the field's occupied
/// tones. Both spectra must come from the same receiver.
FeatureVector extract_rd(const FieldSpectrum& unknown, const FieldSpectrum& model,
                         const DivisionOptions& opts = {});

/// HT-LTF over L-LTF within one frame, sequence-compensated, on the 52
/// tones shared with the L-LTF.
FeatureVector extract_hl(const FieldSpectrum& lltf, const FieldSpectrum& htltf,
                         const DivisionOptions& opts = {});

/// L-STF over L-LTF within one frame on the 12 L-STF tones.
FeatureVector extract_dv(const FieldSpectrum& lstf, const FieldSpectrum& lltf,
                         const DivisionOptions& opts = {});

/// Tones used by an extractor, ascending.
const std::vector<int>& extractor_tones(Extractor e);

}  // namespace divrff

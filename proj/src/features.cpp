// SPDX-License-Identifier: Apache-2.0

#include "divrff/features.hpp"

#include "divrff/dsp.hpp"
#include "divrff/error.hpp"

#include <cmath>
#include <string>

namespace divrff {
namespace {

// Divides `num` by `den` tone by tone, takes magnitudes and normalizes.
FeatureVector divide(Extractor extractor, const std::vector<int>& tones, const CVector& num,
                     const CVector& den, ErrorKind degenerate, double epsilon) {
    const Index dim = static_cast<Index>(tones.size());
    CVector n(dim), d(dim);
    for (Index i = 0; i < dim; ++i) {
        const int bin = tone_to_bin(tones[static_cast<std::size_t>(i)]);
        n[i] = num[bin];
        d[i] = den[bin];
    }
    const double rms = std::sqrt(mean_power(d));
    for (Index i = 0; i < dim; ++i) {
        if (!(std::abs(d[i]) >= epsilon * rms) || rms == 0.0)
            throw Error(degenerate, "divisor bin at tone " + std::to_string(tones[static_cast<std::size_t>(i)]) +
                                        " is below epsilon");
    }
    FeatureVector f;
    f.extractor = extractor;
    f.tone_indices = tones;
    f.values = (n.array() / d.array()).abs().matrix();
    if (!f.values.allFinite() || !normalize_unit_energy(f.values))
        throw Error(degenerate, "division produced a zero or non-finite feature");
    return f;
}

std::vector<int> tones_for(Field field) { return occupied_tones(field); }

}  // namespace

std::string_view to_string(Extractor e) {
    switch (e) {
        case Extractor::RD_STF: return "RD_STF";
        case Extractor::RD_LTF: return "RD_LTF";
        case Extractor::HL: return "HL";
        case Extractor::DV: return "DV";
    }
    return "?";
}

Extractor extractor_from_string(std::string_view s) {
    if (s == "RD_STF") return Extractor::RD_STF;
    if (s == "RD_LTF") return Extractor::RD_LTF;
    if (s == "HL") return Extractor::HL;
    if (s == "DV") return Extractor::DV;
    throw Error(ErrorKind::Config, "unknown extractor '" + std::string(s) + "'");
}

int feature_dim(Extractor e) { return static_cast<int>(extractor_tones(e).size()); }

const std::vector<int>& extractor_tones(Extractor e) {
    switch (e) {
        case Extractor::RD_STF:
        case Extractor::DV: return occupied_tones(Field::LSTF);
        case Extractor::RD_LTF:
        case Extractor::HL: return occupied_tones(Field::LLTF);
    }
    return occupied_tones(Field::LLTF);
}

FieldSpectrum field_spectrum(const ComplexSignal& signal, Index frame_start, Field field) {
    const auto windows = field_windows(field);
    CVector acc = CVector::Zero(kFftSize);
    for (WindowName w : windows) acc += extract_window(signal, frame_start, w);
    acc /= static_cast<double>(windows.size());
    return {field, fft(acc)};
}

FeatureVector extract_rd(const FieldSpectrum& unknown, const FieldSpectrum& model, const DivisionOptions& opts) {
    if (unknown.field != model.field)
        throw Error(ErrorKind::DegenerateModel, "unknown and model spectra come from different fields");
    Extractor e;
    switch (unknown.field) {
        case Field::LSTF: e = Extractor::RD_STF; break;
        case Field::LLTF: e = Extractor::RD_LTF; break;
        default: throw Error(ErrorKind::DegenerateModel, "reference division uses the L-STF or L-LTF only");
    }
    return divide(e, tones_for(unknown.field), unknown.bins, model.bins, ErrorKind::DegenerateModel, opts.epsilon);
}

FeatureVector extract_hl(const FieldSpectrum& lltf, const FieldSpectrum& htltf, const DivisionOptions& opts) {
    if (lltf.field != Field::LLTF || htltf.field != Field::HTLTF)
        throw Error(ErrorKind::DegenerateDenominator, "HL needs an L-LTF and an HT-LTF spectrum");
    static const CVector x_l = ideal_symbol_spectrum(Field::LLTF);
    static const CVector x_h = ideal_symbol_spectrum(Field::HTLTF);
    const auto& tones = tones_for(Field::LLTF);
    // (Y_H / Y_L) / (X_H / X_L) = (Y_H X_L) / (Y_L X_H)
    CVector num = htltf.bins, den = lltf.bins;
    for (int k : tones) {
        const int b = tone_to_bin(k);
        num[b] *= x_l[b];
        den[b] *= x_h[b];
    }
    return divide(Extractor::HL, tones, num, den, ErrorKind::DegenerateDenominator, opts.epsilon);
}

FeatureVector extract_dv(const FieldSpectrum& lstf, const FieldSpectrum& lltf, const DivisionOptions& opts) {
    if (lstf.field != Field::LSTF || lltf.field != Field::LLTF)
        throw Error(ErrorKind::DegenerateDenominator, "DV needs an L-STF and an L-LTF spectrum");
    static const CVector x_s = ideal_symbol_spectrum(Field::LSTF);
    static const CVector x_l = ideal_symbol_spectrum(Field::LLTF);
    const auto& tones = tones_for(Field::LSTF);
    CVector num = lstf.bins, den = lltf.bins;
    if (opts.compensate_sequences) {
        for (int k : tones) {
            const int b = tone_to_bin(k);
            num[b] *= x_l[b];
            den[b] *= x_s[b];
        }
    }
    return divide(Extractor::DV, tones, num, den, ErrorKind::DegenerateDenominator, opts.epsilon);
}

}  // namespace divrff

// SPDX-License-Identifier: Apache-2.0

#include "divrff/waveform.hpp"

#include "divrff/dsp.hpp"
#include "divrff/error.hpp"

#include <array>
#include <cmath>
#include <string>

namespace divrff {
namespace {

// IEEE 802.11-2012, 20 MHz training sequences.
constexpr std::array<int, 53> kLltfSequence = {
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1,   // -26..-1
    0,                                                                                       // DC
    1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1  // 1..26
};

struct StfTone {
    int tone;
    int sign;  // value is sign * (1 + j) * sqrt(13/6)
};

constexpr std::array<StfTone, 12> kLstfTones = {{
    {-24, 1}, {-20, -1}, {-16, 1}, {-12, -1}, {-8, -1}, {-4, 1},
    {4, -1}, {8, -1}, {12, 1}, {16, 1}, {20, 1}, {24, 1},
}};

int lltf_value(int tone) { return kLltfSequence[static_cast<std::size_t>(tone + 26)]; }

// HT-LTF extends the L-LTF by {1, 1} below and {-1, -1} above.
int htltf_value(int tone) {
    if (tone == -28 || tone == -27) return 1;
    if (tone == 27 || tone == 28) return -1;
    if (tone >= -26 && tone <= 26) return lltf_value(tone);
    return 0;
}

std::vector<int> make_tones(Field field) {
    std::vector<int> tones;
    switch (field) {
        case Field::LSTF:
            for (const auto& t : kLstfTones) tones.push_back(t.tone);
            break;
        case Field::LLTF:
            for (int k = -26; k <= 26; ++k)
                if (k != 0) tones.push_back(k);
            break;
        case Field::HTLTF:
            for (int k = -28; k <= 28; ++k)
                if (k != 0) tones.push_back(k);
            break;
    }
    return tones;
}

void scale_to_unit_power(CVector& x) { x /= std::sqrt(mean_power(x)); }

}  // namespace

std::string_view to_string(Field field) {
    switch (field) {
        case Field::LSTF: return "LSTF";
        case Field::LLTF: return "LLTF";
        case Field::HTLTF: return "HTLTF";
    }
    return "?";
}

std::string_view to_string(WindowName name) {
    switch (name) {
        case WindowName::LSTF1: return "LSTF1";
        case WindowName::LSTF2: return "LSTF2";
        case WindowName::LLTF1: return "LLTF1";
        case WindowName::LLTF2: return "LLTF2";
        case WindowName::HTLTF1: return "HTLTF1";
    }
    return "?";
}

SymbolWindow symbol_window(WindowName name) {
    switch (name) {
        case WindowName::LSTF1: return {name, Field::LSTF, 17};
        case WindowName::LSTF2: return {name, Field::LSTF, 81};
        case WindowName::LLTF1: return {name, Field::LLTF, 33};
        case WindowName::LLTF2: return {name, Field::LLTF, 97};
        case WindowName::HTLTF1: return {name, Field::HTLTF, 17};
    }
    throw Error(ErrorKind::Bounds, "unknown window");
}

int field_offset(Field field) {
    switch (field) {
        case Field::LSTF: return 0;
        case Field::LLTF: return kLstfLength;
        case Field::HTLTF: return kLegacyLength;
    }
    return 0;
}

int window_offset(WindowName name) {
    const SymbolWindow w = symbol_window(name);
    return field_offset(w.field) + w.start_index - 1;
}

std::vector<WindowName> field_windows(Field field) {
    switch (field) {
        case Field::LSTF: return {WindowName::LSTF1, WindowName::LSTF2};
        case Field::LLTF: return {WindowName::LLTF1, WindowName::LLTF2};
        case Field::HTLTF: return {WindowName::HTLTF1};
    }
    return {};
}

const std::vector<int>& occupied_tones(Field field) {
    static const std::vector<int> lstf = make_tones(Field::LSTF);
    static const std::vector<int> lltf = make_tones(Field::LLTF);
    static const std::vector<int> htltf = make_tones(Field::HTLTF);
    switch (field) {
        case Field::LSTF: return lstf;
        case Field::LLTF: return lltf;
        case Field::HTLTF: return htltf;
    }
    return lltf;
}

CVector ideal_symbol_spectrum(Field field) {
    CVector x = CVector::Zero(kFftSize);
    switch (field) {
        case Field::LSTF: {
            const double scale = std::sqrt(13.0 / 6.0);
            for (const auto& t : kLstfTones)
                x[tone_to_bin(t.tone)] = Complex(t.sign * scale, t.sign * scale);
            break;
        }
        case Field::LLTF:
            for (int k : occupied_tones(Field::LLTF)) x[tone_to_bin(k)] = lltf_value(k);
            break;
        case Field::HTLTF:
            for (int k : occupied_tones(Field::HTLTF)) x[tone_to_bin(k)] = htltf_value(k);
            break;
    }
    return x;
}

CVector field_waveform(Field field) {
    const CVector symbol = ifft(ideal_symbol_spectrum(field));
    CVector out;
    switch (field) {
        case Field::LSTF:
            // Ten 16-sample short symbols: the 64-sample symbol repeated 2.5 times.
            out.resize(kLstfLength);
            for (int n = 0; n < kLstfLength; ++n) out[n] = symbol[n % kFftSize];
            break;
        case Field::LLTF:
            out.resize(kLltfLength);
            out << symbol.tail(kLltfCpLength), symbol, symbol;
            break;
        case Field::HTLTF:
            out.resize(kHtltfLength);
            out << symbol.tail(kHtltfCpLength), symbol;
            break;
    }
    scale_to_unit_power(out);
    return out;
}

ComplexSignal generate_preamble(const PreambleSpec& spec) {
    if (spec.fft_size != kFftSize || spec.sample_rate != kSampleRate)
        throw Error(ErrorKind::Config, "only 64-point FFT at 20 Msps is supported");

    ComplexSignal out;
    out.sample_rate = spec.sample_rate;
    out.format = spec.format;
    const Index len = spec.format == PreambleFormat::HTMF ? kHtmfLength : kLegacyLength;
    out.samples.resize(len);
    out.samples.segment(field_offset(Field::LSTF), kLstfLength) = field_waveform(Field::LSTF);
    out.samples.segment(field_offset(Field::LLTF), kLltfLength) = field_waveform(Field::LLTF);
    if (spec.format == PreambleFormat::HTMF)
        out.samples.segment(field_offset(Field::HTLTF), kHtltfLength) = field_waveform(Field::HTLTF);
    out.active_begin = 0;
    out.active_length = len;
    return out;
}

CVector extract_window(const ComplexSignal& signal, Index frame_start, WindowName window) {
    const SymbolWindow w = symbol_window(window);
    if (w.field == Field::HTLTF && signal.format == PreambleFormat::NonHT)
        throw Error(ErrorKind::Bounds,
                    std::string("window ") + std::string(to_string(window)) + " absent from a non-HT frame");
    const Index begin = frame_start + window_offset(window);
    if (frame_start < 0 || begin + w.length > signal.size())
        throw Error(ErrorKind::Bounds, std::string("window ") + std::string(to_string(window)) +
                                           " at sample " + std::to_string(begin) +
                                           " exceeds signal of length " + std::to_string(signal.size()));
    return signal.samples.segment(begin, w.length);
}

}  // namespace divrff

#pragma once

#include "divrff/types.hpp"

#include <string_view>
#include <vector>

namespace divrff {

/// Training fields of the 20 MHz legacy and HT-mixed preambles.
enum class Field { LSTF, LLTF, HTLTF };

enum class WindowName { LSTF1, LSTF2, LLTF1, LLTF2, HTLTF1 };

struct PreambleSpec {
    PreambleFormat format = PreambleFormat::NonHT;
    double sample_rate = kSampleRate;
    int fft_size = kFftSize;
};

/// A 64-sample FFT window; `start_index` is 1-based within its field.
struct SymbolWindow {
    WindowName name;
    Field field;
    int start_index;
    int length = kFftSize;
};

inline constexpr int kLstfLength = 160;
inline constexpr int kLltfLength = 160;
inline constexpr int kLltfCpLength = 32;
inline constexpr int kHtltfLength = 80;
inline constexpr int kHtltfCpLength = 16;
inline constexpr int kLegacyLength = kLstfLength + kLltfLength;
inline constexpr int kHtmfLength = kLegacyLength + kHtltfLength;

std::string_view to_string(Field field);
std::string_view to_string(WindowName name);

SymbolWindow symbol_window(WindowName name);

/// Offset of the first sample of `field` from the frame start, 0-based.
int field_offset(Field field);

/// Offset of the window's first sample from the frame start, 0-based.
int window_offset(WindowName name);

/// Windows averaged for a field: both repeated symbols for L-STF and L-LTF,
/// the single HT-LTF1 window otherwise.
std::vector<WindowName> field_windows(Field field);

/// Occupied signed tone indices in ascending order.
const std::vector<int>& occupied_tones(Field field);

/// Known transmitted spectrum of one 64-sample symbol of `field`, in FFT bin
/// order. Nonzero exactly on the occupied tones.
CVector ideal_symbol_spectrum(Field field);

/// Time-domain samples of one field at unit average power.
CVector field_waveform(Field field);

/// Non-HT: L-STF + L-LTF (320 samples). HT-MF: the same legacy part followed
/// by one HT-LTF (400 samples). Each field has unit average power.
ComplexSignal generate_preamble(const PreambleSpec& spec);
inline ComplexSignal generate_preamble(PreambleFormat format) {
    return generate_preamble(PreambleSpec{format});
}

/// Returns the 64 samples of `window` for a frame starting at `frame_start`.
/// Throws Error(Bounds) naming the window if it does not fit.
CVector extract_window(const ComplexSignal& signal, Index frame_start, WindowName window);

}  // namespace divrff

// SPDX-License-Identifier: Apache-2.0

#include "divrff/preprocess.hpp"

#include "divrff/dsp.hpp"
#include "divrff/error.hpp"
#include "divrff/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace divrff {
namespace {

constexpr int kShortSymbol = 16;
constexpr int kShortRepeats = 8;
// The lag-64 window starts this far into the L-LTF cyclic prefix so a few
// samples of timing error on either side keep it inside the field.
constexpr int kFineGuard = 16;

double window_energy(const CVector& y, Index begin, Index len, bool squared) {
    const auto seg = y.segment(begin, len);
    return squared ? seg.squaredNorm() : seg.cwiseAbs().sum();
}

Complex lagged_product_sum(const CVector& y, Index begin, Index count, Index lag) {
    return (y.segment(begin, count).conjugate().array() * y.segment(begin + lag, count).array()).sum();
}

// Pre-sync CFO acquisition: the strongest lag-16 autocorrelation over a
// 64-sample sliding window lands on the L-STF plateau.
double acquire_cfo(const CVector& y, Index n0, Index search_len) {
    constexpr Index span = 64;
    const Index last = std::min<Index>(n0 + search_len, y.size() - span - kShortSymbol);
    if (last <= n0) return 0.0;
    Complex acc = lagged_product_sum(y, n0, span, kShortSymbol);
    Complex best = acc;
    for (Index d = n0 + 1; d < last; ++d) {
        acc += std::conj(y[d + span - 1]) * y[d + span - 1 + kShortSymbol] -
               std::conj(y[d - 1]) * y[d - 1 + kShortSymbol];
        if (std::abs(acc) > std::abs(best)) best = acc;
    }
    if (std::abs(best) == 0.0) return 0.0;
    return std::arg(best) / (2.0 * kPi * kSamplePeriod * kShortSymbol);
}

}  // namespace

void DetectionConfig::validate() const {
    if (window_w < 16) throw Error(ErrorKind::Config, "detection window W must be >= 16");
    if (!(threshold_t > 0.0)) throw Error(ErrorKind::Config, "detection threshold T must be > 0");
}

Index detect_signal(const ComplexSignal& y, const DetectionConfig& cfg) {
    cfg.validate();
    if (y.size() < cfg.window_w)
        throw Error(ErrorKind::NotDetected, "capture shorter than one detection window");
    for (Index start = 0; start + cfg.window_w <= y.size(); start += cfg.window_w) {
        if (window_energy(y.samples, start, cfg.window_w, cfg.squared) > cfg.threshold_t) return start;
    }
    throw Error(ErrorKind::NotDetected, "no window exceeds the threshold");
}

double noise_floor_threshold(const ComplexSignal& y, Index window_w, double factor, bool squared) {
    const Index w = std::min(window_w, y.size());
    const double floor = w > 0 ? window_energy(y.samples, 0, w, squared) : 0.0;
    // `factor` is a power ratio; magnitude sums scale with its square root.
    const double scale = squared ? factor : std::sqrt(factor);
    return std::max(scale * floor, 1e-9 * static_cast<double>(std::max<Index>(w, 1)));
}

SyncResult synchronize(const ComplexSignal& y, Index n0, const SyncConfig& cfg) {
    static const CVector reference = field_waveform(Field::LLTF);
    const Index ref_len = reference.size();
    const Index seg = std::clamp<Index>(cfg.segment_len, 1, ref_len);
    if (n0 < 0) throw Error(ErrorKind::SyncFailed, "negative coarse start");

    const CVector ref_conj = reference.conjugate();
    std::vector<double> metric;
    metric.reserve(static_cast<std::size_t>(std::max<Index>(cfg.search_len, 0)));
    for (Index k = 0; k < cfg.search_len; ++k) {
        const Index pos = n0 + k;
        if (pos + ref_len > y.size()) break;
        double m = 0.0;
        for (Index s = 0; s < ref_len; s += seg) {
            const Index len = std::min(seg, ref_len - s);
            m += std::abs((y.samples.segment(pos + s, len).array() * ref_conj.segment(s, len).array()).sum());
        }
        metric.push_back(m);
    }
    if (metric.empty()) throw Error(ErrorKind::SyncFailed, "search range lies outside the capture");

    const auto peak_it = std::max_element(metric.begin(), metric.end());
    const Index k_best = static_cast<Index>(peak_it - metric.begin());
    const double peak = *peak_it;

    std::vector<double> sorted = metric;
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double median = *mid;
    const double ratio = median > 0.0 ? peak / median : (peak > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (cfg.check_peak && !(ratio >= cfg.min_peak_to_median))
        throw Error(ErrorKind::SyncFailed,
                    "correlation peak-to-median ratio " + std::to_string(ratio) + " below floor");

    SyncResult r;
    r.coarse_start_n0 = n0;
    r.search_len_k = cfg.search_len;
    r.lltf_start_k0 = n0 + k_best;
    r.correlation_peak = r.lltf_start_k0;
    r.frame_start_n1 = r.lltf_start_k0 - kLstfLength;
    r.peak_to_median = ratio;
    if (r.frame_start_n1 < 0)
        throw Error(ErrorKind::SyncFailed, "L-LTF peak implies a frame start before the capture");
    return r;
}

Index first_path_shift(const ComplexSignal& y, Index k0, const SyncConfig& cfg) {
    const Index sym = k0 + kLltfCpLength;
    if (sym < 0 || sym + 2 * kFftSize > y.size()) return 0;
    static const CVector x_l = ideal_symbol_spectrum(Field::LLTF);
    const CVector avg = 0.5 * (y.samples.segment(sym, kFftSize) + y.samples.segment(sym + kFftSize, kFftSize));
    const CVector spec = fft(avg);
    CVector h_freq = CVector::Zero(kFftSize);
    for (int tone : occupied_tones(Field::LLTF)) {
        const int b = tone_to_bin(tone);
        h_freq[b] = spec[b] / x_l[b];
    }
    const CVector cir = ifft(h_freq);
    const Index span = std::clamp<Index>(cfg.first_path_span, 0, kFftSize / 2 - 1);
    double peak = 0.0;
    for (Index d = -span; d <= span; ++d) peak = std::max(peak, std::norm(cir[tone_to_bin(static_cast<int>(d))]));
    if (!(peak > 0.0)) return 0;
    for (Index d = -span; d <= 0; ++d)
        if (std::norm(cir[tone_to_bin(static_cast<int>(d))]) >= cfg.first_path_fraction * peak) return d;
    return 0;
}

double estimate_cfo_coarse(const ComplexSignal& y, Index n1, int start_offset_ns) {
    if (start_offset_ns < 0 || start_offset_ns > kShortSymbol)
        throw Error(ErrorKind::Config, "start offset n_S must lie in [0, 16]");
    const Index begin = n1 + start_offset_ns;
    const Index count = kShortRepeats * kShortSymbol;
    if (n1 < 0 || begin + count + kShortSymbol > y.size())
        throw Error(ErrorKind::EstimationFailed, "L-STF estimation window exceeds the capture");
    const Complex acc = lagged_product_sum(y.samples, begin, count, kShortSymbol);
    if (std::abs(acc) == 0.0) throw Error(ErrorKind::EstimationFailed, "zero-energy L-STF window");
    return std::arg(acc) / (2.0 * kPi * (1.0 / y.sample_rate) * kShortSymbol);
}

double estimate_cfo_fine(const ComplexSignal& y, Index n1) {
    const Index begin = n1 + window_offset(WindowName::LLTF1) - kFineGuard;
    if (n1 < 0 || begin + 2 * kFftSize > y.size())
        throw Error(ErrorKind::EstimationFailed, "L-LTF estimation window exceeds the capture");
    const Complex acc = lagged_product_sum(y.samples, begin, kFftSize, kFftSize);
    if (std::abs(acc) == 0.0) throw Error(ErrorKind::EstimationFailed, "zero-energy L-LTF window");
    return std::arg(acc) / (2.0 * kPi * (1.0 / y.sample_rate) * kFftSize);
}

ComplexSignal compensate_cfo(const ComplexSignal& y, double f_hat, Index origin) {
    ComplexSignal out = y;
    if (f_hat != 0.0) out.samples = rotate(y.samples, -f_hat, y.sample_rate, origin);
    return out;
}

std::optional<Complex> estimate_idle_dc(const ComplexSignal& y, Index n0, Index guard) {
    const Index n = std::min<Index>(n0 - guard, y.size());
    if (n < kMinIdleSamples) return std::nullopt;
    return y.samples.head(n).mean();
}

PreprocessResult preprocess(const ComplexSignal& raw, const PreprocessConfig& cfg) {
    DetectionConfig det;
    det.window_w = cfg.window_w;
    det.squared = cfg.squared_energy;
    det.threshold_t = cfg.threshold_t ? *cfg.threshold_t
                                      : noise_floor_threshold(raw, cfg.window_w, cfg.threshold_factor,
                                                              cfg.squared_energy);
    const Index n0 = detect_signal(raw, det);

    PreprocessResult out;
    ComplexSignal dc_free;
    if (cfg.remove_dc) {
        if (const auto dc = estimate_idle_dc(raw, n0, cfg.window_w)) {
            out.dc_offset = *dc;
            dc_free = raw;
            dc_free.samples.array() -= *dc;
        }
    }
    const ComplexSignal& y = dc_free.samples.size() > 0 ? dc_free : raw;

    const double f_acq = acquire_cfo(y.samples, n0, cfg.sync.search_len);
    const ComplexSignal derotated = compensate_cfo(y, f_acq, n0);

    out.sync = synchronize(derotated, n0, cfg.sync);
    if (cfg.sync.first_path) {
        const Index shift = first_path_shift(derotated, out.sync.lltf_start_k0, cfg.sync);
        if (out.sync.frame_start_n1 + shift >= 0) {
            out.sync.lltf_start_k0 += shift;
            out.sync.frame_start_n1 += shift;
        }
    }
    const Index n1 = out.sync.frame_start_n1;
    if (n1 + kLegacyLength > y.size())
        throw Error(ErrorKind::SyncFailed, "frame at sample " + std::to_string(n1) + " is truncated");

    out.cfo.start_offset_ns = cfg.cfo_start_offset_ns;
    out.cfo.sample_period = 1.0 / y.sample_rate;
    out.cfo.coarse_hz = estimate_cfo_coarse(y, n1, cfg.cfo_start_offset_ns);
    if (cfg.fine_cfo) {
        const ComplexSignal coarse_removed = compensate_cfo(y, out.cfo.coarse_hz, n1);
        out.cfo.fine_hz = estimate_cfo_fine(coarse_removed, n1);
    }
    out.cfo.total_hz = out.cfo.coarse_hz + out.cfo.fine_hz;
    out.compensated = compensate_cfo(y, out.cfo.total_hz, n1);
    return out;
}

}  // namespace divrff

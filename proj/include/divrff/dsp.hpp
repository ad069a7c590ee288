#pragma once

#include "divrff/types.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

namespace divrff {

/// Forward DFT, X[k] = sum_n x[n] exp(-j 2 pi k n / N), unscaled.
inline CVector fft(const CVector& x) {
    thread_local Eigen::FFT<double> engine;
    CVector out(x.size());
    engine.fwd(out, x);
    return out;
}

/// Inverse DFT with the 1/N factor.
inline CVector ifft(const CVector& spectrum) {
    thread_local Eigen::FFT<double> engine;
    CVector out(spectrum.size());
    engine.inv(out, spectrum);
    return out;
}

/// Signed tone index in [-N/2, N/2) to FFT bin by wraparound.
constexpr int tone_to_bin(int tone, int n = kFftSize) { return ((tone % n) + n) % n; }

template <typename Derived>
double mean_power(const Eigen::MatrixBase<Derived>& x) {
    if (x.size() == 0) return 0.0;
    return x.squaredNorm() / static_cast<double>(x.size());
}

/// Scales `x` to unit Euclidean norm. Returns false and leaves `x` alone if
/// its norm is zero or not finite.
template <typename Derived>
bool normalize_unit_energy(Eigen::MatrixBase<Derived>& x) {
    const auto norm = x.norm();
    if (!(norm > 0) || !std::isfinite(norm)) return false;
    x /= norm;
    return true;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::RealScalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b) {
    using Real = typename DerivedA::RealScalar;
    const Real denom = a.norm() * b.norm();
    if (!(denom > Real(0))) return Real(0);
    return std::real(a.dot(b)) / denom;
}

/// Cosine similarity after removing each vector's mean; the Pearson
/// correlation across entries.
template <typename DerivedA, typename DerivedB>
typename DerivedA::RealScalar centered_cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                                         const Eigen::MatrixBase<DerivedB>& b) {
    const auto ac = (a.array() - a.mean()).matrix().eval();
    const auto bc = (b.array() - b.mean()).matrix().eval();
    return cosine_similarity(ac, bc);
}

/// Multiplies sample n by exp(j 2 pi f (n - origin) Ts).
inline CVector rotate(const CVector& x, double freq_hz, double sample_rate = kSampleRate,
                      Index origin = 0) {
    CVector out(x.size());
    const double step = 2.0 * kPi * freq_hz / sample_rate;
    for (Index n = 0; n < x.size(); ++n) {
        out[n] = x[n] * std::polar(1.0, step * static_cast<double>(n - origin));
    }
    return out;
}

/// Causal linear convolution with integer-delay taps, truncated to |x|.
inline CVector convolve_truncated(const CVector& x, const CVector& taps) {
    CVector out = CVector::Zero(x.size());
    for (Index k = 0; k < taps.size(); ++k) {
        if (taps[k] == Complex(0.0)) continue;
        const Index len = x.size() - k;
        if (len <= 0) break;
        out.segment(k, len) += taps[k] * x.head(len);
    }
    return out;
}

/// Frequency response of a causal tap vector at FFT bin k of an N-point grid.
inline Complex tap_response(const CVector& taps, int bin, int n = kFftSize) {
    Complex acc(0.0);
    for (Index k = 0; k < taps.size(); ++k) {
        acc += taps[k] * std::polar(1.0, -2.0 * kPi * bin * static_cast<double>(k) / n);
    }
    return acc;
}

}  // namespace divrff

// SPDX-License-Identifier: Apache-2.0

#include "divrff/refselect.hpp"

#include "divrff/dsp.hpp"
#include "divrff/error.hpp"
#include "divrff/wavelet.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace divrff {
namespace {

using Eigen::MatrixXd;

std::vector<RVector> zero_details(std::vector<RVector> coeffs) {
    for (std::size_t i = 1; i < coeffs.size(); ++i) coeffs[i].setZero();
    return coeffs;
}

// Orthonormal basis of the signals reachable from the coarsest approximation
// band alone, for inputs of length n.
MatrixXd approximation_basis(Index n) {
    const auto& bank = wavelet::db4();
    const auto layout = wavelet::wavedec(RVector::Zero(n), WaveletConfig::levels, bank);
    const Index coarse = layout.front().size();
    MatrixXd synth(n, coarse);
    for (Index j = 0; j < coarse; ++j) {
        auto coeffs = zero_details(layout);
        coeffs.front().setZero();
        coeffs.front()[j] = 1.0;
        synth.col(j) = wavelet::waverec(coeffs, bank).head(n);
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(synth);
    const Index rank = qr.rank();
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, rank);
    return q;
}

}  // namespace

RVector lowpass_reconstruct(const RVector& amplitude, const WaveletConfig& cfg) {
    const Index n = amplitude.size();
    if (n < kMinWaveletInput)
        throw Error(ErrorKind::Length, "wavelet input needs at least " + std::to_string(kMinWaveletInput) +
                                           " samples, got " + std::to_string(n));
    if (cfg.method == LowpassMethod::ZeroDetails) {
        const auto& bank = wavelet::db4();
        return wavelet::waverec(zero_details(wavelet::wavedec(amplitude, WaveletConfig::levels, bank)), bank)
            .head(n);
    }
    thread_local Index cached_n = -1;
    thread_local MatrixXd basis;
    if (cached_n != n) {
        basis = approximation_basis(n);
        cached_n = n;
    }
    return basis * (basis.transpose() * amplitude);
}

RefScore eta_lf(const RVector& amplitude, const WaveletConfig& cfg, std::string device_id) {
    RVector x = amplitude;
    if (!x.allFinite() || !normalize_unit_energy(x))
        throw Error(ErrorKind::DegenerateInput, "CSI amplitude has zero or non-finite energy");
    RefScore s;
    s.device_id = std::move(device_id);
    s.energy_before = x.squaredNorm();
    s.energy_after = lowpass_reconstruct(x, cfg).squaredNorm();
    s.eta_lf = s.energy_after / s.energy_before;
    return s;
}

RVector csi_amplitude(const FieldSpectrum& lltf) {
    if (lltf.field != Field::LLTF) throw Error(ErrorKind::DegenerateInput, "CSI needs an L-LTF spectrum");
    static const CVector x_l = ideal_symbol_spectrum(Field::LLTF);
    const auto& tones = occupied_tones(Field::LLTF);
    RVector out(static_cast<Index>(tones.size()));
    for (std::size_t i = 0; i < tones.size(); ++i) {
        const int b = tone_to_bin(tones[i]);
        out[static_cast<Index>(i)] = std::abs(lltf.bins[b] / x_l[b]);
    }
    return out;
}

std::vector<RefScore> rank_references(const std::vector<Candidate>& candidates, const WaveletConfig& cfg) {
    if (candidates.empty()) throw Error(ErrorKind::EmptyCandidates, "no reference candidates");
    std::vector<RefScore> scores;
    scores.reserve(candidates.size());
    for (const auto& [id, csi] : candidates) scores.push_back(eta_lf(csi, cfg, id));
    std::stable_sort(scores.begin(), scores.end(),
                     [](const RefScore& a, const RefScore& b) { return a.eta_lf > b.eta_lf; });
    return scores;
}

std::string select_reference(const std::vector<Candidate>& candidates, const WaveletConfig& cfg) {
    return rank_references(candidates, cfg).front().device_id;
}

}  // namespace divrff

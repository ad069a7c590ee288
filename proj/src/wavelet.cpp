// SPDX-License-Identifier: Apache-2.0

#include "divrff/wavelet.hpp"

#include "divrff/error.hpp"

namespace divrff::wavelet {
namespace {

// Half-point symmetric extension: ... x1 x0 | x0 x1 ... x_{n-1} | x_{n-1} x_{n-2} ...
Index reflect(Index i, Index n) {
    const Index period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

}  // namespace

const std::array<double, kDb4Length>& db4_scaling() {
    static const std::array<double, kDb4Length> h = {
        0.2303778133088965,   0.7148465705529157,  0.6308807679298589,  -0.027983769416859854,
        -0.18703481171909309, 0.030841381835560764, 0.0328830116668852, -0.010597401785069032,
    };
    return h;
}

const FilterBank& db4() {
    static const FilterBank bank = [] {
        const auto& h = db4_scaling();
        constexpr int f = kDb4Length;
        FilterBank b{};
        for (int k = 0; k < f; ++k) {
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            b.rec_lo[k] = h[k];
            b.dec_lo[k] = h[f - 1 - k];
            b.rec_hi[k] = sign * h[f - 1 - k];
            b.dec_hi[k] = ((f - 1 - k) % 2 == 0 ? 1.0 : -1.0) * h[k];
        }
        return b;
    }();
    return bank;
}

void dwt(const RVector& x, const FilterBank& bank, RVector& approx, RVector& detail) {
    const Index n = x.size();
    if (n < 1) throw Error(ErrorKind::Length, "empty input to dwt");
    constexpr Index f = kDb4Length;
    const Index out_len = (n + f - 1) / 2;
    approx.resize(out_len);
    detail.resize(out_len);
    for (Index o = 0; o < out_len; ++o) {
        const Index i = 2 * o + 1;
        double a = 0.0, d = 0.0;
        for (Index j = 0; j < f; ++j) {
            const double v = x[reflect(i - j, n)];
            a += bank.dec_lo[static_cast<std::size_t>(j)] * v;
            d += bank.dec_hi[static_cast<std::size_t>(j)] * v;
        }
        approx[o] = a;
        detail[o] = d;
    }
}

RVector idwt(const RVector& approx, const RVector& detail, const FilterBank& bank) {
    if (approx.size() != detail.size()) throw Error(ErrorKind::Length, "idwt band length mismatch");
    constexpr Index f = kDb4Length;
    const Index n = approx.size();
    const Index out_len = 2 * n - f + 2;
    if (out_len < 1) throw Error(ErrorKind::Length, "idwt input too short");
    RVector out = RVector::Zero(out_len);
    for (Index o = 0; o < out_len; ++o) {
        double acc = 0.0;
        for (Index k = 0; k < n; ++k) {
            const Index t = o + f - 2 - 2 * k;
            if (t < 0) break;
            if (t >= f) continue;
            acc += approx[k] * bank.rec_lo[static_cast<std::size_t>(t)] +
                   detail[k] * bank.rec_hi[static_cast<std::size_t>(t)];
        }
        out[o] = acc;
    }
    return out;
}

std::vector<RVector> wavedec(const RVector& x, int levels, const FilterBank& bank) {
    if (levels < 1) throw Error(ErrorKind::Length, "wavedec needs at least one level");
    std::vector<RVector> details;
    RVector a = x;
    for (int l = 0; l < levels; ++l) {
        if (a.size() < 2) throw Error(ErrorKind::Length, "input too short for the requested levels");
        RVector next, d;
        dwt(a, bank, next, d);
        details.push_back(std::move(d));
        a = std::move(next);
    }
    std::vector<RVector> out;
    out.reserve(details.size() + 1);
    out.push_back(std::move(a));
    for (auto it = details.rbegin(); it != details.rend(); ++it) out.push_back(std::move(*it));
    return out;
}

RVector waverec(const std::vector<RVector>& coeffs, const FilterBank& bank) {
    if (coeffs.size() < 2) throw Error(ErrorKind::Length, "waverec needs approximation and detail bands");
    RVector a = coeffs.front();
    for (std::size_t i = 1; i < coeffs.size(); ++i) {
        const RVector& d = coeffs[i];
        if (a.size() == d.size() + 1) a.conservativeResize(d.size());
        a = idwt(a, d, bank);
    }
    return a;
}

}  // namespace divrff::wavelet

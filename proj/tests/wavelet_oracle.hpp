#pragma once

// Independent db4 reference built from the published PyWavelets filter:
// explicit symmetric padding, full convolution and decimation.

#include "divrff/types.hpp"

#include <Eigen/QR>

#include <array>
#include <vector>

namespace oracle {

// db4 decomposition low-pass as published by PyWavelets 1.8.
inline constexpr std::array<double, 8> kPywtDecLo = {-0.010597401785069032, 0.032883011666885197, 0.030841381835560764,
                                          -0.18703481171909309,  -0.027983769416859854, 0.63088076792985892,
                                          0.71484657055291567,   0.23037781330889651};

// Oracle bank built only from the published decomposition low-pass.
struct OracleBank {
    std::vector<double> dec_lo, dec_hi, rec_lo, rec_hi;
};

inline OracleBank oracle_bank() {
    OracleBank b;
    const int f = 8;
    for (int k = 0; k < f; ++k) {
        b.dec_lo.push_back(kPywtDecLo[k]);
        b.rec_lo.push_back(kPywtDecLo[f - 1 - k]);
        // Quadrature mirror: alternate the signs of the decomposition low-pass.
        b.rec_hi.push_back((k % 2 ? -1.0 : 1.0) * kPywtDecLo[k]);
    }
    // dec_hi is the time reverse of rec_hi.
    for (int k = 0; k < f; ++k) b.dec_hi.push_back(b.rec_hi[f - 1 - k]);
    return b;
}

inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

// Half-point symmetric padding by p on each side (x[p-1] ... x[0] x ... x[n-1] ... ).
inline std::vector<double> pad_symmetric(const std::vector<double>& x, int p) {
    const int n = static_cast<int>(x.size());
    std::vector<double> out;
    for (int i = -p; i < n + p; ++i) {
        int j = i;
        while (j < 0 || j >= n) j = j < 0 ? -j - 1 : 2 * n - j - 1;
        out.push_back(x[static_cast<std::size_t>(j)]);
    }
    return out;
}

inline void oracle_dwt(const std::vector<double>& x, const OracleBank& b, std::vector<double>& a, std::vector<double>& d) {
    const auto xp = pad_symmetric(x, 7);
    const auto lo = convolve(xp, b.dec_lo), hi = convolve(xp, b.dec_hi);
    const std::size_t n = (x.size() + 7) / 2;
    a.assign(n, 0.0);
    d.assign(n, 0.0);
    for (std::size_t o = 0; o < n; ++o) {
        a[o] = lo[8 + 2 * o];
        d[o] = hi[8 + 2 * o];
    }
}

inline std::vector<double> oracle_idwt(const std::vector<double>& a, const std::vector<double>& d, const OracleBank& b) {
    std::vector<double> ua(2 * a.size(), 0.0), ud(2 * d.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ua[2 * i] = a[i];
        ud[2 * i] = d[i];
    }
    const auto ya = convolve(ua, b.rec_lo), yd = convolve(ud, b.rec_hi);
    const std::size_t len = 2 * a.size() - 6;
    std::vector<double> out(len);
    for (std::size_t i = 0; i < len; ++i) out[i] = ya[6 + i] + yd[6 + i];
    return out;
}

// Four-level low-frequency reconstruction with details zeroed, oracle path.
inline std::vector<double> oracle_zero_details(const std::vector<double>& x, const OracleBank& b) {
    std::vector<std::vector<double>> details;
    std::vector<double> a = x, d;
    for (int l = 0; l < 4; ++l) {
        std::vector<double> na;
        oracle_dwt(a, b, na, d);
        details.push_back(d);
        a = na;
    }
    for (int l = 3; l >= 0; --l) {
        std::vector<double> zeros(details[static_cast<std::size_t>(l)].size(), 0.0);
        if (a.size() == zeros.size() + 1) a.pop_back();
        a = oracle_idwt(a, zeros, b);
    }
    a.resize(x.size());
    return a;
}

// Least-squares projection onto the span of the coarse synthesis functions.
inline divrff::RVector oracle_projection(const divrff::RVector& x, const OracleBank& b) {
    std::vector<double> xv(x.data(), x.data() + x.size());
    std::vector<std::vector<double>> details;
    std::vector<double> a = xv, d;
    for (int l = 0; l < 4; ++l) {
        std::vector<double> na;
        oracle_dwt(a, b, na, d);
        details.push_back(d);
        a = na;
    }
    const std::size_t coarse = a.size();
    Eigen::MatrixXd basis(x.size(), static_cast<divrff::Index>(coarse));
    for (std::size_t c = 0; c < coarse; ++c) {
        std::vector<double> e(coarse, 0.0);
        e[c] = 1.0;
        for (int l = 3; l >= 0; --l) {
            std::vector<double> zeros(details[static_cast<std::size_t>(l)].size(), 0.0);
            if (e.size() == zeros.size() + 1) e.pop_back();
            e = oracle_idwt(e, zeros, b);
        }
        for (divrff::Index i = 0; i < x.size(); ++i)
            basis(i, static_cast<divrff::Index>(c)) = e[static_cast<std::size_t>(i)];
    }
    const divrff::RVector coef = basis.colPivHouseholderQr().solve(x);
    return basis * coef;
}

}  // namespace oracle

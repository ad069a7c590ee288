#pragma once

#include "divrff/types.hpp"

#include <array>
#include <vector>

namespace divrff::wavelet {

inline constexpr int kDb4Length = 8;

/// Daubechies order-4 scaling (synthesis low-pass) filter, sum = sqrt(2).
const std::array<double, kDb4Length>& db4_scaling();

/// Analysis/synthesis quadrature-mirror bank derived from the scaling filter.
struct FilterBank {
    std::array<double, kDb4Length> dec_lo, dec_hi, rec_lo, rec_hi;
};
const FilterBank& db4();

/// One analysis step with half-point symmetric extension. Returns
/// floor((n + F - 1) / 2) approximation and detail coefficients.
void dwt(const RVector& x, const FilterBank& bank, RVector& approx, RVector& detail);

/// One synthesis step; the output has 2 * len - F + 2 samples.
RVector idwt(const RVector& approx, const RVector& detail, const FilterBank& bank);

/// Multi-level analysis: {cA_L, cD_L, ..., cD_1}.
std::vector<RVector> wavedec(const RVector& x, int levels, const FilterBank& bank);

/// Inverse of wavedec. Trims an approximation that is one longer than the
/// matching detail band.
RVector waverec(const std::vector<RVector>& coeffs, const FilterBank& bank);

}  // namespace divrff::wavelet

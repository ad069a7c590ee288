#pragma once

#include "divrff/types.hpp"

#include <optional>

namespace divrff {

/// Window-sum energy detector. `squared` switches the per-sample term from
/// |y| (as written in the detector equation) to |y|^2.
struct DetectionConfig {
    Index window_w = 80;
    double threshold_t = 1.0;
    bool squared = false;

    void validate() const;
};

/// All indices are 0-based sample positions in the capture.
struct SyncResult {
    Index coarse_start_n0 = 0;
    Index lltf_start_k0 = 0;
    Index frame_start_n1 = 0;
    Index search_len_k = 0;
    double peak_to_median = 0.0;
    /// Correlation peak before first-path refinement; equals lltf_start_k0
    /// when refinement is off or finds no earlier path.
    Index correlation_peak = 0;
};

struct CfoEstimate {
    double coarse_hz = 0.0;
    double fine_hz = 0.0;
    double total_hz = 0.0;
    int symbol_len_d = 16;
    int start_offset_ns = 8;
    double sample_period = kSamplePeriod;
};

/// Returns n0 = (k-1) W for the first window whose summed magnitude exceeds
/// T. Throws Error(NotDetected).
Index detect_signal(const ComplexSignal& y, const DetectionConfig& cfg);

/// Threshold from the window sum over the first W samples. `factor` is a
/// power ratio: the squared detector multiplies by it, the magnitude detector
/// by its square root. Floored at a tiny positive value for noiseless captures.
double noise_floor_threshold(const ComplexSignal& y, Index window_w, double factor = 6.0,
                             bool squared = false);

struct SyncConfig {
    Index search_len = 400;
    /// Correlation is accumulated coherently over segments of this many
    /// samples and the segment magnitudes are summed. 160 gives a fully
    /// coherent correlation against the whole L-LTF; shorter segments
    /// tolerate residual CFO and keep noise-only peak-to-median ratios low.
    Index segment_len = 32;
    double min_peak_to_median = 3.0;
    bool check_peak = true;
    /// Under multipath the correlation peaks on the strongest path. The
    /// refinement moves k0 back to the earliest impulse-response tap within
    /// `first_path_span` samples whose power reaches `first_path_fraction`
    /// of the strongest.
    bool first_path = true;
    double first_path_fraction = 0.1;
    Index first_path_span = 16;
};

/// Correlates against the ideal 160-sample L-LTF over lags k in [0, K)
/// after n0 and returns k0 (L-LTF start) and n1 = k0 - 160.
/// Throws Error(SyncFailed) on a weak or out-of-range peak.
SyncResult synchronize(const ComplexSignal& y, Index n0, const SyncConfig& cfg = {});

/// Impulse response over the L-LTF long symbols assuming the L-LTF starts
/// at `k0`; returns the shift (<= 0) to the earliest significant tap.
Index first_path_shift(const ComplexSignal& y, Index k0, const SyncConfig& cfg = {});

/// Lag-16 autocorrelation over eight short symbols starting at n1 + ns.
/// Throws Error(EstimationFailed) on a zero-energy window.
double estimate_cfo_coarse(const ComplexSignal& y, Index n1, int start_offset_ns = 8);

/// Lag-64 autocorrelation over 64 samples starting 16 samples before LLTF1.
/// Expects coarse compensation already applied.
double estimate_cfo_fine(const ComplexSignal& y, Index n1);

/// y(n) exp(-j 2 pi f (n - origin) Ts).
ComplexSignal compensate_cfo(const ComplexSignal& y, double f_hat, Index origin = 0);

/// Fewest idle samples `estimate_idle_dc` will average.
inline constexpr Index kMinIdleSamples = 16;

/// Mean of y[0, n0 - guard), where n0 is the detection index; nullopt when
/// fewer than kMinIdleSamples samples are available.
std::optional<Complex> estimate_idle_dc(const ComplexSignal& y, Index n0, Index guard);

struct PreprocessConfig {
    Index window_w = 80;
    double threshold_factor = 6.0;
    /// Overrides the noise-floor rule when set.
    std::optional<double> threshold_t;
    bool squared_energy = false;
    SyncConfig sync{};
    int cfo_start_offset_ns = 8;
    bool fine_cfo = true;
    /// Subtract the mean of the idle samples ahead of the detected frame
    /// before any estimation. Skipped when too few idle samples exist.
    bool remove_dc = true;
};

struct PreprocessResult {
    /// Removed receiver DC; zero when removal was off or skipped.
    Complex dc_offset{0.0, 0.0};
    SyncResult sync;
    CfoEstimate cfo;
    /// Capture with the total CFO removed, phase referenced to the frame start.
    ComplexSignal compensated;
};

/// Detection -> idle DC removal -> CFO acquisition on the L-STF plateau -> synchronization on
/// the derotated capture -> coarse CFO -> fine CFO -> compensation.
PreprocessResult preprocess(const ComplexSignal& y, const PreprocessConfig& cfg = {});

}  // namespace divrff

#pragma once

#include "divrff/accuracy.hpp"
#include "divrff/channel.hpp"
#include "divrff/config.hpp"
#include "divrff/dataset_io.hpp"
#include "divrff/features.hpp"
#include "divrff/preprocess.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace divrff {

/// Transmitter impairments on an HT-MF preamble, zero padding, channel plus
/// AWGN, gain normalization to unit power over the frame, then receiver
/// impairments. The frame starts at sample `lead`.
ComplexSignal simulate_capture(const DeviceProfile& tx, const DeviceProfile& rx, const ChannelRealization& channel,
                               Index lead, Index tail);

/// Field spectra of one preprocessed capture.
struct CaptureSpectra {
    FieldSpectrum lstf;
    FieldSpectrum lltf;
    std::optional<FieldSpectrum> htltf;
    SyncResult sync;
    CfoEstimate cfo;
};

/// Detection, sync, CFO compensation and field transforms. FFT windows are
/// taken `backoff` samples before their nominal positions.
CaptureSpectra analyze_capture(const ComplexSignal& y, const PreprocessConfig& cfg = {}, Index backoff = 0);

/// Every feature of one frame that the requested methods need. Missing
/// entries failed extraction; `error` keeps the first failure.
struct FrameFeatures {
    std::optional<FeatureVector> rd_stf;
    std::optional<FeatureVector> rd_ltf;
    std::optional<FeatureVector> hl;
    std::optional<FeatureVector> dv;
    std::optional<std::string> error;

    bool has(Method m) const;
};

/// `model` is the same receiver's capture of the reference device and is
/// required for RD.
FrameFeatures extract_frame_features(const CaptureSpectra& frame, const CaptureSpectra* model,
                                     const std::vector<Method>& methods, bool dv_compensate = true);

struct ExperimentResult {
    AccuracyMatrix matrix;
    /// Per FeatureVector extractor; filled when collection is requested.
    std::map<std::string, std::vector<io::FeatureRow>> features;
    /// Frames that failed preprocessing or extraction, keyed by
    /// "<snr>/<method>/<receiver>".
    std::map<std::string, std::size_t> dropped;
    std::map<std::string, std::size_t> attempted;
};

/// Cross-receiver train/test grid. Deterministic given cfg.master_seed.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool collect_features = false);

struct StabilityStats {
    std::string extractor;
    double snr_db = 0.0;
    /// Mean cosine similarity over all same-device pairs.
    double mean_all_pairs = 0.0;
    /// Mean over same-device pairs captured by different receivers.
    double mean_cross_receiver = 0.0;
    /// Same quantities with mean-removed (Pearson) cosine.
    double centered_all_pairs = 0.0;
    double centered_cross_receiver = 0.0;
    double min_similarity = 1.0;
    /// Largest per-entry difference between same-device features.
    double max_abs_deviation = 0.0;
    std::size_t pairs = 0;
    std::size_t samples = 0;
    std::size_t dropped = 0;
};

/// Per device, frames_per_device trials cycling through the receivers, each
/// with a fresh channel draw and noise.
std::vector<StabilityStats> run_feature_stability(const ExperimentConfig& cfg);

struct ReferenceSweepRow {
    std::string candidate;
    double eta_lf = 0.0;
    double mean_accuracy = 0.0;
};

struct ReferenceSweep {
    std::vector<ReferenceSweepRow> rows;
    double pearson_r = 0.0;
    double p_value = 1.0;
};

/// Two-sided Pearson test; returns (r, p). Fewer than three points is an
/// error; a constant series gives (0, 1).
std::pair<double, double> pearson_test(const std::vector<double>& x, const std::vector<double>& y);

/// RD accuracy for each candidate reference against its eta_lf measured on
/// the first training receiver.
ReferenceSweep run_reference_sweep(const ExperimentConfig& cfg);

/// Runs the analyses the configuration lists and renders the report.
/// Byte-identical for identical configurations.
std::string run_bench(const ExperimentConfig& cfg, ExperimentResult* classification = nullptr);

std::string report_json(const ExperimentConfig& cfg, const ExperimentResult* classification,
                        const std::vector<StabilityStats>* stability, const ReferenceSweep* sweep);

}  // namespace divrff

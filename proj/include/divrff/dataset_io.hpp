#pragma once

#include "divrff/accuracy.hpp"
#include "divrff/features.hpp"
#include "divrff/refselect.hpp"
#include "divrff/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace divrff::io {

namespace fs = std::filesystem;

enum class SampleFormat { Cf32, Ci16 };

/// Sidecar contents. Labels are optional provenance for simulated captures.
struct IqMetadata {
    SampleFormat format = SampleFormat::Cf32;
    double sample_rate = kSampleRate;
    double center_freq_hz = 0.0;
    /// Full-scale value for Ci16: sample = int16 / scale.
    double scale = 32768.0;
    std::optional<PreambleFormat> preamble;
    std::optional<std::string> device;
    std::optional<std::string> receiver;
    std::optional<std::string> channel_scenario;
    std::optional<long long> trial;
    std::optional<double> snr_db;
};

/// `capture.cf32` pairs with `capture.json`.
fs::path sidecar_path(const fs::path& data_path);

/// Writes interleaved little-endian float32 I/Q plus the sidecar.
void write_iq(const fs::path& path, const ComplexSignal& signal, const IqMetadata& meta = {});

/// Reads a capture in the sidecar's sample format. Throws Error(Io) with the
/// byte offset for truncated pairs and non-finite samples.
ComplexSignal read_iq(const fs::path& path, IqMetadata* meta = nullptr);

/// Interleaved little-endian int16 I/Q divided by `scale`, no sidecar needed.
ComplexSignal read_iq_int16(const fs::path& path, double scale, double sample_rate = kSampleRate);

IqMetadata read_sidecar(const fs::path& sidecar);

struct FeatureRow {
    FeatureVector feature;
    std::string device;
    std::string receiver;
    std::string channel_scenario;
    long long trial = 0;
    double snr_db = 0.0;
};

/// CSV: extractor,device,receiver,channel_scenario,trial,snr_db,v0..v{dim-1};
/// 17 significant digits. An empty table gets a header with no v columns.
void write_features(const fs::path& path, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_features(const fs::path& path);

/// Same rows as a JSON array of objects.
void write_features_json(const fs::path& path, const std::vector<FeatureRow>& rows);

/// CSI CSV: device,a0..a{n-1}, one candidate per row.
std::vector<Candidate> read_csi(const fs::path& path);
void write_csi(const fs::path& path, const std::vector<Candidate>& candidates);

/// rank,device,eta_lf,energy_before,energy_after
void write_ref_scores(const fs::path& path, const std::vector<RefScore>& scores);

/// extractor,snr_db,train_set,test_receiver,mean,std,repeats,frames_tested,frames_dropped,drop_rate
void write_accuracy(const fs::path& path, const AccuracyMatrix& matrix);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Shortest decimal text that parses back to the same double ("inf", "-inf", "nan").
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace divrff::io

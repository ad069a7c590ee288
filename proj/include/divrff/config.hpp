#pragma once

#include "divrff/channel.hpp"
#include "divrff/classify.hpp"
#include "divrff/impairments.hpp"
#include "divrff/preprocess.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace divrff {

/// Feature families a run can request. RD fuses its L-STF and L-LTF branches.
enum class Method { RD, HL, DV };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct ChannelConfig {
    std::string scenario = "flat";
    /// Overrides the preset's tap profile for selective scenarios.
    std::optional<SelectiveParams> params;

    ScenarioPreset preset() const;
};

/// Receivers used together to train one model; `name` labels its grid row.
struct TrainSet {
    std::string name;
    std::vector<std::string> receivers;
};

struct ExperimentConfig {
    std::vector<DeviceProfile> devices;
    std::vector<DeviceProfile> receivers;
    std::optional<std::string> reference_device;
    ChannelConfig channel;
    std::vector<double> snr_db{30.0};
    int frames_per_device = 200;
    std::vector<Method> extractors{Method::RD, Method::HL, Method::DV};
    std::vector<TrainSet> train_receivers;
    std::vector<std::string> test_receivers;
    TrainConfig classifier;
    int repeats = 5;
    std::uint64_t master_seed = 0;

    /// Fraction of each device's frames indices in the training pool.
    double train_fraction = 0.8;
    /// Strip DC, IQ imbalance, PA and CFO from every profile.
    bool linear_impairments = false;
    /// Give each transmitter an HT-LTF band tilt distinct from its L-LTF response.
    bool field_distinct = true;
    /// DV divides out the known sequences.
    bool dv_compensate = true;
    /// Zero padding around each frame: a uniform lead in [pad_min, pad_max]
    /// and a fixed tail.
    Index pad_min = 160;
    Index pad_max = 320;
    Index pad_tail = 160;
    /// FFT windows start this many samples early, inside the cyclic prefix.
    Index timing_backoff = 3;
    PreprocessConfig preprocess;
    /// Candidates for a reference sweep, by device id.
    std::vector<std::string> reference_candidates;
    /// Analyses `bench` runs: any of "classification", "stability", "reference_sweep".
    std::vector<std::string> analyses{"classification"};

    /// Throws Error(Config).
    void validate() const;
    bool wants(Method m) const;
    const DeviceProfile& device(const std::string& id) const;
    const DeviceProfile& receiver(const std::string& id) const;
};

/// Parses a JSON document. Devices and receivers are either integer seeds
/// (sampled profiles), `{"id", "seed"}` objects, or explicit profiles.
/// Throws Error(Config) on any violation.
ExperimentConfig parse_experiment_config(const std::string& json_text);

/// Canonical JSON echo of a resolved configuration.
std::string experiment_config_json(const ExperimentConfig& cfg);

}  // namespace divrff

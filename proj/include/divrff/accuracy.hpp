#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace divrff {

/// One (extractor, train set, test receiver) grid cell aggregated over repeats.
struct AccuracyCell {
    std::string extractor;
    double snr_db = 0.0;
    std::string train_set;
    std::string test_receiver;
    std::vector<double> per_repeat;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t frames_tested = 0;
    std::size_t frames_dropped = 0;

    double drop_rate() const {
        const auto total = frames_tested + frames_dropped;
        return total == 0 ? 0.0 : static_cast<double>(frames_dropped) / static_cast<double>(total);
    }
    /// Fills mean and population stddev from per_repeat.
    void summarize();
};

struct AccuracyMatrix {
    std::vector<AccuracyCell> cells;
    int repeats = 0;

    const AccuracyCell* find(const std::string& extractor, double snr_db, const std::string& train_set,
                             const std::string& test_receiver) const;
};

}  // namespace divrff

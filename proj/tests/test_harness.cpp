#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "divrff/error.hpp"
#include "divrff/harness.hpp"

#include <string>
#include <vector>

using namespace divrff;

namespace {

ErrorKind kind_of(const std::string& text) {
    try {
        parse_experiment_config(text);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;
}

double mean_accuracy(const ExperimentResult& r, const std::string& extractor) {
    double sum = 0.0;
    int n = 0;
    for (const auto& c : r.matrix.cells)
        if (c.extractor == extractor) {
            sum += c.mean;
            ++n;
        }
    REQUIRE(n > 0);
    return sum / n;
}

}  // namespace

TEST_CASE("configuration violations are config errors") {
    const std::string base = R"("devices": {"count": 4}, "receivers": {"count": 2})";
    for (const std::string& bad : std::vector<std::string>{
             std::string("not json"),
             std::string("[1, 2]"),
             std::string(R"({"receivers": {"count": 2}})"),
             "{" + base + R"(, "extractors": ["RD"]})",
             "{" + base + R"(, "reference_device": "tx9", "extractors": ["HL"]})",
             "{" + base + R"(, "extractors": ["XX"]})",
             "{" + base + R"(, "channel": "martian"})",
             "{" + base + R"(, "snr_db": []})",
             "{" + base + R"(, "frames_per_device": 0})",
             "{" + base + R"(, "train_receivers": ["rx7"]})",
             "{" + base + R"(, "timing_backoff": 9})",
             "{" + base + R"(, "analyses": ["dance"]})",
             "{" + base + R"(, "classifier": {"epochs": 0}})",
             R"({"devices": [{"id": "a", "seed": 1}, {"id": "a", "seed": 2}], "receivers": {"count": 1}})",
             R"({"devices": {"count": 1}, "receivers": {"count": 1}})",
         }) {
        CAPTURE(bad);
        CHECK(kind_of(bad) == ErrorKind::Config);
    }
    const auto ok = parse_experiment_config("{" + base + R"(, "extractors": ["HL", "DV"], "snr_db": [30, "inf"]})");
    CHECK(ok.devices.size() == 4);
    CHECK(ok.snr_db.size() == 2);
    CHECK(std::isinf(ok.snr_db[1]));
    CHECK(ok.train_receivers.size() == 2);
}

TEST_CASE("configuration echo re-parses to the same profiles") {
    const auto cfg = parse_experiment_config(R"({"master_seed": 3, "devices": {"count": 3}, "receivers": {"count": 2},
        "reference_device": "tx2", "channel": {"scenario": "NLOS", "tap_count": 5}})");
    const std::string echo = experiment_config_json(cfg);
    const auto again = parse_experiment_config(echo);
    CHECK(experiment_config_json(again) == echo);
    REQUIRE(again.channel.params);
    CHECK(again.channel.params->tap_count == 5);
}

TEST_CASE("distinct devices at 40 dB are separated") {
    const auto cfg = parse_experiment_config(R"({"master_seed": 5, "devices": {"count": 3}, "receivers": {"count": 1},
        "reference_device": "tx2", "channel": "flat", "snr_db": 40, "frames_per_device": 100,
        "extractors": ["RD", "DV"], "repeats": 1})");
    const auto res = run_experiment(cfg);
    CHECK(mean_accuracy(res, "RD") >= 0.95);
    CHECK(mean_accuracy(res, "DV") >= 0.95);
}

TEST_CASE("identical devices are indistinguishable") {
    const auto cfg = parse_experiment_config(R"({"master_seed": 5,
        "devices": [{"id": "a", "seed": 9}, {"id": "b", "seed": 9}, {"id": "c", "seed": 9}, {"id": "d", "seed": 9}],
        "receivers": {"count": 1}, "channel": "flat", "snr_db": 30, "frames_per_device": 100,
        "extractors": ["DV"], "repeats": 3})");
    const double acc = mean_accuracy(run_experiment(cfg), "DV");
    CHECK(std::abs(acc - 0.25) < 0.12);
}

TEST_CASE("bench reports are deterministic per seed") {
    const std::string text = R"({"master_seed": 17, "devices": {"count": 4}, "receivers": {"count": 2},
        "reference_device": "tx3", "snr_db": [25], "frames_per_device": 12, "repeats": 2,
        "analyses": ["classification", "stability"]})";
    const auto cfg = parse_experiment_config(text);
    const std::string a = run_bench(cfg);
    const std::string b = run_bench(parse_experiment_config(text));
    CHECK(a == b);
    CHECK(a.find("\"format\": \"divrff-report\"") != std::string::npos);
    auto other = cfg;
    other.master_seed = 18;
    CHECK(run_bench(other) != a);
}

TEST_CASE("Pearson test") {
    CHECK_THROWS_AS(pearson_test({1, 2}, {3, 4}), Error);
    CHECK_THROWS_AS(pearson_test({1, 2, 3}, {3, 4}), Error);
    const auto [r0, p0] = pearson_test({1, 1, 1, 1}, {1, 2, 3, 4});
    CHECK(r0 == 0.0);
    CHECK(p0 == 1.0);
    const auto [r1, p1] = pearson_test({1, 2, 3, 4}, {2, 4, 6, 8});
    CHECK(r1 == doctest::Approx(1.0));
    CHECK(p1 == doctest::Approx(0.0));
    // r = 0.8 with n = 5: t = 0.8 sqrt(3 / 0.36) = 2.3094, two-sided p = 0.10436.
    const auto [r2, p2] = pearson_test({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5});
    CHECK(r2 == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(p2 == doctest::Approx(0.10436).epsilon(1e-3));
}

TEST_CASE("reference sweep scores every candidate") {
    const auto cfg = parse_experiment_config(R"({"master_seed": 2, "devices": {"count": 5}, "receivers": {"count": 2},
        "reference_device": "tx0", "snr_db": 30, "frames_per_device": 20, "extractors": ["RD"], "repeats": 1,
        "train_receivers": ["rx0"], "test_receivers": ["rx1"], "reference_candidates": ["tx0", "tx1", "tx2"]})");
    const auto sweep = run_reference_sweep(cfg);
    REQUIRE(sweep.rows.size() == 3);
    for (const auto& row : sweep.rows) {
        CHECK(row.eta_lf > 0.0);
        CHECK(row.eta_lf <= 1.0);
        CHECK(row.mean_accuracy >= 0.0);
        CHECK(row.mean_accuracy <= 1.0);
    }
    CHECK(std::abs(sweep.pearson_r) <= 1.0);
    auto few = cfg;
    few.reference_candidates = {"tx0", "tx1"};
    CHECK_THROWS_AS(run_reference_sweep(few), Error);
}

TEST_CASE("feature stability follows the noise level") {
    const auto lin = parse_experiment_config(R"({"master_seed": 4, "devices": {"count": 4}, "receivers": {"count": 3},
        "reference_device": "tx3", "channel": "selective", "snr_db": "inf", "frames_per_device": 6,
        "linear_impairments": true, "extractors": ["RD", "HL"]})");
    for (const auto& s : run_feature_stability(lin)) {
        CAPTURE(s.extractor);
        if (s.extractor == "HL") {
            CHECK(s.mean_cross_receiver > 0.999999);
            CHECK(s.max_abs_deviation < 1e-6);
        }
        CHECK(s.dropped == 0);
    }

    const auto noisy = parse_experiment_config(R"({"master_seed": 4, "devices": {"count": 4}, "receivers": {"count": 3},
        "channel": "flat", "snr_db": [40, 10], "frames_per_device": 12, "extractors": ["DV"]})");
    const auto stats = run_feature_stability(noisy);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].snr_db == 40.0);
    CHECK(stats[1].mean_all_pairs < stats[0].mean_all_pairs);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "divrff/dataset_io.hpp"
#include "support.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <string>

namespace fs = std::filesystem;
using divrff::io::read_text;
using divrff::io::write_text;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(DIVRFF_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

const char* kConfig = R"({"master_seed": 21, "devices": {"count": 4}, "receivers": {"count": 2},
  "reference_device": "tx3", "channel": "flat", "snr_db": 35, "frames_per_device": 12, "repeats": 1,
  "train_receivers": ["rx0"], "test_receivers": ["rx1"], "classifier": {"epochs": 30}})";

}  // namespace

TEST_CASE("usage and configuration errors exit with 2") {
    const auto dir = testutil::scratch_dir("cli_cfg");
    CHECK(run("") == 2);
    CHECK(run("--help") == 0);
    CHECK(run("frobnicate") == 2);
    CHECK(run("bench") == 2);
    CHECK(run("bench --config " + q(dir / "missing.json")) == 2);
    write_text(dir / "bad.json", "{\"devices\": 3");
    CHECK(run("bench --config " + q(dir / "bad.json")) == 2);
    write_text(dir / "cfg.json", kConfig);
    CHECK(run("bench --config " + q(dir / "cfg.json") + " --extractor QQ --out-dir " + q(dir)) == 2);
    CHECK(run("bench --config " + q(dir / "cfg.json") + " --snr-db loud --out-dir " + q(dir)) == 2);
    CHECK(run("extract " + q(dir)) == 2);
}

TEST_CASE("pipeline failures exit with 3") {
    const auto dir = testutil::scratch_dir("cli_pipe");
    CHECK(run("extract --extractor DV " + q(dir / "nothing.cf32") + " --out-dir " + q(dir)) == 3);
    write_text(dir / "empty.csv", "extractor,device,receiver,channel_scenario,trial,snr_db\n");
    CHECK(run("train " + q(dir / "empty.csv") + " --out-dir " + q(dir)) == 3);
    write_text(dir / "csi.csv", "device,a0\n");
    CHECK(run("select-ref " + q(dir / "csi.csv") + " --out-dir " + q(dir)) == 3);
}

TEST_CASE("simulate, extract, train and eval chain together") {
    const auto dir = testutil::scratch_dir("cli_chain");
    write_text(dir / "cfg.json", kConfig);
    const std::string cfg = " --config " + q(dir / "cfg.json") + " --out-dir " + q(dir);
    REQUIRE(run("simulate" + cfg + " --frames 8") == 0);
    CHECK(fs::exists(dir / "iq" / "tx0_rx1_7.cf32"));
    CHECK(fs::exists(dir / "iq" / "tx0_rx1_7.json"));

    REQUIRE(run("extract" + cfg + " --extractor DV " + q(dir / "iq")) == 0);
    const auto dv = divrff::io::read_features(dir / "features_DV.csv");
    CHECK(dv.size() == 4 * 2 * 8);
    REQUIRE(run("train" + cfg + " " + q(dir / "features_DV.csv") + " --receivers rx0") == 0);
    REQUIRE(fs::exists(dir / "model_DV.json"));
    REQUIRE(run("eval --out-dir " + q(dir) + " --model " + q(dir / "model_DV.json") + " --features " +
                q(dir / "features_DV.csv")) == 0);
    CHECK(read_text(dir / "accuracy.csv").find("DV,35,model,rx1,") != std::string::npos);

    REQUIRE(run("extract" + cfg + " --extractor RD " + q(dir / "iq")) == 0);
    const auto stf = divrff::io::read_features(dir / "features_RD_STF.csv");
    CHECK(stf.size() == 3 * 2 * 8);
    for (const auto& row : stf) CHECK(row.device != "tx3");
    REQUIRE(run("train" + cfg + " " + q(dir / "features_RD_STF.csv") + " --receivers rx0") == 0);
    REQUIRE(run("train" + cfg + " " + q(dir / "features_RD_LTF.csv") + " --receivers rx0") == 0);
    REQUIRE(run("eval --out-dir " + q(dir) + " --train-set rx0 --model " + q(dir / "model_RD_STF.json") + " --model " +
                q(dir / "model_RD_LTF.json") + " --features " + q(dir / "features_RD_STF.csv") + " --features " +
                q(dir / "features_RD_LTF.csv")) == 0);
    CHECK(read_text(dir / "accuracy.csv").find("RD,35,rx0,rx1,") != std::string::npos);
}

TEST_CASE("select-ref ranks by low-frequency energy ratio") {
    const auto dir = testutil::scratch_dir("cli_ref");
    std::string csv = "device";
    for (int i = 0; i < 52; ++i) csv += ",a" + std::to_string(i);
    csv += "\nsmooth";
    for (int i = 0; i < 52; ++i) csv += ",1";
    csv += "\nrough";
    for (int i = 0; i < 52; ++i) csv += (i % 2 ? ",0.2" : ",1.8");
    csv += "\n";
    write_text(dir / "csi.csv", csv);
    REQUIRE(run("select-ref " + q(dir / "csi.csv") + " --out-dir " + q(dir)) == 0);
    const std::string scores = read_text(dir / "ref_scores.csv");
    CHECK(scores.rfind("rank,device,eta_lf,energy_before,energy_after\n1,smooth,", 0) == 0);
    CHECK(run("select-ref " + q(dir / "csi.csv") + " --lowpass median --out-dir " + q(dir)) == 2);
}

TEST_CASE("bench writes identical reports for the same seed") {
    const auto dir = testutil::scratch_dir("cli_bench");
    write_text(dir / "cfg.json", kConfig);
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    REQUIRE(run("bench --config " + q(dir / "cfg.json") + " --out-dir " + q(dir / "a")) == 0);
    REQUIRE(run("bench --config " + q(dir / "cfg.json") + " --out-dir " + q(dir / "b")) == 0);
    CHECK(read_text(dir / "a" / "report.json") == read_text(dir / "b" / "report.json"));
    CHECK(read_text(dir / "a" / "accuracy.csv") == read_text(dir / "b" / "accuracy.csv"));
    REQUIRE(run("bench --config " + q(dir / "cfg.json") + " --seed 22 --out-dir " + q(dir / "b")) == 0);
    CHECK(read_text(dir / "a" / "report.json") != read_text(dir / "b" / "report.json"));
}

// SPDX-License-Identifier: Apache-2.0
//
// divrff: simulate | extract | select-ref | train | eval | bench

#include "divrff/classify.hpp"
#include "divrff/config.hpp"
#include "divrff/dataset_io.hpp"
#include "divrff/error.hpp"
#include "divrff/harness.hpp"
#include "divrff/random.hpp"
#include "divrff/refselect.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace divrff;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<std::string> extractor;
    std::optional<std::string> snr_db;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
    auto* opt = app->add_option("--config", c.config, "Experiment configuration JSON");
    if (config_required) opt->required();
    app->add_option("--seed", c.seed, "Master seed override");
    app->add_option("--out-dir", c.out_dir, "Output directory");
    app->add_option("--extractor", c.extractor, "RD, HL or DV (RD_STF / RD_LTF for single branches)");
    app->add_option("--snr-db", c.snr_db, "SNR override in dB, or inf");
}

ExperimentConfig load_config(const Common& c) {
    std::string text;
    try {
        text = io::read_text(c.config);
    } catch (const Error&) {
        throw Error(ErrorKind::Config, "cannot read config " + c.config);
    }
    ExperimentConfig cfg = parse_experiment_config(text);
    if (c.seed) {
        // Re-resolve so sampled profiles follow the new seed.
        auto j = nlohmann::json::parse(text);
        j["master_seed"] = *c.seed;
        cfg = parse_experiment_config(j.dump());
    }
    if (c.snr_db) {
        try {
            cfg.snr_db = {io::parse_double(*c.snr_db)};
        } catch (const Error&) {
            throw Error(ErrorKind::Config, "--snr-db expects a number or inf, got '" + *c.snr_db + "'");
        }
    }
    if (c.extractor) cfg.extractors = {method_from_string(*c.extractor)};
    cfg.validate();
    return cfg;
}

std::vector<fs::path> collect_iq(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            for (const auto& e : fs::directory_iterator(p))
                if (e.path().extension() == ".cf32" || e.path().extension() == ".ci16") out.push_back(e.path());
        } else {
            out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_simulate(const Common& c, int frames_override) {
    const ExperimentConfig cfg = load_config(c);
    const ScenarioPreset preset = cfg.channel.preset();
    const int frames = frames_override > 0 ? frames_override : cfg.frames_per_device;
    const double snr = cfg.snr_db.front();
    const fs::path dir = fs::path(c.out_dir) / "iq";
    std::size_t written = 0;
    for (std::size_t d = 0; d < cfg.devices.size(); ++d)
        for (std::size_t r = 0; r < cfg.receivers.size(); ++r) {
            const auto link = derive_seed(cfg.master_seed, {2, d, r});
            for (int f = 0; f < frames; ++f) {
                const auto seed = derive_seed(cfg.master_seed, {1, d, r, static_cast<std::uint64_t>(f)});
                ChannelRealization ch =
                    sample_channel(preset.kind, snr, preset.per_frame ? derive_seed(seed, {13}) : link, preset.params);
                ch.seed = derive_seed(seed, {12});
                Rng rng(derive_seed(seed, {11}));
                const Index lead = std::uniform_int_distribution<Index>(cfg.pad_min, cfg.pad_max)(rng);
                const ComplexSignal y = simulate_capture(cfg.devices[d], cfg.receivers[r], ch, lead, cfg.pad_tail);
                io::IqMetadata meta;
                meta.preamble = PreambleFormat::HTMF;
                meta.device = cfg.devices[d].device_id;
                meta.receiver = cfg.receivers[r].device_id;
                meta.channel_scenario = cfg.channel.scenario;
                meta.trial = f;
                meta.snr_db = snr;
                io::write_iq(dir / (cfg.devices[d].device_id + "_" + cfg.receivers[r].device_id + "_" +
                                    std::to_string(f) + ".cf32"),
                             y, meta);
                ++written;
            }
        }
    std::cout << "wrote " << written << " captures to " << dir.string() << "\n";
    return 0;
}

int cmd_extract(const Common& c, const std::vector<std::string>& inputs, std::optional<std::string> reference) {
    ExperimentConfig cfg;
    PreprocessConfig pre;
    Index backoff = ExperimentConfig{}.timing_backoff;
    bool dv_compensate = true;
    if (!c.config.empty()) {
        cfg = load_config(c);
        pre = cfg.preprocess;
        backoff = cfg.timing_backoff;
        dv_compensate = cfg.dv_compensate;
        if (!reference) reference = cfg.reference_device;
    }
    if (!c.extractor) throw Error(ErrorKind::Config, "extract needs --extractor");
    const Method method = method_from_string(*c.extractor);
    if (method == Method::RD && !reference) throw Error(ErrorKind::Config, "RD extraction needs --reference");

    struct Loaded {
        io::IqMetadata meta;
        CaptureSpectra spectra;
    };
    std::vector<Loaded> caps;
    std::size_t failed = 0;
    for (const auto& path : collect_iq(inputs)) {
        io::IqMetadata meta;
        const ComplexSignal y = io::read_iq(path, &meta);
        try {
            caps.push_back({meta, analyze_capture(y, pre, backoff)});
        } catch (const Error& e) {
            std::cerr << path.string() << ": dropped (" << e.what() << ")\n";
            ++failed;
        }
    }
    std::map<std::string, const CaptureSpectra*> models;
    if (method == Method::RD)
        for (const auto& cap : caps)
            if (cap.meta.device == reference && !models.count(cap.meta.receiver.value_or("")))
                models[cap.meta.receiver.value_or("")] = &cap.spectra;

    std::map<std::string, std::vector<io::FeatureRow>> tables;
    for (const auto& cap : caps) {
        if (method == Method::RD && cap.meta.device == reference) continue;
        const std::string rx = cap.meta.receiver.value_or("");
        const auto it = models.find(rx);
        const FrameFeatures ff = extract_frame_features(cap.spectra, it == models.end() ? nullptr : it->second,
                                                        {method}, dv_compensate);
        if (!ff.has(method)) {
            ++failed;
            continue;
        }
        auto add = [&](const FeatureVector& fv) {
            io::FeatureRow row;
            row.feature = fv;
            row.device = cap.meta.device.value_or("unknown");
            row.receiver = rx;
            row.channel_scenario = cap.meta.channel_scenario.value_or("");
            row.trial = cap.meta.trial.value_or(0);
            row.snr_db = cap.meta.snr_db.value_or(INFINITY);
            tables[std::string(to_string(fv.extractor))].push_back(std::move(row));
        };
        if (ff.rd_stf) add(*ff.rd_stf);
        if (ff.rd_ltf) add(*ff.rd_ltf);
        if (ff.hl) add(*ff.hl);
        if (ff.dv) add(*ff.dv);
    }
    for (const auto& [name, rows] : tables) {
        io::write_features(fs::path(c.out_dir) / ("features_" + name + ".csv"), rows);
        io::write_features_json(fs::path(c.out_dir) / ("features_" + name + ".json"), rows);
        std::cout << name << ": " << rows.size() << " rows\n";
    }
    std::cout << "dropped " << failed << " captures\n";
    return 0;
}

int cmd_select_ref(const Common& c, const std::string& csi_path, const std::string& method) {
    WaveletConfig wc;
    if (method == "zero-details") wc.method = LowpassMethod::ZeroDetails;
    else if (method != "projection") throw Error(ErrorKind::Config, "--lowpass must be projection or zero-details");
    const auto scores = rank_references(io::read_csi(csi_path), wc);
    io::write_ref_scores(fs::path(c.out_dir) / "ref_scores.csv", scores);
    std::cout << scores.front().device_id << "\n";
    return 0;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool keep_receiver(const std::vector<std::string>& allow, const std::string& rx) {
    return allow.empty() || std::find(allow.begin(), allow.end(), rx) != allow.end();
}

int cmd_train(const Common& c, const std::string& features, const std::string& receivers) {
    TrainConfig tc;
    if (!c.config.empty()) tc = load_config(c).classifier;
    if (c.seed) tc.seed = *c.seed;
    const auto allow = split_list(receivers);
    std::vector<LabeledFeature> data;
    for (auto& row : io::read_features(features))
        if (keep_receiver(allow, row.receiver)) data.push_back({row.feature, row.device});
    if (data.empty()) throw Error(ErrorKind::Train, "no training rows after filtering");
    const SoftmaxModel model = train(data, tc);
    const fs::path out = fs::path(c.out_dir) / ("model_" + std::string(to_string(model.trained_on)) + ".json");
    io::write_text(out, model_to_json(model));
    std::cout << "wrote " << out.string() << " (" << model.num_classes() << " classes, best epoch "
              << model.best_epoch << ")\n";
    return 0;
}

int cmd_eval(const Common& c, const std::vector<std::string>& model_paths, const std::vector<std::string>& feature_paths,
             const std::string& train_set) {
    if (model_paths.empty() || model_paths.size() > 2 || model_paths.size() != feature_paths.size())
        throw Error(ErrorKind::Config, "eval takes one model and table, or two (L-STF and L-LTF) for fusion");
    std::vector<SoftmaxModel> models;
    std::vector<std::vector<io::FeatureRow>> tables;
    for (std::size_t i = 0; i < model_paths.size(); ++i) {
        models.push_back(model_from_json(io::read_text(model_paths[i])));
        tables.push_back(io::read_features(feature_paths[i]));
    }
    const std::string label = models.size() == 2 ? "RD" : std::string(to_string(models[0].trained_on));
    std::map<std::pair<std::string, double>, std::pair<std::size_t, std::size_t>> counts;  // (rx, snr) -> hits, n
    if (models.size() == 1) {
        for (const auto& row : tables[0]) {
            auto& [hit, n] = counts[{row.receiver, row.snr_db}];
            hit += predict_label(models[0], row.feature) == row.device ? 1 : 0;
            ++n;
        }
    } else {
        std::map<std::tuple<std::string, std::string, long long, double>, const io::FeatureRow*> second;
        for (const auto& row : tables[1]) second[{row.device, row.receiver, row.trial, row.snr_db}] = &row;
        for (const auto& row : tables[0]) {
            const auto it = second.find({row.device, row.receiver, row.trial, row.snr_db});
            if (it == second.end()) continue;
            auto& [hit, n] = counts[{row.receiver, row.snr_db}];
            hit += fuse_and_classify(models[0], models[1], row.feature, it->second->feature) == row.device ? 1 : 0;
            ++n;
        }
    }
    if (counts.empty()) throw Error(ErrorKind::Eval, "empty test set");
    AccuracyMatrix m;
    m.repeats = 1;
    for (const auto& [key, hn] : counts) {
        AccuracyCell cell;
        cell.extractor = label;
        cell.snr_db = key.second;
        cell.train_set = train_set;
        cell.test_receiver = key.first;
        cell.per_repeat = {static_cast<double>(hn.first) / static_cast<double>(hn.second)};
        cell.frames_tested = hn.second;
        cell.summarize();
        m.cells.push_back(cell);
        std::cout << key.first << " " << io::format_double(key.second) << " dB: " << cell.mean << "\n";
    }
    io::write_accuracy(fs::path(c.out_dir) / "accuracy.csv", m);
    return 0;
}

int cmd_bench(const Common& c, bool write_features) {
    const ExperimentConfig cfg = load_config(c);
    ExperimentResult cls;
    const std::string report = run_bench(cfg, &cls);
    const fs::path dir(c.out_dir);
    io::write_text(dir / "report.json", report);
    if (!cls.matrix.cells.empty()) io::write_accuracy(dir / "accuracy.csv", cls.matrix);
    if (write_features)
        for (const auto& [name, rows] : cls.features) io::write_features(dir / ("features_" + name + ".csv"), rows);
    std::cout << "wrote " << (dir / "report.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Division-based receiver-agnostic RF fingerprinting"};
    app.require_subcommand(1);

    Common sim_c, ext_c, sel_c, tr_c, ev_c, bench_c;
    int sim_frames = 0;
    auto* sim = app.add_subcommand("simulate", "Generate frames to IQ files");
    add_common(sim, sim_c, true);
    sim->add_option("--frames", sim_frames, "Frames per (device, receiver); defaults to frames_per_device");

    std::vector<std::string> ext_inputs;
    std::optional<std::string> ext_ref;
    auto* ext = app.add_subcommand("extract", "IQ captures to feature tables");
    add_common(ext, ext_c, false);
    ext->add_option("inputs", ext_inputs, "IQ files or directories")->required();
    ext->add_option("--reference", ext_ref, "Reference device id for RD");

    std::string csi_path, lowpass = "projection";
    auto* sel = app.add_subcommand("select-ref", "Rank candidate reference devices by eta_LF");
    add_common(sel, sel_c, false);
    sel->add_option("csi", csi_path, "Candidate CSI CSV")->required();
    sel->add_option("--lowpass", lowpass, "projection or zero-details");

    std::string tr_features, tr_receivers;
    auto* tr = app.add_subcommand("train", "Feature table to model JSON");
    add_common(tr, tr_c, false);
    tr->add_option("features", tr_features, "Feature CSV")->required();
    tr->add_option("--receivers", tr_receivers, "Comma-separated receivers to train on (default all)");

    std::vector<std::string> ev_models, ev_features;
    std::string ev_train_set = "model";
    auto* ev = app.add_subcommand("eval", "Model(s) plus feature table(s) to accuracy CSV");
    add_common(ev, ev_c, false);
    ev->add_option("--model", ev_models, "Model JSON; give two (L-STF, L-LTF) for RD fusion")->required();
    ev->add_option("--features", ev_features, "Feature CSV matching each model")->required();
    ev->add_option("--train-set", ev_train_set, "Row label for the accuracy table");

    bool bench_features = false;
    auto* bench = app.add_subcommand("bench", "Full experiment to report JSON");
    add_common(bench, bench_c, true);
    bench->add_flag("--write-features", bench_features, "Also write per-extractor feature tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(sim_c, sim_frames);
        if (*ext) return cmd_extract(ext_c, ext_inputs, ext_ref);
        if (*sel) return cmd_select_ref(sel_c, csi_path, lowpass);
        if (*tr) return cmd_train(tr_c, tr_features, tr_receivers);
        if (*ev) return cmd_eval(ev_c, ev_models, ev_features, ev_train_set);
        if (*bench) return cmd_bench(bench_c, bench_features);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::Config ? kExitConfig : kExitPipeline;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
    return kExitConfig;
}

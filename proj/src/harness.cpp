// SPDX-License-Identifier: Apache-2.0

#include "divrff/harness.hpp"

#include "divrff/classify.hpp"
#include "divrff/dsp.hpp"
#include "divrff/error.hpp"
#include "divrff/impairments.hpp"
#include "divrff/random.hpp"
#include "divrff/refselect.hpp"
#include "divrff/waveform.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace divrff {
namespace {

using nlohmann::json;

// Seed-path stream tags. A frame's seed is derive_seed(master, {kFrame, snr,
// repeat, device, receiver, frame}); everything else follows the same shape.
enum Stream : std::uint64_t {
    kFrame = 1,
    kLink = 2,
    kModel = 3,
    kSplit = 4,
    kStability = 5,
    kSweep = 6,
    kTrain = 7,
};
enum Leaf : std::uint64_t { kLead = 11, kNoise = 12, kMobile = 13 };

constexpr int kModelAttempts = 4;

using u64 = std::uint64_t;

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

Index draw_lead(const ExperimentConfig& cfg, u64 seed) {
    Rng rng(seed);
    return std::uniform_int_distribution<Index>(cfg.pad_min, cfg.pad_max)(rng);
}

ChannelRealization draw_channel(const ExperimentConfig& cfg, double snr_db, u64 seed) {
    const ScenarioPreset preset = cfg.channel.preset();
    return sample_channel(preset.kind, snr_db, seed, preset.params);
}

// One frame through the full chain. `link_seed` fixes a static channel;
// mobile scenarios redraw from the frame seed.
CaptureSpectra capture_frame(const ExperimentConfig& cfg, const DeviceProfile& tx, const DeviceProfile& rx,
                             double snr_db, u64 link_seed, u64 frame_seed) {
    const bool per_frame = cfg.channel.preset().per_frame;
    ChannelRealization ch = draw_channel(cfg, snr_db, per_frame ? derive_seed(frame_seed, {kMobile}) : link_seed);
    ch.seed = derive_seed(frame_seed, {kNoise});
    const ComplexSignal y = simulate_capture(tx, rx, ch, draw_lead(cfg, derive_seed(frame_seed, {kLead})),
                                             cfg.pad_tail);
    return analyze_capture(y, cfg.preprocess, cfg.timing_backoff);
}

std::string drop_key(double snr, Method m, const std::string& rx) {
    return io::format_double(snr) + "/" + std::string(to_string(m)) + "/" + rx;
}

std::vector<std::size_t> class_devices(const ExperimentConfig& cfg) {
    std::vector<std::size_t> out;
    for (std::size_t d = 0; d < cfg.devices.size(); ++d)
        if (!cfg.reference_device || cfg.devices[d].device_id != *cfg.reference_device) out.push_back(d);
    return out;
}

std::size_t receiver_index(const ExperimentConfig& cfg, const std::string& id) {
    for (std::size_t i = 0; i < cfg.receivers.size(); ++i)
        if (cfg.receivers[i].device_id == id) return i;
    throw Error(ErrorKind::Config, "unknown receiver '" + id + "'");
}

std::size_t device_index(const ExperimentConfig& cfg, const std::string& id) {
    for (std::size_t i = 0; i < cfg.devices.size(); ++i)
        if (cfg.devices[i].device_id == id) return i;
    throw Error(ErrorKind::Config, "unknown device '" + id + "'");
}

// Captures the reference device through `rx`, retrying with fresh frame
// seeds when preprocessing fails.
std::optional<CaptureSpectra> capture_model(const ExperimentConfig& cfg, std::size_t rx, double snr_db,
                                            u64 link_seed, u64 base_seed) {
    const DeviceProfile& ref = cfg.device(*cfg.reference_device);
    for (int attempt = 0; attempt < kModelAttempts; ++attempt) {
        try {
            return capture_frame(cfg, ref, cfg.receivers[rx], snr_db, link_seed,
                                 derive_seed(base_seed, {static_cast<u64>(attempt)}));
        } catch (const Error&) {
        }
    }
    return std::nullopt;
}

const FeatureVector* pick(const FrameFeatures& f, Extractor e) {
    const std::optional<FeatureVector>* slot = nullptr;
    switch (e) {
        case Extractor::RD_STF: slot = &f.rd_stf; break;
        case Extractor::RD_LTF: slot = &f.rd_ltf; break;
        case Extractor::HL: slot = &f.hl; break;
        case Extractor::DV: slot = &f.dv; break;
    }
    return slot && *slot ? &**slot : nullptr;
}

std::vector<Extractor> branches(Method m) {
    switch (m) {
        case Method::RD: return {Extractor::RD_STF, Extractor::RD_LTF};
        case Method::HL: return {Extractor::HL};
        case Method::DV: return {Extractor::DV};
    }
    return {};
}

// Features of every (device, receiver, frame) for one snr/repeat.
struct FrameGrid {
    std::size_t devices = 0, receivers = 0, frames = 0;
    std::vector<FrameFeatures> cells;

    FrameFeatures& at(std::size_t d, std::size_t r, std::size_t f) { return cells[(d * receivers + r) * frames + f]; }
    const FrameFeatures& at(std::size_t d, std::size_t r, std::size_t f) const {
        return cells[(d * receivers + r) * frames + f];
    }
};

json stats_json(const StabilityStats& s) {
    return {{"extractor", s.extractor},
            {"snr_db", io::format_double(s.snr_db)},
            {"mean_all_pairs", s.mean_all_pairs},
            {"mean_cross_receiver", s.mean_cross_receiver},
            {"centered_all_pairs", s.centered_all_pairs},
            {"centered_cross_receiver", s.centered_cross_receiver},
            {"min_similarity", s.min_similarity},
            {"max_abs_deviation", s.max_abs_deviation},
            {"pairs", s.pairs},
            {"samples", s.samples},
            {"dropped", s.dropped}};
}

}  // namespace

void AccuracyCell::summarize() {
    if (per_repeat.empty()) {
        mean = 0.0;
        stddev = 0.0;
        return;
    }
    const double n = static_cast<double>(per_repeat.size());
    mean = std::accumulate(per_repeat.begin(), per_repeat.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : per_repeat) ss += (a - mean) * (a - mean);
    stddev = std::sqrt(ss / n);
}

const AccuracyCell* AccuracyMatrix::find(const std::string& extractor, double snr_db, const std::string& train_set,
                                         const std::string& test_receiver) const {
    for (const auto& c : cells)
        if (c.extractor == extractor && c.snr_db == snr_db && c.train_set == train_set &&
            c.test_receiver == test_receiver)
            return &c;
    return nullptr;
}

bool FrameFeatures::has(Method m) const {
    switch (m) {
        case Method::RD: return rd_stf && rd_ltf;
        case Method::HL: return hl.has_value();
        case Method::DV: return dv.has_value();
    }
    return false;
}

ComplexSignal simulate_capture(const DeviceProfile& tx, const DeviceProfile& rx, const ChannelRealization& channel,
                               Index lead, Index tail) {
    const ComplexSignal frame = apply_transmitter(tx, generate_preamble(PreambleFormat::HTMF));
    ComplexSignal padded = frame;
    padded.samples = CVector::Zero(lead + frame.size() + tail);
    padded.samples.segment(lead, frame.size()) = frame.samples;
    padded.active_begin = lead;
    padded.active_length = frame.size();

    ComplexSignal y = apply_channel(channel, padded);
    const double power = mean_power(y.samples.segment(lead, frame.size()));
    if (power > 0.0) y.samples /= std::sqrt(power);
    return apply_receiver(rx, y);
}

CaptureSpectra analyze_capture(const ComplexSignal& y, const PreprocessConfig& cfg, Index backoff) {
    const PreprocessResult pre = preprocess(y, cfg);
    const Index start = pre.sync.frame_start_n1 - backoff;
    if (start < 0) throw Error(ErrorKind::Bounds, "timing backoff moves the frame before the capture");
    CaptureSpectra out;
    out.sync = pre.sync;
    out.cfo = pre.cfo;
    out.lstf = field_spectrum(pre.compensated, start, Field::LSTF);
    out.lltf = field_spectrum(pre.compensated, start, Field::LLTF);
    if (start + window_offset(WindowName::HTLTF1) + kFftSize <= pre.compensated.size())
        out.htltf = field_spectrum(pre.compensated, start, Field::HTLTF);
    return out;
}

FrameFeatures extract_frame_features(const CaptureSpectra& frame, const CaptureSpectra* model,
                                     const std::vector<Method>& methods, bool dv_compensate) {
    FrameFeatures out;
    auto attempt = [&](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            if (!out.error) out.error = e.what();
        }
    };
    for (Method m : methods) {
        switch (m) {
            case Method::RD:
                attempt([&] {
                    if (!model) throw Error(ErrorKind::DegenerateModel, "no model signal for this receiver");
                    out.rd_stf = extract_rd(frame.lstf, model->lstf);
                    out.rd_ltf = extract_rd(frame.lltf, model->lltf);
                });
                if (!out.has(Method::RD)) out.rd_stf.reset(), out.rd_ltf.reset();
                break;
            case Method::HL:
                attempt([&] {
                    if (!frame.htltf) throw Error(ErrorKind::Bounds, "HTLTF1 window lies outside the capture");
                    out.hl = extract_hl(frame.lltf, *frame.htltf);
                });
                break;
            case Method::DV:
                attempt([&] {
                    DivisionOptions opts;
                    opts.compensate_sequences = dv_compensate;
                    out.dv = extract_dv(frame.lstf, frame.lltf, opts);
                });
                break;
        }
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool collect_features) {
    cfg.validate();
    ExperimentResult result;
    result.matrix.repeats = cfg.repeats;
    const std::vector<std::size_t> classes = class_devices(cfg);
    const std::size_t n_dev = cfg.devices.size();
    const std::size_t n_rx = cfg.receivers.size();
    const auto n_frames = static_cast<std::size_t>(cfg.frames_per_device);
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(cfg.train_fraction * static_cast<double>(n_frames))), 1,
        std::max<std::size_t>(n_frames, 2) - 1);

    // Cells are created up front so the report lists every configured cell.
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si)
        for (Method m : cfg.extractors)
            for (const auto& ts : cfg.train_receivers)
                for (const auto& rx : cfg.test_receivers) {
                    AccuracyCell c;
                    c.extractor = std::string(to_string(m));
                    c.snr_db = cfg.snr_db[si];
                    c.train_set = ts.name;
                    c.test_receiver = rx;
                    result.matrix.cells.push_back(std::move(c));
                }
    auto cell_at = [&](std::size_t si, std::size_t mi, std::size_t ti, std::size_t ri) -> AccuracyCell& {
        const std::size_t per_snr = cfg.extractors.size() * cfg.train_receivers.size() * cfg.test_receivers.size();
        return result.matrix.cells[si * per_snr + (mi * cfg.train_receivers.size() + ti) * cfg.test_receivers.size() +
                                   ri];
    };

    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
        const double snr = cfg.snr_db[si];
        for (int rep = 0; rep < cfg.repeats; ++rep) {
            const u64 rep_u = static_cast<u64>(rep);
            auto link_seed = [&](std::size_t d, std::size_t r) {
                return derive_seed(cfg.master_seed, {kLink, si, rep_u, d, r});
            };

            // Model signals come first, one per receiver, each captured through
            // that receiver only.
            std::vector<std::optional<CaptureSpectra>> models(n_rx);
            if (cfg.wants(Method::RD)) {
                const std::size_t ref = device_index(cfg, *cfg.reference_device);
                parallel_for(n_rx, [&](std::size_t r) {
                    models[r] = capture_model(cfg, r, snr, link_seed(ref, r),
                                              derive_seed(cfg.master_seed, {kModel, si, rep_u, r}));
                });
            }

            FrameGrid grid{n_dev, n_rx, n_frames, std::vector<FrameFeatures>(n_dev * n_rx * n_frames)};
            parallel_for(classes.size() * n_rx, [&](std::size_t job) {
                const std::size_t d = classes[job / n_rx];
                const std::size_t r = job % n_rx;
                const CaptureSpectra* model = models[r] ? &*models[r] : nullptr;
                for (std::size_t f = 0; f < n_frames; ++f) {
                    FrameFeatures& out = grid.at(d, r, f);
                    try {
                        const CaptureSpectra frame =
                            capture_frame(cfg, cfg.devices[d], cfg.receivers[r], snr, link_seed(d, r),
                                          derive_seed(cfg.master_seed, {kFrame, si, rep_u, d, r, f}));
                        out = extract_frame_features(frame, model, cfg.extractors, cfg.dv_compensate);
                    } catch (const Error& e) {
                        out.error = e.what();
                    }
                }
            });

            for (Method m : cfg.extractors)
                for (std::size_t r = 0; r < n_rx; ++r)
                    for (std::size_t d : classes)
                        for (std::size_t f = 0; f < n_frames; ++f) {
                            const std::string key = drop_key(snr, m, cfg.receivers[r].device_id);
                            ++result.attempted[key];
                            if (!grid.at(d, r, f).has(m)) ++result.dropped[key];
                        }

            if (collect_features) {
                for (Method m : cfg.extractors)
                    for (Extractor e : branches(m)) {
                        auto& rows = result.features[std::string(to_string(e))];
                        for (std::size_t d : classes)
                            for (std::size_t r = 0; r < n_rx; ++r)
                                for (std::size_t f = 0; f < n_frames; ++f) {
                                    const FeatureVector* fv = pick(grid.at(d, r, f), e);
                                    if (!fv) continue;
                                    io::FeatureRow row;
                                    row.feature = *fv;
                                    row.device = cfg.devices[d].device_id;
                                    row.receiver = cfg.receivers[r].device_id;
                                    row.channel_scenario = cfg.channel.scenario;
                                    row.trial = static_cast<long long>(rep_u * n_frames + f);
                                    row.snr_db = snr;
                                    rows.push_back(std::move(row));
                                }
                    }
            }

            // Same per-device frame-index split for every receiver.
            std::vector<std::vector<bool>> is_train(n_dev, std::vector<bool>(n_frames, false));
            for (std::size_t d : classes) {
                std::vector<std::size_t> perm(n_frames);
                std::iota(perm.begin(), perm.end(), std::size_t{0});
                Rng rng(derive_seed(cfg.master_seed, {kSplit, si, rep_u, d}));
                std::shuffle(perm.begin(), perm.end(), rng);
                for (std::size_t i = 0; i < n_train; ++i) is_train[d][perm[i]] = true;
            }

            for (std::size_t mi = 0; mi < cfg.extractors.size(); ++mi) {
                const Method m = cfg.extractors[mi];
                const auto br = branches(m);
                for (std::size_t ti = 0; ti < cfg.train_receivers.size(); ++ti) {
                    std::vector<std::vector<LabeledFeature>> train_data(br.size());
                    for (const auto& rx_id : cfg.train_receivers[ti].receivers) {
                        const std::size_t r = receiver_index(cfg, rx_id);
                        for (std::size_t d : classes)
                            for (std::size_t f = 0; f < n_frames; ++f) {
                                const FrameFeatures& ff = grid.at(d, r, f);
                                if (!is_train[d][f] || !ff.has(m)) continue;
                                for (std::size_t b = 0; b < br.size(); ++b)
                                    train_data[b].push_back({*pick(ff, br[b]), cfg.devices[d].device_id});
                            }
                    }
                    std::vector<SoftmaxModel> trained;
                    for (std::size_t b = 0; b < br.size(); ++b) {
                        TrainConfig tc = cfg.classifier;
                        tc.seed = derive_seed(cfg.classifier.seed ^ cfg.master_seed, {kTrain, si, rep_u, mi, ti});
                        trained.push_back(train(train_data[b], tc));
                    }

                    for (std::size_t ri = 0; ri < cfg.test_receivers.size(); ++ri) {
                        const std::size_t r = receiver_index(cfg, cfg.test_receivers[ri]);
                        AccuracyCell& cell = cell_at(si, mi, ti, ri);
                        std::size_t correct = 0, tested = 0;
                        for (std::size_t d : classes)
                            for (std::size_t f = 0; f < n_frames; ++f) {
                                if (is_train[d][f]) continue;
                                const FrameFeatures& ff = grid.at(d, r, f);
                                if (!ff.has(m)) {
                                    ++cell.frames_dropped;
                                    continue;
                                }
                                std::string label;
                                if (m == Method::RD)
                                    label = fuse_and_classify(trained[0], trained[1], *ff.rd_stf, *ff.rd_ltf);
                                else
                                    label = predict_label(trained[0], *pick(ff, br[0]));
                                correct += label == cfg.devices[d].device_id ? 1 : 0;
                                ++tested;
                            }
                        cell.frames_tested += tested;
                        if (tested > 0)
                            cell.per_repeat.push_back(static_cast<double>(correct) / static_cast<double>(tested));
                    }
                }
            }
        }
    }
    for (auto& c : result.matrix.cells) c.summarize();
    return result;
}

std::vector<StabilityStats> run_feature_stability(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<std::size_t> devs = class_devices(cfg);
    const std::size_t n_rx = cfg.receivers.size();
    const auto trials = static_cast<std::size_t>(cfg.frames_per_device);
    std::vector<Extractor> extractors;
    for (Method m : cfg.extractors)
        for (Extractor e : branches(m)) extractors.push_back(e);

    std::vector<StabilityStats> out;
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
        const double snr = cfg.snr_db[si];
        std::vector<std::optional<CaptureSpectra>> models(n_rx);
        if (cfg.wants(Method::RD)) {
            const std::size_t ref = device_index(cfg, *cfg.reference_device);
            parallel_for(n_rx, [&](std::size_t r) {
                models[r] = capture_model(cfg, r, snr, derive_seed(cfg.master_seed, {kStability, kLink, si, ref, r}),
                                          derive_seed(cfg.master_seed, {kStability, kModel, si, r}));
            });
        }

        // Every trial draws its own channel.
        std::vector<FrameFeatures> frames(devs.size() * trials);
        parallel_for(devs.size(), [&](std::size_t di) {
            const std::size_t d = devs[di];
            for (std::size_t t = 0; t < trials; ++t) {
                const std::size_t r = t % n_rx;
                const u64 seed = derive_seed(cfg.master_seed, {kStability, kFrame, si, d, t});
                FrameFeatures& ff = frames[di * trials + t];
                try {
                    const CaptureSpectra frame = capture_frame(cfg, cfg.devices[d], cfg.receivers[r], snr,
                                                               derive_seed(seed, {kLink}), seed);
                    ff = extract_frame_features(frame, models[r] ? &*models[r] : nullptr, cfg.extractors,
                                                cfg.dv_compensate);
                } catch (const Error& e) {
                    ff.error = e.what();
                }
            }
        });

        for (Extractor e : extractors) {
            StabilityStats s;
            s.extractor = std::string(to_string(e));
            s.snr_db = snr;
            double sum_all = 0.0, sum_cross = 0.0, csum_all = 0.0, csum_cross = 0.0;
            std::size_t n_cross = 0;
            for (std::size_t di = 0; di < devs.size(); ++di) {
                std::vector<std::pair<std::size_t, const FeatureVector*>> got;
                for (std::size_t t = 0; t < trials; ++t) {
                    if (const FeatureVector* fv = pick(frames[di * trials + t], e))
                        got.emplace_back(t % n_rx, fv);
                    else
                        ++s.dropped;
                }
                s.samples += got.size();
                for (std::size_t a = 0; a < got.size(); ++a)
                    for (std::size_t b = a + 1; b < got.size(); ++b) {
                        const RVector& va = got[a].second->values;
                        const RVector& vb = got[b].second->values;
                        const double c = cosine_similarity(va, vb);
                        const double cc = centered_cosine_similarity(va, vb);
                        sum_all += c;
                        csum_all += cc;
                        ++s.pairs;
                        s.min_similarity = std::min(s.min_similarity, c);
                        s.max_abs_deviation = std::max(s.max_abs_deviation, (va - vb).cwiseAbs().maxCoeff());
                        if (got[a].first != got[b].first) {
                            sum_cross += c;
                            csum_cross += cc;
                            ++n_cross;
                        }
                    }
            }
            if (s.pairs > 0) {
                s.mean_all_pairs = sum_all / static_cast<double>(s.pairs);
                s.centered_all_pairs = csum_all / static_cast<double>(s.pairs);
            }
            if (n_cross > 0) {
                s.mean_cross_receiver = sum_cross / static_cast<double>(n_cross);
                s.centered_cross_receiver = csum_cross / static_cast<double>(n_cross);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::pair<double, double> pearson_test(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorKind::Config, "pearson_test needs paired samples");
    if (x.size() < 3) throw Error(ErrorKind::Config, "a Pearson p-value needs at least 3 candidates");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return {0.0, 1.0};
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (std::abs(r) >= 1.0) return {r, 0.0};
    const double dof = n - 2.0;
    const double t = r * std::sqrt(dof / (1.0 - r * r));
    const boost::math::students_t dist(dof);
    return {r, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)))};
}

ReferenceSweep run_reference_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.reference_candidates.size() < 3)
        throw Error(ErrorKind::Config, "a reference sweep needs at least 3 candidates");
    if (cfg.train_receivers.empty()) throw Error(ErrorKind::Config, "a reference sweep needs a training receiver");
    const std::size_t train_rx = receiver_index(cfg, cfg.train_receivers.front().receivers.front());

    ReferenceSweep sweep;
    std::vector<double> etas, accs;
    for (std::size_t ci = 0; ci < cfg.reference_candidates.size(); ++ci) {
        const std::string& cand = cfg.reference_candidates[ci];
        ExperimentConfig sub = cfg;
        sub.reference_device = cand;
        sub.extractors = {Method::RD};
        const ExperimentResult res = run_experiment(sub);
        double acc = 0.0;
        for (const auto& c : res.matrix.cells) acc += c.mean;
        acc /= static_cast<double>(res.matrix.cells.size());

        const std::size_t d = device_index(cfg, cand);
        const u64 seed = derive_seed(cfg.master_seed, {kSweep, d});
        std::optional<CaptureSpectra> cap;
        for (int attempt = 0; attempt < kModelAttempts && !cap; ++attempt) {
            try {
                cap = capture_frame(cfg, cfg.devices[d], cfg.receivers[train_rx], cfg.snr_db.front(),
                                    derive_seed(seed, {kLink}), derive_seed(seed, {static_cast<u64>(attempt)}));
            } catch (const Error&) {
            }
        }
        if (!cap) throw Error(ErrorKind::SyncFailed, "could not capture candidate " + cand);
        const RefScore score = eta_lf(csi_amplitude(cap->lltf), {}, cand);
        sweep.rows.push_back({cand, score.eta_lf, acc});
        etas.push_back(score.eta_lf);
        accs.push_back(acc);
    }
    std::tie(sweep.pearson_r, sweep.p_value) = pearson_test(etas, accs);
    return sweep;
}

std::string report_json(const ExperimentConfig& cfg, const ExperimentResult* classification,
                        const std::vector<StabilityStats>* stability, const ReferenceSweep* sweep) {
    json j;
    j["format"] = "divrff-report";
    j["version"] = 1;
    j["config"] = json::parse(experiment_config_json(cfg));
    if (classification) {
        json cells = json::array();
        for (const auto& c : classification->matrix.cells)
            cells.push_back({{"extractor", c.extractor},
                             {"snr_db", io::format_double(c.snr_db)},
                             {"train_set", c.train_set},
                             {"test_receiver", c.test_receiver},
                             {"mean", c.mean},
                             {"std", c.stddev},
                             {"per_repeat", c.per_repeat},
                             {"repeats", c.per_repeat.size()},
                             {"frames_tested", c.frames_tested},
                             {"frames_dropped", c.frames_dropped},
                             {"drop_rate", c.drop_rate()}});
        json drops = json::object();
        for (const auto& [key, attempted] : classification->attempted) {
            const auto it = classification->dropped.find(key);
            const std::size_t dropped = it == classification->dropped.end() ? 0 : it->second;
            drops[key] = {{"attempted", attempted},
                          {"dropped", dropped},
                          {"drop_rate", static_cast<double>(dropped) / static_cast<double>(attempted)}};
        }
        j["classification"] = {
            {"repeats", classification->matrix.repeats}, {"cells", std::move(cells)}, {"frames", std::move(drops)}};
    }
    if (stability) {
        json arr = json::array();
        for (const auto& s : *stability) arr.push_back(stats_json(s));
        j["stability"] = std::move(arr);
    }
    if (sweep) {
        json rows = json::array();
        for (const auto& r : sweep->rows)
            rows.push_back({{"candidate", r.candidate}, {"eta_lf", r.eta_lf}, {"mean_accuracy", r.mean_accuracy}});
        j["reference_sweep"] = {{"rows", std::move(rows)}, {"pearson_r", sweep->pearson_r}, {"p_value", sweep->p_value}};
    }
    return j.dump(2) + "\n";
}

std::string run_bench(const ExperimentConfig& cfg, ExperimentResult* classification) {
    auto wants = [&](const char* a) { return std::find(cfg.analyses.begin(), cfg.analyses.end(), a) != cfg.analyses.end(); };
    std::optional<ExperimentResult> cls;
    std::optional<std::vector<StabilityStats>> stab;
    std::optional<ReferenceSweep> sweep;
    if (wants("classification")) cls = run_experiment(cfg, classification != nullptr);
    if (wants("stability")) stab = run_feature_stability(cfg);
    if (wants("reference_sweep")) sweep = run_reference_sweep(cfg);
    std::string report = report_json(cfg, cls ? &*cls : nullptr, stab ? &*stab : nullptr, sweep ? &*sweep : nullptr);
    if (classification && cls) *classification = std::move(*cls);
    return report;
}

}  // namespace divrff

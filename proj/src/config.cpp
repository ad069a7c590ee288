// SPDX-License-Identifier: Apache-2.0

#include "divrff/config.hpp"

#include "divrff/dataset_io.hpp"
#include "divrff/error.hpp"
#include "divrff/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace divrff {
namespace {

using nlohmann::json;

constexpr std::uint64_t kDeviceStream = 0x747864;    // "txd"
constexpr std::uint64_t kReceiverStream = 0x727864;  // "rxd"

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::Config, what); }

Complex complex_from(const json& j, const std::string& where) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    fail(where + ": expected a number or [re, im]");
}

CVector complex_vector_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) fail(where + ": expected a nonempty array");
    CVector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = complex_from(j[i], where);
    return v;
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

json complex_vector_json(const CVector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v[i]));
    return out;
}

ProfileRanges ranges_from(const json& j, ProfileRanges r) {
    r.dc_max_dbc = j.value("dc_max_dbc", r.dc_max_dbc);
    r.iq_gain_max_db = j.value("iq_gain_max_db", r.iq_gain_max_db);
    r.iq_phase_max_deg = j.value("iq_phase_max_deg", r.iq_phase_max_deg);
    r.fir_tap_count = j.value("fir_tap_count", r.fir_tap_count);
    r.fir_secondary_max_db = j.value("fir_secondary_max_db", r.fir_secondary_max_db);
    r.pa_cubic_max = j.value("pa_cubic_max", r.pa_cubic_max);
    r.cfo_max_hz = j.value("cfo_max_hz", r.cfo_max_hz);
    r.tilt_max_db = j.value("tilt_max_db", r.tilt_max_db);
    return r;
}

DeviceProfile explicit_profile(const json& j, const std::string& where) {
    DeviceProfile p;
    if (j.contains("dc_offset")) p.dc_offset = complex_from(j["dc_offset"], where + ".dc_offset");
    p.iq_gain_imbalance = j.value("iq_gain_imbalance", p.iq_gain_imbalance);
    p.iq_phase_imbalance = j.value("iq_phase_imbalance", p.iq_phase_imbalance);
    if (j.contains("fir_taps")) p.fir_taps = complex_vector_from(j["fir_taps"], where + ".fir_taps");
    if (j.contains("pa_coeffs")) p.pa_coeffs = complex_vector_from(j["pa_coeffs"], where + ".pa_coeffs");
    p.cfo_hz = j.value("cfo_hz", p.cfo_hz);
    if (j.contains("band_tilt")) {
        const json& t = j["band_tilt"];
        p.band_tilt.enabled = t.value("enabled", true);
        p.band_tilt.linear_db = t.value("linear_db", 0.0);
        p.band_tilt.quadratic_db = t.value("quadratic_db", 0.0);
    }
    return p;
}

std::vector<DeviceProfile> profiles_from(const json& j, const char* key, const std::string& prefix,
                                         DeviceRole role, bool field_distinct, const ProfileRanges& ranges,
                                         std::uint64_t master_seed, std::uint64_t stream) {
    std::vector<DeviceProfile> out;
    auto sampled = [&](std::uint64_t seed, std::string id) {
        DeviceProfile p = sample_profile(seed, role, field_distinct, ranges);
        p.device_id = std::move(id);
        return p;
    };
    if (j.is_object() && j.contains("count")) {
        const int count = j["count"].get<int>();
        if (count < 0) fail(std::string(key) + ".count must be nonnegative");
        const std::uint64_t base = j.value("seed", derive_seed(master_seed, {stream}));
        for (int i = 0; i < count; ++i)
            out.push_back(sampled(derive_seed(base, {static_cast<std::uint64_t>(i)}), prefix + std::to_string(i)));
        return out;
    }
    if (!j.is_array()) fail(std::string(key) + " must be an array or {\"count\": n}");
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& e = j[i];
        const std::string where = std::string(key) + "[" + std::to_string(i) + "]";
        if (e.is_number_integer()) {
            out.push_back(sampled(e.get<std::uint64_t>(), prefix + std::to_string(i)));
        } else if (e.is_object()) {
            const std::string id = e.value("id", prefix + std::to_string(i));
            if (e.contains("profile")) {
                DeviceProfile p = explicit_profile(e["profile"], where + ".profile");
                p.device_id = id;
                p.seed = e.value("seed", std::uint64_t{0});
                out.push_back(std::move(p));
            } else if (e.contains("seed")) {
                out.push_back(sampled(e["seed"].get<std::uint64_t>(), id));
            } else {
                fail(where + ": needs a seed or a profile");
            }
        } else {
            fail(where + ": expected an integer seed or an object");
        }
    }
    return out;
}

json profile_json(const DeviceProfile& p) {
    return {{"id", p.device_id},
            {"seed", p.seed},
            {"dc_offset", complex_json(p.dc_offset)},
            {"iq_gain_imbalance", p.iq_gain_imbalance},
            {"iq_phase_imbalance", p.iq_phase_imbalance},
            {"fir_taps", complex_vector_json(p.fir_taps)},
            {"pa_coeffs", complex_vector_json(p.pa_coeffs)},
            {"cfo_hz", p.cfo_hz},
            {"band_tilt",
             {{"enabled", p.band_tilt.enabled},
              {"linear_db", p.band_tilt.linear_db},
              {"quadratic_db", p.band_tilt.quadratic_db}}}};
}

double snr_from(const json& j) {
    if (j.is_string()) return io::parse_double(j.get<std::string>());
    return j.get<double>();
}

TrainConfig classifier_from(const json& j, TrainConfig c) {
    c.epochs = j.value("epochs", c.epochs);
    c.batch = j.value("batch", c.batch);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.l2 = j.value("l2", c.l2);
    c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
    c.seed = j.value("seed", c.seed);
    if (j.contains("optimizer")) {
        const auto o = j["optimizer"].get<std::string>();
        if (o == "adam") c.optimizer = Optimizer::Adam;
        else if (o == "sgd") c.optimizer = Optimizer::Sgd;
        else fail("classifier.optimizer must be 'adam' or 'sgd'");
    }
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.standardize = j.value("standardize", c.standardize);
    return c;
}

PreprocessConfig preprocess_from(const json& j, PreprocessConfig p) {
    p.window_w = j.value("window_w", p.window_w);
    p.threshold_factor = j.value("threshold_factor", p.threshold_factor);
    if (j.contains("threshold_t") && !j["threshold_t"].is_null()) p.threshold_t = j["threshold_t"].get<double>();
    p.squared_energy = j.value("squared_energy", p.squared_energy);
    p.sync.search_len = j.value("search_len", p.sync.search_len);
    p.sync.segment_len = j.value("segment_len", p.sync.segment_len);
    p.sync.min_peak_to_median = j.value("min_peak_to_median", p.sync.min_peak_to_median);
    p.cfo_start_offset_ns = j.value("cfo_start_offset_ns", p.cfo_start_offset_ns);
    p.fine_cfo = j.value("fine_cfo", p.fine_cfo);
    return p;
}

}  // namespace

std::string_view to_string(Method m) {
    switch (m) {
        case Method::RD: return "RD";
        case Method::HL: return "HL";
        case Method::DV: return "DV";
    }
    return "?";
}

Method method_from_string(std::string_view s) {
    if (s == "RD") return Method::RD;
    if (s == "HL") return Method::HL;
    if (s == "DV") return Method::DV;
    throw Error(ErrorKind::Config, "unknown extractor '" + std::string(s) + "' (expected RD, HL or DV)");
}

ScenarioPreset ChannelConfig::preset() const {
    ScenarioPreset p = scenario_preset(scenario);
    if (params) p.params = *params;
    return p;
}

bool ExperimentConfig::wants(Method m) const {
    return std::find(extractors.begin(), extractors.end(), m) != extractors.end();
}

const DeviceProfile& ExperimentConfig::device(const std::string& id) const {
    for (const auto& d : devices)
        if (d.device_id == id) return d;
    throw Error(ErrorKind::Config, "unknown device '" + id + "'");
}

const DeviceProfile& ExperimentConfig::receiver(const std::string& id) const {
    for (const auto& r : receivers)
        if (r.device_id == id) return r;
    throw Error(ErrorKind::Config, "unknown receiver '" + id + "'");
}

void ExperimentConfig::validate() const {
    if (devices.size() < 2) fail("at least two devices are required");
    if (receivers.empty()) fail("at least one receiver is required");
    std::set<std::string> ids;
    for (const auto& d : devices) {
        d.validate();
        if (!ids.insert(d.device_id).second) fail("duplicate device id '" + d.device_id + "'");
    }
    std::set<std::string> rx_ids;
    for (const auto& r : receivers) {
        r.validate();
        if (!rx_ids.insert(r.device_id).second) fail("duplicate receiver id '" + r.device_id + "'");
    }
    if (extractors.empty()) fail("no extractors requested");
    if (wants(Method::RD) && !reference_device) fail("RD requires reference_device");
    if (reference_device) {
        device(*reference_device);
        if (devices.size() < 3) fail("a reference device leaves fewer than two classes");
    }
    (void)channel.preset();
    if (snr_db.empty()) fail("snr_db list is empty");
    for (double s : snr_db)
        if (std::isnan(s) || s == -INFINITY) fail("snr_db must be finite or +inf");
    if (frames_per_device < 1) fail("frames_per_device must be >= 1");
    if (repeats < 1) fail("repeats must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction must lie in (0, 1)");
    if (pad_min < preprocess.window_w) fail("pad_min must cover one detection window");
    if (pad_max < pad_min || pad_tail < 0) fail("padding bounds are inconsistent");
    if (timing_backoff < 0 || timing_backoff > kHtltfCpLength / 2) fail("timing_backoff must lie in [0, 8]");
    for (const auto& ts : train_receivers) {
        if (ts.receivers.empty()) fail("train set '" + ts.name + "' is empty");
        for (const auto& r : ts.receivers) receiver(r);
    }
    for (const auto& r : test_receivers) receiver(r);
    classifier.validate();
    for (const auto& c : reference_candidates) device(c);
    for (const auto& a : analyses)
        if (a != "classification" && a != "stability" && a != "reference_sweep")
            fail("unknown analysis '" + a + "'");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("config must be a JSON object");
    try {
        ExperimentConfig c;
        c.master_seed = j.value("master_seed", std::uint64_t{0});
        c.linear_impairments = j.value("linear_impairments", c.linear_impairments);
        c.field_distinct = j.value("field_distinct", c.field_distinct);
        const ProfileRanges dev_ranges = ranges_from(j.value("device_ranges", json::object()), {});
        const ProfileRanges rx_ranges = ranges_from(j.value("receiver_ranges", json::object()), {});
        if (!j.contains("devices")) fail("missing 'devices'");
        if (!j.contains("receivers")) fail("missing 'receivers'");
        c.devices = profiles_from(j["devices"], "devices", "tx", DeviceRole::Transmitter, c.field_distinct,
                                  dev_ranges, c.master_seed, kDeviceStream);
        c.receivers = profiles_from(j["receivers"], "receivers", "rx", DeviceRole::Receiver, false, rx_ranges,
                                    c.master_seed, kReceiverStream);
        if (c.linear_impairments) {
            for (auto& d : c.devices) d = d.linear_only();
            for (auto& r : c.receivers) r = r.linear_only();
        }
        if (j.contains("reference_device") && !j["reference_device"].is_null())
            c.reference_device = j["reference_device"].get<std::string>();
        if (j.contains("channel")) {
            const json& ch = j["channel"];
            if (ch.is_string()) {
                c.channel.scenario = ch.get<std::string>();
            } else {
                c.channel.scenario = ch.value("scenario", c.channel.scenario);
                if (ch.contains("tap_count") || ch.contains("decay")) {
                    SelectiveParams p = scenario_preset(c.channel.scenario).params;
                    p.tap_count = ch.value("tap_count", p.tap_count);
                    p.decay = ch.value("decay", p.decay);
                    c.channel.params = p;
                }
            }
        }
        if (j.contains("snr_db")) {
            const json& s = j["snr_db"];
            c.snr_db.clear();
            if (s.is_array())
                for (const auto& v : s) c.snr_db.push_back(snr_from(v));
            else
                c.snr_db.push_back(snr_from(s));
        }
        c.frames_per_device = j.value("frames_per_device", c.frames_per_device);
        if (j.contains("extractors")) {
            c.extractors.clear();
            for (const auto& e : j["extractors"]) {
                const Method m = method_from_string(e.get<std::string>());
                if (!c.wants(m)) c.extractors.push_back(m);
            }
        }
        if (j.contains("train_receivers")) {
            for (const auto& t : j["train_receivers"]) {
                TrainSet ts;
                if (t.is_string()) {
                    ts.receivers = {t.get<std::string>()};
                } else if (t.is_array()) {
                    ts.receivers = t.get<std::vector<std::string>>();
                } else {
                    ts.receivers = t.at("receivers").get<std::vector<std::string>>();
                    ts.name = t.value("name", std::string{});
                }
                if (ts.name.empty()) {
                    for (std::size_t i = 0; i < ts.receivers.size(); ++i)
                        ts.name += (i ? "+" : "") + ts.receivers[i];
                }
                c.train_receivers.push_back(std::move(ts));
            }
        } else {
            for (const auto& r : c.receivers) c.train_receivers.push_back({r.device_id, {r.device_id}});
        }
        if (j.contains("test_receivers")) {
            c.test_receivers = j["test_receivers"].get<std::vector<std::string>>();
        } else {
            for (const auto& r : c.receivers) c.test_receivers.push_back(r.device_id);
        }
        if (j.contains("classifier")) c.classifier = classifier_from(j["classifier"], c.classifier);
        c.repeats = j.value("repeats", c.repeats);
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        c.dv_compensate = j.value("dv_compensate", c.dv_compensate);
        c.pad_min = j.value("pad_min", c.pad_min);
        c.pad_max = j.value("pad_max", c.pad_max);
        c.pad_tail = j.value("pad_tail", c.pad_tail);
        c.timing_backoff = j.value("timing_backoff", c.timing_backoff);
        if (j.contains("preprocess")) c.preprocess = preprocess_from(j["preprocess"], c.preprocess);
        if (j.contains("reference_candidates"))
            c.reference_candidates = j["reference_candidates"].get<std::vector<std::string>>();
        if (j.contains("analyses")) c.analyses = j["analyses"].get<std::vector<std::string>>();
        c.validate();
        return c;
    } catch (const json::exception& e) {
        fail(std::string("config: ") + e.what());
    }
}

std::string experiment_config_json(const ExperimentConfig& c) {
    json j;
    j["master_seed"] = c.master_seed;
    json devs = json::array(), rxs = json::array();
    for (const auto& d : c.devices) devs.push_back(profile_json(d));
    for (const auto& r : c.receivers) rxs.push_back(profile_json(r));
    j["devices"] = std::move(devs);
    j["receivers"] = std::move(rxs);
    j["reference_device"] = c.reference_device ? json(*c.reference_device) : json(nullptr);
    const ScenarioPreset preset = c.channel.preset();
    j["channel"] = {{"scenario", c.channel.scenario},
                    {"kind", preset.kind == ChannelKind::Flat ? "flat" : "selective"},
                    {"tap_count", preset.params.tap_count},
                    {"decay", preset.params.decay},
                    {"per_frame", preset.per_frame}};
    json snrs = json::array();
    for (double s : c.snr_db) snrs.push_back(io::format_double(s));
    j["snr_db"] = std::move(snrs);
    j["frames_per_device"] = c.frames_per_device;
    json ex = json::array();
    for (Method m : c.extractors) ex.push_back(std::string(to_string(m)));
    j["extractors"] = std::move(ex);
    json ts = json::array();
    for (const auto& t : c.train_receivers) ts.push_back({{"name", t.name}, {"receivers", t.receivers}});
    j["train_receivers"] = std::move(ts);
    j["test_receivers"] = c.test_receivers;
    const auto& k = c.classifier;
    j["classifier"] = {{"epochs", k.epochs},
                       {"batch", k.batch},
                       {"learning_rate", k.learning_rate},
                       {"l2", k.l2},
                       {"label_smoothing", k.label_smoothing},
                       {"seed", k.seed},
                       {"optimizer", k.optimizer == Optimizer::Adam ? "adam" : "sgd"},
                       {"validation_fraction", k.validation_fraction},
                       {"standardize", k.standardize}};
    j["repeats"] = c.repeats;
    j["train_fraction"] = c.train_fraction;
    j["linear_impairments"] = c.linear_impairments;
    j["field_distinct"] = c.field_distinct;
    j["dv_compensate"] = c.dv_compensate;
    j["pad_min"] = c.pad_min;
    j["pad_max"] = c.pad_max;
    j["pad_tail"] = c.pad_tail;
    j["timing_backoff"] = c.timing_backoff;
    const auto& p = c.preprocess;
    j["preprocess"] = {{"window_w", p.window_w},
                       {"threshold_factor", p.threshold_factor},
                       {"threshold_t", p.threshold_t ? json(*p.threshold_t) : json(nullptr)},
                       {"squared_energy", p.squared_energy},
                       {"search_len", p.sync.search_len},
                       {"segment_len", p.sync.segment_len},
                       {"min_peak_to_median", p.sync.min_peak_to_median},
                       {"cfo_start_offset_ns", p.cfo_start_offset_ns},
                       {"fine_cfo", p.fine_cfo}};
    j["reference_candidates"] = c.reference_candidates;
    j["analyses"] = c.analyses;
    return j.dump(2);
}

}  // namespace divrff

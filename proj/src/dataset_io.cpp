// SPDX-License-Identifier: Apache-2.0

#include "divrff/dataset_io.hpp"

#include "divrff/error.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace divrff::io {
namespace {

using nlohmann::json;

constexpr const char* kFeatureFixedColumns[] = {"extractor", "device", "receiver", "channel_scenario", "trial",
                                                "snr_db"};
constexpr std::size_t kFixedCount = 6;

std::uint32_t load_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void store_u32_le(std::uint32_t v, char* p) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
}

float load_f32_le(const unsigned char* p) {
    const std::uint32_t bits = load_u32_le(p);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

std::int16_t load_i16_le(const unsigned char* p) {
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, mode);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void check_label(const std::string& s, const char* what) {
    if (s.find_first_of(",\n\r\"") != std::string::npos)
        throw Error(ErrorKind::Io, std::string(what) + " label '" + s + "' contains a CSV delimiter");
}

std::string location(const fs::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

json feature_row_json(const FeatureRow& r) {
    json values = json::array();
    for (Index i = 0; i < r.feature.values.size(); ++i) values.push_back(r.feature.values[i]);
    json j = {{"extractor", std::string(to_string(r.feature.extractor))},
              {"device", r.device},
              {"receiver", r.receiver},
              {"channel_scenario", r.channel_scenario},
              {"trial", r.trial},
              {"snr_db", format_double(r.snr_db)},
              {"tones", r.feature.tone_indices},
              {"values", std::move(values)}};
    return j;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

double parse_double(const std::string& s) {
    if (s == "inf" || s == "+inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Io, "not a number: '" + s + "'");
    }
    if (used != s.size()) throw Error(ErrorKind::Io, "trailing characters in number '" + s + "'");
    return v;
}

std::string read_text(const fs::path& path) {
    const auto bytes = read_bytes(path);
    return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

fs::path sidecar_path(const fs::path& data_path) {
    fs::path p = data_path;
    return p.replace_extension(".json");
}

IqMetadata read_sidecar(const fs::path& sidecar) {
    if (!fs::exists(sidecar)) throw Error(ErrorKind::Io, "missing sidecar " + sidecar.string());
    try {
        const json j = json::parse(read_text(sidecar));
        IqMetadata m;
        const std::string fmt = j.value("format", std::string("cf32_le"));
        if (fmt == "cf32_le") m.format = SampleFormat::Cf32;
        else if (fmt == "ci16_le") m.format = SampleFormat::Ci16;
        else throw Error(ErrorKind::Io, sidecar.string() + ": unknown sample format '" + fmt + "'");
        m.sample_rate = j.at("sample_rate").get<double>();
        if (!(m.sample_rate > 0.0)) throw Error(ErrorKind::Io, sidecar.string() + ": sample_rate must be positive");
        m.center_freq_hz = j.value("center_freq_hz", 0.0);
        m.scale = j.value("scale", 32768.0);
        if (j.contains("preamble")) {
            const auto p = j["preamble"].get<std::string>();
            if (p == "non_ht") m.preamble = PreambleFormat::NonHT;
            else if (p == "ht_mf") m.preamble = PreambleFormat::HTMF;
            else throw Error(ErrorKind::Io, sidecar.string() + ": unknown preamble '" + p + "'");
        }
        if (j.contains("device")) m.device = j["device"].get<std::string>();
        if (j.contains("receiver")) m.receiver = j["receiver"].get<std::string>();
        if (j.contains("channel_scenario")) m.channel_scenario = j["channel_scenario"].get<std::string>();
        if (j.contains("trial")) m.trial = j["trial"].get<long long>();
        if (j.contains("snr_db")) m.snr_db = parse_double(j["snr_db"].get<std::string>());
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, sidecar.string() + ": " + e.what());
    }
}

void write_iq(const fs::path& path, const ComplexSignal& signal, const IqMetadata& meta) {
    if (meta.format != SampleFormat::Cf32) throw Error(ErrorKind::Io, "only cf32 captures are written");
    std::string bytes(static_cast<std::size_t>(signal.size()) * 8, '\0');
    for (Index n = 0; n < signal.size(); ++n) {
        const float re = static_cast<float>(signal.samples[n].real());
        const float im = static_cast<float>(signal.samples[n].imag());
        std::uint32_t b;
        std::memcpy(&b, &re, 4);
        store_u32_le(b, bytes.data() + 8 * n);
        std::memcpy(&b, &im, 4);
        store_u32_le(b, bytes.data() + 8 * n + 4);
    }
    write_text(path, bytes);

    json j;
    j["format"] = "cf32_le";
    j["sample_rate"] = signal.sample_rate;
    j["center_freq_hz"] = meta.center_freq_hz != 0.0 ? meta.center_freq_hz : signal.center_freq_hz;
    j["num_samples"] = signal.size();
    const auto preamble = meta.preamble ? meta.preamble : signal.format;
    if (preamble) j["preamble"] = *preamble == PreambleFormat::HTMF ? "ht_mf" : "non_ht";
    if (meta.device) j["device"] = *meta.device;
    if (meta.receiver) j["receiver"] = *meta.receiver;
    if (meta.channel_scenario) j["channel_scenario"] = *meta.channel_scenario;
    if (meta.trial) j["trial"] = *meta.trial;
    if (meta.snr_db) j["snr_db"] = format_double(*meta.snr_db);
    write_text(sidecar_path(path), j.dump(2) + "\n");
}

ComplexSignal read_iq(const fs::path& path, IqMetadata* meta_out) {
    const IqMetadata meta = read_sidecar(sidecar_path(path));
    ComplexSignal sig = meta.format == SampleFormat::Ci16 ? read_iq_int16(path, meta.scale, meta.sample_rate)
                                                          : ComplexSignal{};
    if (meta.format == SampleFormat::Cf32) {
        const auto bytes = read_bytes(path);
        if (bytes.size() % 4 != 0)
            throw Error(ErrorKind::Io, path.string() + ": truncated float at byte offset " +
                                           std::to_string(bytes.size() / 4 * 4));
        if (bytes.size() % 8 != 0)
            throw Error(ErrorKind::Io, path.string() + ": odd float count, unpaired I at byte offset " +
                                           std::to_string(bytes.size() - 4));
        const Index n = static_cast<Index>(bytes.size() / 8);
        sig.samples.resize(n);
        for (Index k = 0; k < n; ++k) {
            const std::size_t off = static_cast<std::size_t>(k) * 8;
            const float re = load_f32_le(bytes.data() + off);
            const float im = load_f32_le(bytes.data() + off + 4);
            if (!std::isfinite(re) || !std::isfinite(im))
                throw Error(ErrorKind::Io, path.string() + ": non-finite sample at byte offset " +
                                               std::to_string(std::isfinite(re) ? off + 4 : off));
            sig.samples[k] = Complex(re, im);
        }
        sig.sample_rate = meta.sample_rate;
    }
    sig.center_freq_hz = meta.center_freq_hz;
    sig.format = meta.preamble;
    if (meta_out) *meta_out = meta;
    return sig;
}

ComplexSignal read_iq_int16(const fs::path& path, double scale, double sample_rate) {
    if (!(scale > 0.0)) throw Error(ErrorKind::Io, "int16 scale must be positive");
    const auto bytes = read_bytes(path);
    if (bytes.size() % 4 != 0)
        throw Error(ErrorKind::Io, path.string() + ": truncated int16 pair at byte offset " +
                                       std::to_string(bytes.size() / 4 * 4));
    ComplexSignal sig;
    sig.sample_rate = sample_rate;
    const Index n = static_cast<Index>(bytes.size() / 4);
    sig.samples.resize(n);
    for (Index k = 0; k < n; ++k) {
        const unsigned char* p = bytes.data() + static_cast<std::size_t>(k) * 4;
        sig.samples[k] = Complex(load_i16_le(p) / scale, load_i16_le(p + 2) / scale);
    }
    return sig;
}

void write_features(const fs::path& path, const std::vector<FeatureRow>& rows) {
    const Index dim = rows.empty() ? 0 : rows.front().feature.values.size();
    std::ostringstream out;
    for (std::size_t c = 0; c < kFixedCount; ++c) out << (c ? "," : "") << kFeatureFixedColumns[c];
    for (Index i = 0; i < dim; ++i) out << ",v" << i;
    out << "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.feature.extractor != rows.front().feature.extractor)
            throw Error(ErrorKind::Io, "row " + std::to_string(r) + " mixes extractors");
        if (row.feature.values.size() != dim)
            throw Error(ErrorKind::Io, "row " + std::to_string(r) + " has dimension " +
                                           std::to_string(row.feature.values.size()) + ", expected " +
                                           std::to_string(dim));
        check_label(row.device, "device");
        check_label(row.receiver, "receiver");
        check_label(row.channel_scenario, "channel_scenario");
        out << to_string(row.feature.extractor) << ',' << row.device << ',' << row.receiver << ','
            << row.channel_scenario << ',' << row.trial << ',' << format_double(row.snr_db);
        for (Index i = 0; i < dim; ++i) out << ',' << format_double(row.feature.values[i]);
        out << "\n";
    }
    write_text(path, out.str());
}

std::vector<FeatureRow> read_features(const fs::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw Error(ErrorKind::Io, path.string() + ": missing header");
    const auto header = split_csv(lines.front());
    if (header.size() < kFixedCount) throw Error(ErrorKind::Io, location(path, 1) + ": short header");
    for (std::size_t c = 0; c < kFixedCount; ++c)
        if (header[c] != kFeatureFixedColumns[c])
            throw Error(ErrorKind::Io, location(path, 1) + ": expected column '" + kFeatureFixedColumns[c] +
                                           "', found '" + header[c] + "'");
    const Index dim = static_cast<Index>(header.size() - kFixedCount);
    for (Index i = 0; i < dim; ++i)
        if (header[kFixedCount + static_cast<std::size_t>(i)] != "v" + std::to_string(i))
            throw Error(ErrorKind::Io, location(path, 1) + ": expected column 'v" + std::to_string(i) + "'");

    std::vector<FeatureRow> rows;
    std::optional<Extractor> extractor;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto cells = split_csv(lines[ln]);
        const std::string where = location(path, ln + 1);
        if (cells.size() != header.size())
            throw Error(ErrorKind::Io, where + ": row has " + std::to_string(cells.size()) + " columns, header has " +
                                           std::to_string(header.size()));
        FeatureRow row;
        try {
            row.feature.extractor = extractor_from_string(cells[0]);
        } catch (const Error&) {
            throw Error(ErrorKind::Io, where + ": unknown extractor '" + cells[0] + "'");
        }
        if (extractor && *extractor != row.feature.extractor)
            throw Error(ErrorKind::Io, where + ": extractor " + cells[0] + " differs from earlier rows");
        extractor = row.feature.extractor;
        row.device = cells[1];
        row.receiver = cells[2];
        row.channel_scenario = cells[3];
        try {
            row.trial = std::stoll(cells[4]);
            row.snr_db = parse_double(cells[5]);
            row.feature.values.resize(dim);
            for (Index i = 0; i < dim; ++i)
                row.feature.values[i] = parse_double(cells[kFixedCount + static_cast<std::size_t>(i)]);
        } catch (const Error& e) {
            throw Error(ErrorKind::Io, where + ": " + e.what());
        } catch (const std::exception&) {
            throw Error(ErrorKind::Io, where + ": malformed trial '" + cells[4] + "'");
        }
        const auto& tones = extractor_tones(row.feature.extractor);
        if (static_cast<Index>(tones.size()) == dim) row.feature.tone_indices = tones;
        row.feature.device_hint = row.device;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_features_json(const fs::path& path, const std::vector<FeatureRow>& rows) {
    json arr = json::array();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].feature.extractor != rows.front().feature.extractor)
            throw Error(ErrorKind::Io, "row " + std::to_string(r) + " mixes extractors");
        arr.push_back(feature_row_json(rows[r]));
    }
    write_text(path, arr.dump(2) + "\n");
}

std::vector<Candidate> read_csi(const fs::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw Error(ErrorKind::Io, path.string() + ": missing header");
    const auto header = split_csv(lines.front());
    if (header.empty() || header.front() != "device")
        throw Error(ErrorKind::Io, location(path, 1) + ": first column must be 'device'");
    std::vector<Candidate> out;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto cells = split_csv(lines[ln]);
        if (cells.size() != header.size())
            throw Error(ErrorKind::Io, location(path, ln + 1) + ": column count differs from header");
        RVector v(static_cast<Index>(cells.size() - 1));
        try {
            for (std::size_t i = 1; i < cells.size(); ++i) v[static_cast<Index>(i - 1)] = parse_double(cells[i]);
        } catch (const Error& e) {
            throw Error(ErrorKind::Io, location(path, ln + 1) + ": " + e.what());
        }
        out.emplace_back(cells[0], std::move(v));
    }
    return out;
}

void write_csi(const fs::path& path, const std::vector<Candidate>& candidates) {
    const Index n = candidates.empty() ? 0 : candidates.front().second.size();
    std::ostringstream out;
    out << "device";
    for (Index i = 0; i < n; ++i) out << ",a" << i;
    out << "\n";
    for (const auto& [id, v] : candidates) {
        check_label(id, "device");
        if (v.size() != n) throw Error(ErrorKind::Io, "candidate " + id + " has a different length");
        out << id;
        for (Index i = 0; i < n; ++i) out << ',' << format_double(v[i]);
        out << "\n";
    }
    write_text(path, out.str());
}

void write_ref_scores(const fs::path& path, const std::vector<RefScore>& scores) {
    std::ostringstream out;
    out << "rank,device,eta_lf,energy_before,energy_after\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        check_label(scores[i].device_id, "device");
        out << i + 1 << ',' << scores[i].device_id << ',' << format_double(scores[i].eta_lf) << ','
            << format_double(scores[i].energy_before) << ',' << format_double(scores[i].energy_after) << "\n";
    }
    write_text(path, out.str());
}

void write_accuracy(const fs::path& path, const AccuracyMatrix& matrix) {
    std::ostringstream out;
    out << "extractor,snr_db,train_set,test_receiver,mean,std,repeats,frames_tested,frames_dropped,drop_rate\n";
    for (const auto& c : matrix.cells) {
        out << c.extractor << ',' << format_double(c.snr_db) << ',' << c.train_set << ',' << c.test_receiver << ',' << format_double(c.mean) << ','
            << format_double(c.stddev) << ',' << c.per_repeat.size() << ',' << c.frames_tested << ','
            << c.frames_dropped << ',' << format_double(c.drop_rate()) << "\n";
    }
    write_text(path, out.str());
}

}  // namespace divrff::io

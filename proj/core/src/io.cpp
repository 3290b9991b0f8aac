// SPDX-License-Identifier: Apache-2.0
#include "stylebal/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stylebal/error.hpp"

namespace stylebal {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// PNM

namespace {

class PnmHeader {
public:
    PnmHeader(std::span<const std::uint8_t> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

    std::size_t pos() const { return pos_; }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::size_t number(const char* what) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        std::size_t v = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > (1u << 24)) throw DataError(std::string("pnm ") + what + " too large at byte " + std::to_string(start));
            ++pos_;
        }
        if (pos_ == start) throw DataError(std::string("pnm: expected ") + what + " at byte " + std::to_string(start));
        return v;
    }

    void single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw DataError("pnm: expected whitespace after maxval at byte " + std::to_string(pos_));
        ++pos_;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Image decode_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw DataError("pnm: expected magic P5 or P6 at byte 0");
    const std::size_t channels = bytes[1] == '6' ? 3 : 1;
    PnmHeader h(bytes, 2);
    const std::size_t width = h.number("width");
    const std::size_t height = h.number("height");
    const std::size_t maxval_at = h.pos();
    const std::size_t maxval = h.number("maxval");
    if (maxval != 255)
        throw DataError("pnm: unsupported maxval " + std::to_string(maxval) + " at byte " + std::to_string(maxval_at) +
                        " (only 255)");
    h.single_space();
    if (width == 0 || height == 0) throw DataError("pnm: zero image extent");
    const std::size_t offset = h.pos();
    const std::size_t need = width * height * channels;
    if (bytes.size() - offset < need)
        throw DataError("pnm: payload truncated at byte " + std::to_string(bytes.size()) + ", expected " +
                        std::to_string(offset + need));
    std::vector<double> data(need);
    for (std::size_t i = 0; i < need; ++i) data[i] = static_cast<double>(bytes[offset + i]) / 255.0;
    return Image({height, width, channels}, std::move(data));
}

std::vector<std::uint8_t> encode_pnm(const Image& image) {
    const std::string header = std::string(image.channels() == 3 ? "P6" : "P5") + "\n" +
                               std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.data().size());
    for (double v : image.data()) out.push_back(static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5)));
    return out;
}

Image read_image(const std::string& path) {
    const auto bytes = read_file(path);
    try {
        return decode_pnm(bytes);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_image(const Image& image, const std::string& path) { write_file(path, encode_pnm(image)); }

// ---------------------------------------------------------------------------
// FNW1 weights

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const std::string& what) {
        if (bytes_.size() - pos_ < sizeof(T))
            throw DataError("weights: truncated while reading " + what + " at byte " + std::to_string(pos_));
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_weights(const FeatNet& net) {
    std::vector<std::uint8_t> out = {'F', 'N', 'W', '1'};
    const auto& params = net.parameters();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.in_channels));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.out_channels));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.kernel));
        for (double w : p.weights) put_le<double>(out, w);
        for (double b : p.bias) put_le<double>(out, b);
    }
    return out;
}

FeatNet decode_weights(std::span<const std::uint8_t> bytes, const NetConfig& cfg) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "FNW1", 4) != 0)
        throw DataError("weights: bad magic, expected FNW1");
    Reader r(bytes.subspan(4));
    std::vector<const LayerDesc*> convs;
    for (const auto& l : cfg.layers)
        if (l.kind == LayerKind::conv) convs.push_back(&l);
    const auto count = r.get<std::uint32_t>("layer count");
    if (count != convs.size())
        throw DataError("weights: file holds " + std::to_string(count) + " conv layers, config has " +
                        std::to_string(convs.size()));
    std::vector<ConvParams> params;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string layer = "conv layer " + std::to_string(i);
        ConvParams p;
        p.in_channels = r.get<std::uint32_t>(layer + " in_ch");
        p.out_channels = r.get<std::uint32_t>(layer + " out_ch");
        p.kernel = r.get<std::uint32_t>(layer + " kernel");
        const auto& d = *convs[i];
        if (p.in_channels != d.in_channels || p.out_channels != d.out_channels || p.kernel != d.kernel)
            throw DataError("weights: " + layer + " is " + std::to_string(p.in_channels) + "->" +
                            std::to_string(p.out_channels) + " k" + std::to_string(p.kernel) + ", config expects " +
                            std::to_string(d.in_channels) + "->" + std::to_string(d.out_channels) + " k" +
                            std::to_string(d.kernel));
        p.weights.resize(p.out_channels * p.in_channels * p.kernel * p.kernel);
        for (double& w : p.weights) w = r.get<double>(layer + " weights");
        p.bias.resize(p.out_channels);
        for (double& b : p.bias) b = r.get<double>(layer + " biases");
        params.push_back(std::move(p));
    }
    if (r.remaining() != 0) throw DataError("weights: " + std::to_string(r.remaining()) + " trailing bytes");
    NetConfig plain = cfg;
    plain.weights_file.reset();
    return FeatNet::from_parameters(plain, std::move(params));
}

FeatNet read_weights(const std::string& path, const NetConfig& cfg) {
    const auto bytes = read_file(path);
    try {
        return decode_weights(bytes, cfg);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_weights(const FeatNet& net, const std::string& path) { write_file(path, encode_weights(net)); }

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

class CsvReader {
public:
    CsvReader(std::istream& in, std::string table) : in_(in), table_(std::move(table)) {}

    /// Reads the header; fails unless its leading columns equal `expected`.
    std::vector<std::string> header(const std::vector<std::string>& expected, bool allow_extra = false) {
        std::vector<std::string> cols;
        if (!next(cols)) fail("missing header row");
        const bool prefix_ok = cols.size() >= expected.size() &&
                               std::equal(expected.begin(), expected.end(), cols.begin());
        if (!prefix_ok || (!allow_extra && cols.size() != expected.size())) {
            std::string want;
            for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
            fail("header must be '" + want + (allow_extra ? ",...'" : "'"));
        }
        return cols;
    }

    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            fields.clear();
            std::size_t start = 0;
            for (;;) {
                const std::size_t comma = line.find(',', start);
                fields.push_back(line.substr(start, comma - start));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw DataError(table_ + " line " + std::to_string(line_no_) + ": " + msg);
    }

    double number(const std::string& field) const {
        double v = 0.0;
        const char* first = field.data();
        const char* last = field.data() + field.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || field.empty()) fail("'" + field + "' is not a number");
        return v;
    }

    long integer(const std::string& field) const {
        long v = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
            fail("'" + field + "' is not an integer");
        return v;
    }

    void check_id(const std::string& id) const {
        if (id.empty()) fail("empty id");
        for (char c : id)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-'))
                fail("id '" + id + "' has characters outside [A-Za-z0-9_.-]");
    }

    void width(const std::vector<std::string>& fields, std::size_t n) const {
        if (fields.size() != n)
            fail("expected " + std::to_string(n) + " fields, found " + std::to_string(fields.size()));
    }

private:
    std::istream& in_;
    std::string table_;
    std::size_t line_no_ = 0;
};

const std::vector<std::string> kReportHeader = {"sample", "content", "style", "tap", "classic", "sup", "inf", "balanced"};

}  // namespace

std::vector<ReportRow> report_rows(const std::string& sample, const std::string& content, const std::string& style,
                                   const PairScore& score) {
    std::vector<ReportRow> rows;
    for (const auto& l : score.layers)
        rows.push_back({sample, content, style, l.tap, l.classic, l.sup, l.inf, l.balanced});
    rows.push_back({sample, content, style, "total", score.classic_total, score.sup_total, score.inf_total,
                    score.balanced_total});
    return rows;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "sample,content,style,tap,classic,sup,inf,balanced\n";
    for (const auto& r : rows)
        out << r.sample << ',' << r.content << ',' << r.style << ',' << r.tap << ',' << format_double(r.classic) << ','
            << format_double(r.sup) << ',' << format_double(r.inf) << ',' << format_double(r.balanced) << '\n';
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
    CsvReader csv(in, "report");
    csv.header(kReportHeader);
    std::vector<ReportRow> rows;
    std::vector<std::string> f;
    while (csv.next(f)) {
        csv.width(f, kReportHeader.size());
        for (std::size_t i = 0; i < 4; ++i) csv.check_id(f[i]);
        ReportRow r{f[0], f[1], f[2], f[3], csv.number(f[4]), csv.number(f[5]), csv.number(f[6]), csv.number(f[7])};
        if (r.classic < 0.0 || r.sup < 0.0 || r.inf < 0.0) csv.fail("losses must be non-negative");
        rows.push_back(std::move(r));
    }
    return rows;
}

Metric parse_metric(std::string_view name) {
    if (name == "classic") return Metric::classic;
    if (name == "sup") return Metric::sup;
    if (name == "inf") return Metric::inf;
    if (name == "balanced") return Metric::balanced;
    throw UsageError("unknown metric '" + std::string(name) + "' (classic, sup, inf, balanced)");
}

double metric_value(const ReportRow& row, Metric metric) {
    switch (metric) {
        case Metric::classic: return row.classic;
        case Metric::sup: return row.sup;
        case Metric::inf: return row.inf;
        case Metric::balanced: return row.balanced;
    }
    return row.classic;
}

LossTable loss_table_from_report(const std::vector<ReportRow>& rows, Metric metric,
                                 const std::map<std::string, double>& weights) {
    LossTable table;
    std::map<std::string, std::size_t> col_index, row_index;
    for (const auto& r : rows) {
        if (r.tap == "total") continue;
        if (col_index.emplace(r.tap, table.columns.size()).second) {
            table.columns.push_back(r.tap);
            const auto w = weights.find(r.tap);
            table.weights.push_back(w == weights.end() ? 1.0 : w->second);
        }
        if (row_index.emplace(r.sample, table.ids.size()).second) table.ids.push_back(r.sample);
    }
    const double nan = std::nan("");
    table.rows.assign(table.ids.size(), std::vector<double>(table.columns.size(), nan));
    for (const auto& r : rows) {
        if (r.tap == "total") continue;
        double& cell = table.rows[row_index[r.sample]][col_index[r.tap]];
        if (!std::isnan(cell)) throw DataError("report repeats tap '" + r.tap + "' for sample '" + r.sample + "'");
        cell = metric_value(r, metric);
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        for (std::size_t l = 0; l < table.columns.size(); ++l)
            if (std::isnan(table.rows[i][l]))
                throw DataError("report lacks tap '" + table.columns[l] + "' for sample '" + table.ids[i] + "'");
    return table;
}

void write_annotations_csv(std::ostream& out, const std::vector<AnnotationRecord>& rows) {
    out << "id,score\n";
    for (const auto& r : rows) out << r.id << ',' << r.score << '\n';
}

std::vector<AnnotationRecord> read_annotations_csv(std::istream& in) {
    CsvReader csv(in, "annotations");
    csv.header({"id", "score"});
    std::vector<AnnotationRecord> rows;
    std::vector<std::string> f;
    while (csv.next(f)) {
        csv.width(f, 2);
        csv.check_id(f[0]);
        const long score = csv.integer(f[1]);
        if (score < -1 || score > 1) csv.fail("score " + f[1] + " outside {-1, 0, 1}");
        rows.push_back({f[0], static_cast<int>(score)});
    }
    return rows;
}

void write_feature_bank_csv(std::ostream& out, const FeatureBank& bank) {
    const std::size_t dim = bank.empty() ? 0 : bank.front().vector.size();
    out << "id,artist";
    for (std::size_t k = 0; k < dim; ++k) out << ",v" << k;
    out << '\n';
    for (const auto& e : bank) {
        out << e.id << ',' << e.artist;
        for (double v : e.vector) out << ',' << format_double(v);
        out << '\n';
    }
}

FeatureBank read_feature_bank_csv(std::istream& in) {
    CsvReader csv(in, "feature bank");
    const auto cols = csv.header({"id", "artist"}, true);
    const std::size_t dim = cols.size() - 2;
    if (dim == 0) csv.fail("feature bank needs at least one vector column");
    for (std::size_t k = 0; k < dim; ++k)
        if (cols[k + 2] != "v" + std::to_string(k)) csv.fail("vector columns must be named v0, v1, ...");
    FeatureBank bank;
    std::vector<std::string> f;
    while (csv.next(f)) {
        if (f.size() != cols.size())
            csv.fail("row has " + std::to_string(f.size() < 2 ? 0 : f.size() - 2) + " features, header has " +
                     std::to_string(dim));
        csv.check_id(f[0]);
        csv.check_id(f[1]);
        FeatureBankEntry e{f[0], f[1], {}};
        for (std::size_t k = 0; k < dim; ++k) e.vector.push_back(csv.number(f[k + 2]));
        bank.push_back(std::move(e));
    }
    return bank;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "style,content,classic,balanced,content_loss,steps\n";
    for (const auto& r : result.rows)
        out << r.style_id << ',' << r.content_id << ',' << format_double(r.classic) << ','
            << format_double(r.balanced) << ',' << format_double(r.content) << ',' << r.steps << '\n';
}

void write_trajectory_csv(std::ostream& out, const StylizeResult& result) {
    out << "step,total";
    const std::size_t layers = result.balanced_trace.empty() ? 0 : result.balanced_trace.front().size();
    for (std::size_t l = 0; l < layers; ++l) out << ",balanced_" << l;
    out << '\n';
    for (std::size_t t = 0; t < result.trajectory.size(); ++t) {
        out << t << ',' << format_double(result.trajectory[t]);
        for (double b : result.balanced_trace[t]) out << ',' << format_double(b);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

NetConfig parse_net(const json& j) {
    reject_unknown(j, {"architecture", "layers", "seed", "weights_file"}, "net");
    NetConfig cfg;
    if (j.contains("layers")) {
        if (j.contains("architecture")) throw ConfigError("net: give either 'architecture' or 'layers'");
        for (const auto& l : j.at("layers")) {
            const std::string kind = l.at("kind").get<std::string>();
            if (kind == "conv") {
                reject_unknown(l, {"kind", "in", "out", "kernel"}, "conv layer");
                cfg.layers.push_back(LayerDesc::conv(l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                                                     l.value("kernel", std::size_t{3})));
            } else if (kind == "relu") {
                reject_unknown(l, {"kind", "tag"}, "relu layer");
                cfg.layers.push_back(LayerDesc::relu(l.value("tag", std::string{})));
            } else if (kind == "avgpool") {
                reject_unknown(l, {"kind"}, "avgpool layer");
                cfg.layers.push_back(LayerDesc::avgpool());
            } else {
                throw ConfigError("unknown layer kind '" + kind + "'");
            }
        }
    } else {
        const std::string arch = j.value("architecture", std::string("default"));
        if (arch != "default") throw ConfigError("unknown architecture '" + arch + "'");
        cfg = NetConfig::default_arch();
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("weights_file")) cfg.weights_file = j.at("weights_file").get<std::string>();
    cfg.validate();
    return cfg;
}

LossConfig parse_loss(const json& j) {
    reject_unknown(j, {"style_layers", "content_layer", "beta", "normalization"}, "loss");
    LossConfig cfg = LossConfig::defaults();
    if (j.contains("style_layers")) {
        cfg.style_layers.clear();
        for (const auto& l : j.at("style_layers")) {
            if (l.is_string()) {
                cfg.style_layers.push_back({l.get<std::string>(), 1.0});
            } else {
                reject_unknown(l, {"tap", "weight"}, "style layer");
                cfg.style_layers.push_back({l.at("tap").get<std::string>(), l.value("weight", 1.0)});
            }
        }
    }
    cfg.content_layer = j.value("content_layer", cfg.content_layer);
    cfg.beta = j.value("beta", cfg.beta);
    const std::string norm = j.value("normalization", std::string("channels_squared"));
    if (norm == "channels_squared") cfg.normalization = Normalization::channels_squared;
    else if (norm == "spatial_product") cfg.normalization = Normalization::spatial_product;
    else throw ConfigError("unknown normalization '" + norm + "'");
    cfg.validate();
    return cfg;
}

OptimizeConfig parse_optimize(const json& j) {
    reject_unknown(j, {"steps", "step_size", "seed", "init", "loss_kind", "auto_beta"}, "optimize");
    OptimizeConfig cfg;
    cfg.steps = j.value("steps", cfg.steps);
    cfg.step_size = j.value("step_size", cfg.step_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.auto_beta = j.value("auto_beta", cfg.auto_beta);
    const std::string init = j.value("init", std::string("content"));
    if (init == "content") cfg.init = InitKind::content;
    else if (init == "noise") cfg.init = InitKind::noise;
    else throw ConfigError("unknown init '" + init + "'");
    const std::string kind = j.value("loss_kind", std::string("classic"));
    if (kind == "classic") cfg.loss_kind = LossKind::classic;
    else if (kind == "balanced") cfg.loss_kind = LossKind::balanced;
    else throw ConfigError("unknown loss_kind '" + kind + "'");
    return cfg;
}

}  // namespace

void RunConfig::validate() const {
    net.validate();
    loss.validate();
    optimize.validate();
    std::set<std::string> tags;
    for (const auto& l : net.layers)
        if (l.kind == LayerKind::relu && !l.tag.empty()) tags.insert(l.tag);
    for (const auto& l : loss.style_layers)
        if (!tags.count(l.tap)) throw ConfigError("style tap '" + l.tap + "' is not in the architecture");
    if (!tags.count(loss.content_layer))
        throw ConfigError("content tap '" + loss.content_layer + "' is not in the architecture");
}

RunConfig parse_run_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        reject_unknown(j, {"net", "loss", "optimize", "paths"}, "config");
        RunConfig cfg;
        if (j.contains("net")) cfg.net = parse_net(j.at("net"));
        if (j.contains("loss")) cfg.loss = parse_loss(j.at("loss"));
        if (j.contains("optimize")) cfg.optimize = parse_optimize(j.at("optimize"));
        cfg.optimize.loss = cfg.loss;
        if (j.contains("paths")) {
            reject_unknown(j.at("paths"), {"content", "style", "pastiche", "output", "trajectory", "weights"},
                           "paths");
            for (const auto& [key, value] : j.at("paths").items()) cfg.paths[key] = value.get<std::string>();
        }
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    const auto bytes = read_file(path);
    return parse_run_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace stylebal

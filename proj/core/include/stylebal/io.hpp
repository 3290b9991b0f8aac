// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylebal/analysis.hpp"
#include "stylebal/featnet.hpp"
#include "stylebal/stylizer.hpp"
#include "stylebal/tensor.hpp"

namespace stylebal {

// ---------------------------------------------------------------------------
// Images: binary PGM (P5, 1 channel) and PPM (P6, 3 channels), maxval 255.
// Byte v maps to v / 255; writing rounds half up.

Image decode_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const Image& image);
Image read_image(const std::string& path);
void write_image(const Image& image, const std::string& path);

// ---------------------------------------------------------------------------
// Weights: "FNW1", u32 conv count, per conv u32 in/out/kernel, then f64
// weights (out, in, ky, kx) and biases, all little-endian.

std::vector<std::uint8_t> encode_weights(const FeatNet& net);
FeatNet decode_weights(std::span<const std::uint8_t> bytes, const NetConfig& cfg);
FeatNet read_weights(const std::string& path, const NetConfig& cfg);
void write_weights(const FeatNet& net, const std::string& path);

// ---------------------------------------------------------------------------
// CSV tables. Header row required, comma separated, no quoting.

/// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double v);

struct ReportRow {
    std::string sample;
    std::string content;
    std::string style;
    std::string tap;  // "total" for the weighted per-pair sum
    double classic = 0.0;
    double sup = 0.0;
    double inf = 0.0;
    double balanced = 0.0;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// One row per style layer followed by the weighted total row.
std::vector<ReportRow> report_rows(const std::string& sample, const std::string& content, const std::string& style,
                                   const PairScore& score);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(std::istream& in);

enum class Metric { classic, sup, inf, balanced };
Metric parse_metric(std::string_view name);
double metric_value(const ReportRow& row, Metric metric);

/// Pivots per-layer report rows (totals skipped) into a sample x tap table.
/// Taps keep first-appearance order; weights default to one.
LossTable loss_table_from_report(const std::vector<ReportRow>& rows, Metric metric,
                                 const std::map<std::string, double>& weights = {});

void write_annotations_csv(std::ostream& out, const std::vector<AnnotationRecord>& rows);
std::vector<AnnotationRecord> read_annotations_csv(std::istream& in);

void write_feature_bank_csv(std::ostream& out, const FeatureBank& bank);
FeatureBank read_feature_bank_csv(std::istream& in);

void write_sweep_csv(std::ostream& out, const SweepResult& result);
void write_trajectory_csv(std::ostream& out, const StylizeResult& result);

// ---------------------------------------------------------------------------
// JSON run configuration. Unknown keys are rejected.

struct RunConfig {
    NetConfig net = NetConfig::default_arch();
    LossConfig loss = LossConfig::defaults();
    OptimizeConfig optimize;  // optimize.loss mirrors `loss`
    std::map<std::string, std::string> paths;

    /// Every referenced tap must exist in the architecture.
    void validate() const;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);

/// Reads a whole file; throws DataError when it cannot be opened.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace stylebal

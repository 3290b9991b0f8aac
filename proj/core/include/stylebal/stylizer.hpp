// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stylebal/featnet.hpp"
#include "stylebal/gram_loss.hpp"
#include "stylebal/tensor.hpp"

namespace stylebal {

enum class InitKind { content, noise };
enum class LossKind { classic, balanced };

struct OptimizeConfig {
    std::size_t steps = 200;
    double step_size = 0.02;
    std::uint64_t seed = 0;
    InitKind init = InitKind::content;
    LossKind loss_kind = LossKind::classic;
    LossConfig loss = LossConfig::defaults();
    /// Replace loss.beta so both terms have equal magnitude between the
    /// content and style images before optimization.
    bool auto_beta = false;

    void validate() const;
};

/// All loss quantities of one (content, style, pastiche) triple.
struct PairScore {
    std::vector<LayerLossReport> layers;  // in loss.style_layers order
    double classic_total = 0.0;           // sum w^l classic^l
    double sup_total = 0.0;
    double inf_total = 0.0;
    double balanced_total = 0.0;          // sum w^l balanced^l
    double content = 0.0;
};

PairScore score_pastiche(const FeatNet& net, const Image& content, const Image& style, const Image& pastiche,
                         const LossConfig& loss);

struct StylizeResult {
    Image pastiche;
    /// trajectory[0] is the objective at the initial image, trajectory[t]
    /// the objective after update t.
    std::vector<double> trajectory;
    /// Per-layer balanced loss at each trajectory point.
    std::vector<std::vector<double>> balanced_trace;
    /// Final losses measured against the true style image.
    PairScore final_score;
    double beta = 0.0;  // beta actually used
};

/// Adam on pixels, clamped to [0, 1] after each step. Deterministic given cfg.
StylizeResult stylize(const FeatNet& net, const Image& content, const Image& style, const OptimizeConfig& cfg);

/// stylize with every style target Gram replaced by alpha*G_S + (1-alpha)*G_C.
StylizeResult interpolation_baseline(const FeatNet& net, const Image& content, const Image& style, double alpha,
                                     const OptimizeConfig& cfg);

/// Beta that equalizes the content loss and the (classic or balanced) style
/// loss measured between the content and style images; 1 when either vanishes.
double calibrate_beta(const FeatNet& net, const Image& content, const Image& style, const LossConfig& loss,
                      LossKind kind);

struct NamedImage {
    std::string id;
    Image image;
};

enum class Pairing { all_pairs, zipped };

struct SweepRow {
    std::string style_id;
    std::string content_id;
    double classic = 0.0;   // final total classic style loss
    double balanced = 0.0;  // final total balanced style loss
    double content = 0.0;   // final content loss
    std::size_t steps = 0;
    std::vector<LayerLossReport> layers;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<Image> pastiches;  // parallel to rows
};

struct SweepOptions {
    Pairing pairing = Pairing::all_pairs;
    std::size_t threads = 1;
};

/// Stylizes every task; task k optimizes with seed derive_key(cfg.seed, k).
/// Rows come back in task order (contents outer, styles inner for all_pairs).
SweepResult sweep(const FeatNet& net, const std::vector<NamedImage>& contents, const std::vector<NamedImage>& styles,
                  const OptimizeConfig& cfg, const SweepOptions& opts = {});

}  // namespace stylebal

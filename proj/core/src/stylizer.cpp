// SPDX-License-Identifier: Apache-2.0
#include "stylebal/stylizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

#include "stylebal/error.hpp"
#include "stylebal/grad.hpp"
#include "stylebal/rng.hpp"

namespace stylebal {

void OptimizeConfig::validate() const {
    if (!(step_size > 0.0)) throw ConfigError("step size must be positive");
    loss.validate();
}

namespace {

std::set<std::string> style_tap_set(const LossConfig& loss) {
    std::set<std::string> taps;
    for (const auto& l : loss.style_layers) taps.insert(l.tap);
    return taps;
}

void check_net_compat(const FeatNet& net, const Image& image, const std::string& what) {
    if (image.channels() != net.input_channels())
        throw ConfigError(what + " image has " + std::to_string(image.channels()) +
                          " channels but the net expects " + std::to_string(net.input_channels()));
}

std::map<std::string, GramMatrix> style_grams(const FeatNet& net, const Image& style, const LossConfig& loss) {
    std::map<std::string, GramMatrix> out;
    for (auto& [tap, f] : net.forward(style, style_tap_set(loss))) out.emplace(tap, gram(f));
    return out;
}

struct Evaluation {
    double objective = 0.0;
    std::vector<double> balanced;
    std::vector<std::pair<std::string, GradientMap>> grads;
};

Evaluation evaluate(const ForwardCache& cache, const FeatureMap& content_target,
                    const std::map<std::string, GramMatrix>& targets, const OptimizeConfig& cfg, double beta,
                    bool with_grads) {
    Evaluation ev;
    const LossConfig& loss = cfg.loss;
    double style = 0.0;
    for (const auto& layer : loss.style_layers) {
        const FeatureMap& fp = cache.features.at(layer.tap);
        const GramMatrix& target = targets.at(layer.tap);
        const GramMatrix gp = gram(fp);
        const double n = norm_constant(fp, loss.normalization);
        const LayerLossReport r = layer_report(layer.tap, target, gp, n);
        ev.balanced.push_back(r.balanced);
        style += layer.weight * (cfg.loss_kind == LossKind::classic ? r.classic : r.balanced);
        if (with_grads && layer.weight != 0.0) {
            GradientMap g = cfg.loss_kind == LossKind::classic ? classic_style_grad(target, fp, n)
                                                               : balanced_style_grad(target, fp, n);
            const double scale = beta * layer.weight;
            for (double& v : g.data) v *= scale;
            ev.grads.emplace_back(layer.tap, std::move(g));
        }
    }
    const FeatureMap& fc = cache.features.at(loss.content_layer);
    const double content = content_loss(content_target, fc);
    if (with_grads) ev.grads.emplace_back(loss.content_layer, content_grad(content_target, fc));
    ev.objective = nst_total(content, style, beta);
    return ev;
}

StylizeResult optimize(const FeatNet& net, const Image& content, const Image& style,
                       const std::map<std::string, GramMatrix>& targets, const OptimizeConfig& cfg) {
    std::set<std::string> taps = style_tap_set(cfg.loss);
    taps.insert(cfg.loss.content_layer);

    const FeatureMap content_target = net.forward(content, {cfg.loss.content_layer}).at(cfg.loss.content_layer);
    StylizeResult result;
    result.beta = cfg.auto_beta ? calibrate_beta(net, content, style, cfg.loss, cfg.loss_kind) : cfg.loss.beta;

    std::vector<double> x(content.data().begin(), content.data().end());
    if (cfg.init == InitKind::noise) {
        SplitMix64 rng(cfg.seed);
        for (double& v : x) v = rng.uniform();
    }

    constexpr double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
    std::vector<double> m(x.size(), 0.0), v(x.size(), 0.0);
    double b1t = 1.0, b2t = 1.0;
    for (std::size_t t = 0;; ++t) {
        const Image current(content.shape(), x);
        const ForwardCache cache = net.forward_with_cache(current, taps);
        const bool last = t == cfg.steps;
        Evaluation ev = evaluate(cache, content_target, targets, cfg, result.beta, !last);
        result.trajectory.push_back(ev.objective);
        result.balanced_trace.push_back(std::move(ev.balanced));
        if (last) break;

        const GradientMap g = backprop_pixels(net, cache, ev.grads);
        b1t *= b1;
        b2t *= b2;
        for (std::size_t i = 0; i < x.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g.data[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g.data[i] * g.data[i];
            const double mhat = m[i] / (1.0 - b1t);
            const double vhat = v[i] / (1.0 - b2t);
            x[i] = std::clamp(x[i] - cfg.step_size * mhat / (std::sqrt(vhat) + adam_eps), 0.0, 1.0);
        }
    }
    result.pastiche = Image(content.shape(), std::move(x));
    result.final_score = score_pastiche(net, content, style, result.pastiche, cfg.loss);
    return result;
}

void check_inputs(const FeatNet& net, const Image& content, const Image& style, const OptimizeConfig& cfg) {
    cfg.validate();
    check_net_compat(net, content, "content");
    check_net_compat(net, style, "style");
    for (const auto& l : cfg.loss.style_layers) net.tap_layer(l.tap);
    net.tap_layer(cfg.loss.content_layer);
}

}  // namespace

PairScore score_pastiche(const FeatNet& net, const Image& content, const Image& style, const Image& pastiche,
                         const LossConfig& loss) {
    loss.validate();
    if (content.shape() != pastiche.shape())
        throw DimensionError("content image is " + to_string(content.shape()) + " but pastiche is " +
                             to_string(pastiche.shape()));
    check_net_compat(net, content, "content");
    check_net_compat(net, style, "style");

    std::set<std::string> taps = style_tap_set(loss);
    taps.insert(loss.content_layer);
    const auto targets = style_grams(net, style, loss);
    const auto fp = net.forward(pastiche, taps);
    const FeatureMap fc = net.forward(content, {loss.content_layer}).at(loss.content_layer);

    PairScore s;
    for (const auto& layer : loss.style_layers) {
        const FeatureMap& f = fp.at(layer.tap);
        LayerLossReport r = layer_report(layer.tap, targets.at(layer.tap), gram(f), norm_constant(f, loss.normalization));
        s.classic_total += layer.weight * r.classic;
        s.sup_total += layer.weight * r.sup;
        s.inf_total += layer.weight * r.inf;
        s.balanced_total += layer.weight * r.balanced;
        s.layers.push_back(std::move(r));
    }
    s.content = content_loss(fc, fp.at(loss.content_layer));
    return s;
}

double calibrate_beta(const FeatNet& net, const Image& content, const Image& style, const LossConfig& loss,
                      LossKind kind) {
    if (content.shape() != style.shape())
        throw ConfigError("beta calibration needs equally sized content and style images, got " +
                          to_string(content.shape()) + " and " + to_string(style.shape()));
    // Content term between the two images, style term between their Grams.
    const PairScore s = score_pastiche(net, content, style, content, loss);
    const PairScore c = score_pastiche(net, style, style, content, loss);
    const double style_term = kind == LossKind::classic ? s.classic_total : s.balanced_total;
    if (style_term == 0.0 || c.content == 0.0) return 1.0;
    return c.content / style_term;
}

StylizeResult stylize(const FeatNet& net, const Image& content, const Image& style, const OptimizeConfig& cfg) {
    check_inputs(net, content, style, cfg);
    return optimize(net, content, style, style_grams(net, style, cfg.loss), cfg);
}

StylizeResult interpolation_baseline(const FeatNet& net, const Image& content, const Image& style, double alpha,
                                     const OptimizeConfig& cfg) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("alpha must lie in [0, 1]");
    check_inputs(net, content, style, cfg);
    const auto gs = style_grams(net, style, cfg.loss);
    const auto gc = style_grams(net, content, cfg.loss);
    std::map<std::string, GramMatrix> targets;
    for (const auto& [tap, g] : gs) targets.emplace(tap, interpolated_style_target(g, gc.at(tap), alpha));
    return optimize(net, content, style, targets, cfg);
}

SweepResult sweep(const FeatNet& net, const std::vector<NamedImage>& contents, const std::vector<NamedImage>& styles,
                  const OptimizeConfig& cfg, const SweepOptions& opts) {
    if (contents.empty() || styles.empty()) throw UsageError("sweep needs at least one content and one style image");
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    if (opts.pairing == Pairing::zipped) {
        if (contents.size() != styles.size())
            throw UsageError("zipped sweep needs equally many contents (" + std::to_string(contents.size()) +
                             ") and styles (" + std::to_string(styles.size()) + ")");
        for (std::size_t i = 0; i < contents.size(); ++i) tasks.emplace_back(i, i);
    } else {
        for (std::size_t c = 0; c < contents.size(); ++c)
            for (std::size_t s = 0; s < styles.size(); ++s) tasks.emplace_back(c, s);
    }
    for (const auto& c : contents) check_inputs(net, c.image, styles.front().image, cfg);
    for (const auto& s : styles) check_net_compat(net, s.image, "style");

    SweepResult result;
    result.rows.resize(tasks.size());
    result.pastiches.resize(tasks.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(tasks.size());
    auto worker = [&] {
        for (std::size_t k = next.fetch_add(1); k < tasks.size(); k = next.fetch_add(1)) try {
            const auto& content = contents[tasks[k].first];
            const auto& style = styles[tasks[k].second];
            OptimizeConfig task_cfg = cfg;
            task_cfg.seed = derive_key(cfg.seed, k);
            StylizeResult r = stylize(net, content.image, style.image, task_cfg);
            SweepRow& row = result.rows[k];
            row.style_id = style.id;
            row.content_id = content.id;
            row.classic = r.final_score.classic_total;
            row.balanced = r.final_score.balanced_total;
            row.content = r.final_score.content;
            row.steps = cfg.steps;
            row.layers = std::move(r.final_score.layers);
            result.pastiches[k] = std::move(r.pastiche);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, tasks.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return result;
}

}  // namespace stylebal

// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "stylebal/cli.hpp"
#include "stylebal/error.hpp"
#include "stylebal/grad.hpp"
#include "stylebal/io.hpp"
#include "stylebal/rng.hpp"
#include "stylebal/stylizer.hpp"
#include "stylebal/textures.hpp"

namespace stylebal {
namespace {

class Suite {
public:
    void check(const std::string& name, bool ok, double value, const std::string& detail = {}) {
        results_.push_back({name, ok, value, ok ? std::string{} : (detail.empty() ? "check failed" : detail)});
    }

    void near(const std::string& name, double value, double expected, double tol) {
        const bool ok = std::abs(value - expected) <= tol;
        check(name, ok, value, "got " + format_double(value) + ", want " + format_double(expected));
    }

    void at_most(const std::string& name, double value, double limit) {
        check(name, value <= limit, value, "got " + format_double(value) + ", limit " + format_double(limit));
    }

    template <typename E>
    void throws(const std::string& name, const std::function<void()>& fn, const std::string& needle = {}) {
        try {
            fn();
        } catch (const E& e) {
            const std::string what = e.what();
            check(name, needle.empty() || what.find(needle) != std::string::npos, 0.0,
                  "message lacks '" + needle + "': " + what);
            return;
        } catch (const std::exception& e) {
            check(name, false, 0.0, std::string("wrong exception: ") + e.what());
            return;
        }
        check(name, false, 0.0, "no exception");
    }

    /// Runs fn, turning any escaped exception into a failure of `name`.
    void guard(const std::string& name, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            check(name, false, 0.0, std::string("unexpected exception: ") + e.what());
        }
    }

    std::vector<FixtureResult> take() { return std::move(results_); }

private:
    std::vector<FixtureResult> results_;
};

bool same(std::span<const double> a, std::initializer_list<double> b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

GramMatrix g2(double a, double b, double c, double d) { return GramMatrix(2, {a, b, c, d}, true); }

const GramMatrix kG = g2(4, 6, 6, 9);

void tensor_fixtures(Suite& s) {
    const FeatureMap a({1, 1, 2}, {2, 3});
    const MatrixView va = flatten_spatial(a);
    s.check("tensor.flatten.single_pixel", va.rows() == 1 && va.cols() == 2 && same(va.data(), {2, 3}), va(0, 1));
    const FeatureMap b({2, 1, 2}, {1, 0, 0, 1});
    const MatrixView vb = flatten_spatial(b);
    s.check("tensor.flatten.layout", vb.rows() == 2 && vb(0, 0) == 1 && vb(0, 1) == 0 && vb(1, 1) == 1, vb(1, 1));
    const FeatureMap c({1, 2, 1}, {5, 7});
    const MatrixView vc = flatten_spatial(c);
    s.check("tensor.flatten.columns", vc.rows() == 2 && vc.cols() == 1 && vc(1, 0) == 7, vc(1, 0));

    s.near("tensor.norm.gram", frobenius_norm(kG.view()), 13.0, 0.0);
    const std::vector<double> z(9, 0.0);
    s.near("tensor.norm.zero", frobenius_norm(MatrixView(3, 3, z)), 0.0, 0.0);
    const std::vector<double> t = {3, 4};
    s.near("tensor.norm.345", frobenius_norm(MatrixView(2, 1, t)), 5.0, 0.0);

    const std::vector<double> m1 = {1, 2}, m2 = {3, 2}, m3 = {0}, m4 = {5};
    s.near("tensor.mse.identical", mse(MatrixView(1, 2, m1), MatrixView(1, 2, m1)), 0.0, 0.0);
    s.near("tensor.mse.pair", mse(MatrixView(1, 2, m1), MatrixView(1, 2, m2)), 2.0, 0.0);
    s.near("tensor.mse.single", mse(MatrixView(1, 1, m3), MatrixView(1, 1, m4)), 25.0, 0.0);
}

void gram_fixtures(Suite& s) {
    const GramMatrix g = gram(FeatureMap({1, 1, 2}, {2, 3}, true));
    s.check("gram.single_pixel", same(g.data(), {4, 6, 6, 9}), g(1, 1));
    const GramMatrix z = gram(FeatureMap::zeros({3, 2, 4}));
    s.check("gram.zero", std::all_of(z.data().begin(), z.data().end(), [](double v) { return v == 0.0; }), z.norm());
    const GramMatrix id = gram(FeatureMap({2, 1, 2}, {1, 0, 0, 1}, true));
    s.check("gram.identity", same(id.data(), {1, 0, 0, 1}), id(0, 0));

    const FeatureMap one({1, 1, 1}, {1.0});
    s.near("gram.norm_constant.channels", norm_constant(one, Normalization::channels_squared), 1.0, 0.0);
    s.near("gram.norm_constant.spatial", norm_constant(one, Normalization::spatial_product), 1.0, 0.0);

    const GramMatrix zero = GramMatrix::zeros(2);
    const GramMatrix e1 = g2(1, 0, 0, 0), e2 = g2(0, 0, 0, 1);
    s.near("gram.classic.identical", classic_layer_loss(kG, kG, 4), 0.0, 0.0);
    s.near("gram.classic.vs_zero", classic_layer_loss(kG, zero, 4), 42.25, 1e-12);
    s.near("gram.classic.disjoint", classic_layer_loss(e1, e2, 1), 2.0, 0.0);
    s.near("gram.sup.vs_zero", sup_bound(kG, zero, 4), 42.25, 1e-12);
    s.near("gram.sup.zero", sup_bound(zero, zero, 1), 0.0, 0.0);
    s.near("gram.sup.disjoint_equality", sup_bound(e1, e2, 1), classic_layer_loss(e1, e2, 1), 0.0);
    s.near("gram.inf.parallel", inf_bound(kG, g2(16, 24, 24, 36), 1), 1521.0, 1e-9);
    s.near("gram.inf.equal", inf_bound(kG, kG, 1), 0.0, 0.0);
    s.near("gram.inf.vs_zero", inf_bound(kG, zero, 4), 42.25, 1e-12);
    s.near("gram.balanced.identical", balanced_layer_loss(kG, kG, 3), 0.0, 0.0);
    s.near("gram.balanced.vs_zero", balanced_layer_loss(kG, zero, 3), 1.0, 1e-15);
    const GramMatrix k9 = g2(36, 54, 54, 81), p = g2(1, 2, 2, 5), p9 = g2(9, 18, 18, 45);
    s.near("gram.balanced.scale_invariant", balanced_layer_loss(k9, p9, 2), balanced_layer_loss(kG, p, 2), 1e-15);

    const std::vector<std::pair<LayerSpec, double>> w1 = {{{"a", 1.0}, 0.3}};
    const std::vector<std::pair<LayerSpec, double>> w2 = {{{"a", 1.0}, 0.2}, {{"b", 1.0}, 0.5}};
    const std::vector<std::pair<LayerSpec, double>> w3 = {{{"a", 2.0}, 0.2}, {{"b", 0.0}, 0.5}};
    s.near("gram.total.single", style_loss_total(w1), 0.3, 0.0);
    s.near("gram.total.unit", style_loss_total(w2), 0.7, 1e-15);
    s.near("gram.total.weighted", style_loss_total(w3), 0.4, 1e-15);

    const FeatureMap c1({1, 1, 2}, {1, 2}), c2({1, 1, 2}, {3, 2});
    s.near("gram.content.identical", content_loss(c1, c1), 0.0, 0.0);
    s.near("gram.content.pair", content_loss(c1, c2), 2.0, 0.0);
    s.near("gram.content.offset", content_loss(FeatureMap::zeros({2, 2, 1}), FeatureMap({2, 2, 1}, {5, 5, 5, 5})),
           25.0, 0.0);

    s.near("gram.nst.zero_style", nst_total(1.0, 0.0, 10.0), 1.0, 0.0);
    s.near("gram.nst.zero_content", nst_total(0.0, 2.0, 10.0), 20.0, 0.0);
    s.near("gram.nst.direct", nst_total(1.0, 2.0, 0.5), 2.0, 0.0);

    const std::vector<double> l2 = {1, 3}, l3 = {1, 2, 3};
    const std::vector<double> half = {0.5, 0.5}, mask = {1, 0}, ones = {1, 1, 1};
    s.near("gram.batch.mean", batch_aggregate(l2, half), 2.0, 0.0);
    s.near("gram.batch.mask", batch_aggregate(l2, mask), 1.0, 0.0);
    s.near("gram.batch.sum", batch_aggregate(l3, ones), 6.0, 0.0);

    const GramMatrix gc = g2(0, 1, 1, 2);
    s.check("gram.interp.alpha1", interpolated_style_target(kG, gc, 1.0).data()[1] == 6.0, 1.0);
    s.check("gram.interp.alpha0", interpolated_style_target(kG, gc, 0.0).data()[3] == 2.0, 0.0);
    const GramMatrix mid = interpolated_style_target(GramMatrix(1, {2}, true), GramMatrix(1, {4}, true), 0.5);
    s.near("gram.interp.midpoint", mid(0, 0), 3.0, 0.0);
}

FeatNet passthrough(double w) {
    NetConfig cfg;
    cfg.layers = {LayerDesc::conv(1, 1, 1), LayerDesc::relu("t")};
    return FeatNet::from_parameters(cfg, {ConvParams{1, 1, 1, {w}, {0.0}}});
}

void grad_fixtures(Suite& s) {
    const FeatureMap fc({2, 1, 1}, {0.5, 1.5});
    s.check("grad.content.minimum", same(content_grad(fc, fc).data, {0, 0}), 0.0);
    s.near("grad.content.single", content_grad(FeatureMap({1, 1, 1}, {1}), FeatureMap({1, 1, 1}, {3})).data[0], 4.0,
           0.0);
    const FeatureMap c0({1, 1, 2}, {0, 0}), c1({1, 1, 2}, {1, -2}), c3({1, 1, 2}, {3, -6});
    const auto g1 = content_grad(c0, c1).data, g3 = content_grad(c0, c3).data;
    s.check("grad.content.linear", g3[0] == 3 * g1[0] && g3[1] == 3 * g1[1], g3[0]);

    const FeatureMap f2({1, 1, 1}, {2}, true), f1({1, 1, 1}, {1}, true);
    const FeatureMap fr({2, 2, 2}, {0.1, 0.9, 0.3, 0.0, 0.7, 0.2, 0.4, 0.6}, true);
    s.check("grad.classic.minimum", classic_style_grad(fr, fr, 4).data == std::vector<double>(8, 0.0), 0.0);
    s.near("grad.classic.scalar", classic_style_grad(f1, f2, 1).data[0], 24.0, 1e-12);
    s.near("grad.classic.double_n", classic_style_grad(f1, f2, 2).data[0], 12.0, 1e-12);
    s.check("grad.balanced.minimum", balanced_style_grad(fr, fr, 4).data == std::vector<double>(8, 0.0), 0.0);
    s.near("grad.balanced.scalar", balanced_style_grad(f1, f2, 1).data[0], 24.0 / 17.0, 1e-12);

    s.guard("grad.backprop.zero", [&] {
        const FeatNet net = FeatNet::build(NetConfig::default_arch(0));
        const Image img = random_image({8, 8, 3}, 1);
        const GradientMap px =
            backprop_pixels(net, img, {{"b2_r2", GradientMap::zeros(net.tap_shape("b2_r2", 8, 8))}});
        s.check("grad.backprop.zero", std::all_of(px.data.begin(), px.data.end(), [](double v) { return v == 0.0; }),
                0.0);
    });
    s.guard("grad.backprop.passthrough", [&] {
        const FeatNet net = passthrough(1.0);
        const Image img({1, 3, 1}, {0.0, 0.5, 1.0});
        const GradientMap px = backprop_pixels(net, img, {{"t", GradientMap{{1, 3, 1}, {2.0, -1.0, 3.0}}}});
        s.check("grad.backprop.passthrough", same(px.data, {0.0, -1.0, 3.0}), px.data[2]);
    });
    s.guard("grad.backprop.network_fd", [&] { s.at_most("grad.backprop.network_fd", run_gradcheck(0, 0, true).network, 1e-4); });

    const auto square = [](std::span<const double> x) { return x[0] * x[0]; };
    const std::vector<double> x = {3.0};
    s.at_most("grad.fd.quadratic", finite_diff_check(square, x, std::vector<double>{6.0}, 1e-5), 1e-9);
    s.near("grad.fd.factor_two", finite_diff_check(square, x, std::vector<double>{12.0}, 1e-5), 0.5, 1e-6);
    s.guard("grad.fd.classic_seed0", [&] { s.at_most("grad.fd.classic_seed0", run_gradcheck(0, 100, false).classic, 1e-6); });
}

void featnet_fixtures(Suite& s) {
    const NetConfig cfg = NetConfig::default_arch(7);
    const FeatNet a = FeatNet::build(cfg), b = FeatNet::build(cfg);
    bool identical = true, zero_bias = true;
    for (std::size_t i = 0; i < a.parameters().size(); ++i) {
        identical = identical && a.parameters()[i].weights == b.parameters()[i].weights;
        for (double v : a.parameters()[i].bias) zero_bias = zero_bias && v == 0.0;
    }
    s.check("featnet.build.deterministic", identical, 0.0);
    s.check("featnet.build.zero_bias", zero_bias, 0.0);

    const auto taps = a.tap_names();
    const std::set<std::string> all(taps.begin(), taps.end());
    const auto fz = a.forward(Image::filled({16, 16, 3}, 0.0), all);
    bool zero = true;
    for (const auto& [tag, f] : fz)
        for (double v : f.data()) zero = zero && v == 0.0;
    s.check("featnet.forward.zero_image", zero, 0.0);

    const auto fp = passthrough(1.0).forward(Image({1, 1, 1}, {0.5}), {"t"});
    s.near("featnet.forward.passthrough", fp.at("t").data()[0], 0.5, 0.0);
    const auto fn = passthrough(-0.4).forward(Image({1, 1, 1}, {0.5}), {"t"});
    s.near("featnet.forward.relu_clamp", fn.at("t").data()[0], 0.0, 0.0);

    const Image img = random_image({16, 16, 3}, 3);
    const auto plain = a.forward(img, all);
    const ForwardCache cache = a.forward_with_cache(img, all);
    bool replay = true;
    for (const auto& [tag, f] : plain) replay = replay && std::ranges::equal(f.data(), cache.features.at(tag).data());
    s.check("featnet.cache.replay", replay, 0.0);
    std::size_t total = 0;
    for (const auto& act : cache.activations) total += act.size();
    s.check("featnet.cache.size", total == cache.element_count(), static_cast<double>(total));
}

OptimizeConfig quick(std::size_t steps) {
    OptimizeConfig cfg;
    cfg.steps = steps;
    cfg.loss.beta = 1e-3;
    return cfg;
}

void stylizer_fixtures(Suite& s) {
    const FeatNet net = FeatNet::build(NetConfig::default_arch(0));
    s.guard("stylizer.zero_steps", [&] {
        const Image c = procedural_texture(16, 16, 1), st = procedural_texture(16, 16, 2);
        s.check("stylizer.zero_steps", stylize(net, c, st, quick(0)).pastiche == c, 0.0);
    });
    s.guard("stylizer.fixed_point", [&] {
        const Image c = procedural_texture(16, 16, 3);
        const StylizeResult r = stylize(net, c, c, quick(5));
        s.check("stylizer.fixed_point", r.pastiche == c && r.trajectory.front() == 0.0, r.trajectory.front());
    });
    s.guard("stylizer.descent", [&] {
        const Image c = random_image({64, 64, 3}, 10), st = random_image({64, 64, 3}, 11, 0.0, 0.6);
        OptimizeConfig cfg = quick(200);
        cfg.auto_beta = true;
        const StylizeResult r = stylize(net, c, st, cfg);
        s.check("stylizer.descent", r.trajectory.back() < r.trajectory.front(), r.trajectory.back() / r.trajectory.front());
    });

    const Image c = procedural_texture(16, 16, 20), st = procedural_texture(16, 16, 21);
    s.guard("stylizer.sweep.degenerate", [&] {
        OptimizeConfig cfg = quick(4);
        const SweepResult sw = sweep(net, {{"c", c}}, {{"s", st}}, cfg);
        cfg.seed = derive_key(cfg.seed, 0);
        const StylizeResult r = stylize(net, c, st, cfg);
        s.check("stylizer.sweep.degenerate", sw.pastiches.size() == 1 && sw.pastiches[0] == r.pastiche &&
                                                 sw.rows[0].classic == r.final_score.classic_total,
                sw.rows[0].classic);
    });
    s.guard("stylizer.sweep.spread", [&] {
        std::vector<NamedImage> styles;
        for (std::uint64_t i = 0; i < 20; ++i) styles.push_back({"s" + std::to_string(i), procedural_texture(16, 16, 100 + i)});
        const SweepResult sw = sweep(net, {{"c", procedural_texture(16, 16, 99)}}, styles, quick(20));
        bool both = true;
        double cmin = INFINITY, cmax = 0, bmin = INFINITY, bmax = 0;
        for (const auto& r : sw.rows) {
            both = both && r.layers.size() == 4 && std::isfinite(r.classic) && std::isfinite(r.balanced);
            cmin = std::min(cmin, r.classic), cmax = std::max(cmax, r.classic);
            bmin = std::min(bmin, r.balanced), bmax = std::max(bmax, r.balanced);
        }
        s.check("stylizer.sweep.both_metrics", both, static_cast<double>(sw.rows.size()));
        s.check("stylizer.sweep.spread", cmax / cmin > bmax / bmin, (cmax / cmin) / (bmax / bmin),
                "classic ratio " + format_double(cmax / cmin) + " vs balanced " + format_double(bmax / bmin));
    });
    s.guard("stylizer.interp.self_target", [&] {
        s.check("stylizer.interp.self_target", interpolation_baseline(net, c, st, 0.0, quick(3)).pastiche == c, 0.0);
    });
    s.guard("stylizer.interp.endpoint", [&] {
        s.check("stylizer.interp.endpoint",
                interpolation_baseline(net, c, st, 1.0, quick(6)).pastiche == stylize(net, c, st, quick(6)).pastiche, 0.0);
    });
    s.guard("stylizer.interp.midpoint", [&] {
        const Image c2 = procedural_texture(32, 32, 12), s2 = procedural_texture(32, 32, 13);
        OptimizeConfig cfg = quick(60);
        cfg.auto_beta = true;
        const double l0 = interpolation_baseline(net, c2, s2, 0.0, cfg).final_score.classic_total;
        const double lh = interpolation_baseline(net, c2, s2, 0.5, cfg).final_score.classic_total;
        const double l1 = interpolation_baseline(net, c2, s2, 1.0, cfg).final_score.classic_total;
        s.check("stylizer.interp.midpoint", l1 < lh && lh < l0, lh);
    });
    s.throws<DimensionError>(
        "stylizer.score.shape_mismatch",
        [&] { score_pastiche(net, c, st, procedural_texture(32, 32, 1), LossConfig::defaults()); }, "32x32x3");
}

void analysis_fixtures(Suite& s) {
    const std::vector<double> x = {1, 2, 3};
    s.near("analysis.pearson.linear", pearson(x, std::vector<double>{2, 4, 6}), 1.0, 1e-15);
    s.near("analysis.pearson.anti", pearson(x, std::vector<double>{6, 4, 2}), -1.0, 1e-15);
    s.near("analysis.pearson.hand", pearson(x, std::vector<double>{1, 1, 2}), std::sqrt(3.0) / 2.0, 1e-4);

    const Histogram h = histogram(std::vector<double>{0, 0.5, 1.0}, 2, 0, 1);
    s.check("analysis.hist.boundary", h.counts == std::vector<std::size_t>{1, 2}, static_cast<double>(h.counts[1]));
    const Histogram he = histogram(std::vector<double>{}, 3, 0, 1);
    s.check("analysis.hist.empty", he.counts == std::vector<std::size_t>(3, 0), 0.0);
    const Histogram ho = histogram(std::vector<double>{-1, 2}, 2, 0, 1);
    s.check("analysis.hist.overflow",
            ho.counts == std::vector<std::size_t>{0, 0} && ho.underflow == 1 && ho.overflow == 1, 0.0);

    const LinearFit fit = linear_fit(x, std::vector<double>{3, 5, 7});
    s.check("analysis.fit.exact", std::abs(fit.slope - 2) < 1e-12 && std::abs(fit.intercept - 1) < 1e-12 &&
                                      std::abs(fit.r - 1) < 1e-12,
            fit.slope);
    s.throws<CorrelationError>("analysis.fit.constant", [&] { linear_fit(x, std::vector<double>{4, 4, 4}); });

    s.guard("analysis.fit.sup_vs_classic", [&] {
        const FeatNet net = FeatNet::build(NetConfig::default_arch(0));
        const LossConfig loss = LossConfig::defaults();
        const auto taps = loss.style_taps();
        const std::set<std::string> want(taps.begin(), taps.end());
        std::vector<std::vector<double>> sx(taps.size()), sy(taps.size());
        for (std::uint64_t i = 0; i < 200; ++i) {
            const auto fa = net.forward(procedural_texture(32, 32, derive_key(0, 2 * i)), want);
            const auto fb = net.forward(procedural_texture(32, 32, derive_key(0, 2 * i + 1)), want);
            for (std::size_t l = 0; l < taps.size(); ++l) {
                const FeatureMap& p = fb.at(taps[l]);
                const double n = norm_constant(p, loss.normalization);
                const GramMatrix ga = gram(fa.at(taps[l])), gb = gram(p);
                sx[l].push_back(sup_bound(ga, gb, n));
                sy[l].push_back(classic_layer_loss(ga, gb, n));
            }
        }
        double worst = 1.0;
        for (std::size_t l = 0; l < taps.size(); ++l) worst = std::min(worst, linear_fit(sx[l], sy[l]).r);
        s.check("analysis.fit.sup_vs_classic", worst > 0.9, worst, "min r " + format_double(worst));
    });

    const FeatureBank styles = {{"a", "A", {0, 0}}, {"b", "B", {10, 10}}};
    s.near("analysis.deception.clusters", deception_rate({{"p", "A", {1, 1}}}, styles), 1.0, 0.0);
    s.near("analysis.deception.wrong", deception_rate({{"p", "A", {9, 9}}}, styles), 0.0, 0.0);
    const FeatureBank mixed = {{"p0", "A", {1, 1}}, {"p1", "B", {9, 8}}, {"p2", "A", {9, 9}}, {"p3", "B", {0, 2}}};
    s.near("analysis.deception.mixed", deception_rate(mixed, styles), 0.5, 0.0);

    s.guard("analysis.corr.aligned", [&] {
        LossTable t{{"l1", "l2"}, {1.0, 1.0}, {}, {}};
        std::vector<AnnotationRecord> ann;
        for (int i = 0; i < 30; ++i) {
            const int score = i % 3 - 1;
            t.ids.push_back("x" + std::to_string(i));
            t.rows.push_back({0.5 * score + 2.0, 1.5 * score + 7.0});
            ann.push_back({t.ids.back(), score});
        }
        s.near("analysis.corr.aligned", correlation_report(t, ann).back().r, 1.0, 1e-12);
    });
    s.guard("analysis.corr.shuffled", [&] {
        SplitMix64 rng(2024);
        LossTable t{{"l1"}, {1.0}, {}, {}};
        std::vector<int> scores;
        for (int i = 0; i < 1000; ++i) {
            scores.push_back(static_cast<int>(rng.below(3)) - 1);
            t.ids.push_back("x" + std::to_string(i));
            t.rows.push_back({scores.back() + 0.1 * rng.uniform()});
        }
        for (std::size_t i = scores.size() - 1; i > 0; --i) std::swap(scores[i], scores[rng.below(i + 1)]);
        std::vector<AnnotationRecord> ann;
        for (int i = 0; i < 1000; ++i) ann.push_back({t.ids[i], scores[i]});
        const double r = correlation_report(t, ann).back().r;
        s.check("analysis.corr.shuffled", std::abs(r) < 0.1, r);
    });

    const MomentSpec u13 = MomentSpec::two_point(1, 3);
    s.guard("analysis.mc.two_point", [&] {
        const McResult mc = mc_expectation_bounds(u13, u13, 100000, 0);
        const BoundPair b = expectation_bounds(u13, u13);
        s.check("analysis.mc.two_point",
                std::abs(mc.estimate - 2.0) < 0.05 && b.lower == 2.0 && b.upper == 10.0 && mc.within, mc.estimate);
    });
    s.guard("analysis.mc.point_mass", [&] {
        const MomentSpec pm = MomentSpec::point_mass(1.5);
        const McResult mc = mc_expectation_bounds(pm, pm, 1000, 0);
        s.check("analysis.mc.point_mass", mc.estimate == 0.0 && mc.lower == 0.0 && mc.upper == 4.5 && mc.within,
                mc.estimate);
    });
    s.guard("analysis.mc.deterministic", [&] {
        const McResult mc = mc_expectation_bounds(MomentSpec::point_mass(1), MomentSpec::point_mass(4), 1000, 0);
        s.check("analysis.mc.deterministic", mc.estimate == 9.0 && mc.lower == 9.0 && mc.upper == 17.0 && mc.within,
                mc.estimate);
    });
    const MomentSpec p2 = MomentSpec::point_mass(2);
    s.near("analysis.relaxed.equal_means", relaxed_bounds(u13, u13, 2.0).lower, 0.0, 0.0);
    s.near("analysis.relaxed.direct", relaxed_bounds(p2, p2, 2.5).upper, 20.0, 0.0);
    s.check("analysis.relaxed.weaker",
            relaxed_bounds(u13, p2, 1.0).lower <= expectation_bounds(u13, p2).lower,
            relaxed_bounds(u13, p2, 1.0).lower);
}

std::vector<std::uint8_t> bytes_of(const std::string& header, std::initializer_list<int> payload) {
    std::vector<std::uint8_t> b(header.begin(), header.end());
    for (int v : payload) b.push_back(static_cast<std::uint8_t>(v));
    return b;
}

void io_fixtures(Suite& s) {
    s.guard("io.pnm.roundtrip", [&] {
        const Image img = random_image({7, 5, 3}, 4);
        const Image back = decode_pnm(encode_pnm(img));
        double worst = 0.0;
        for (std::size_t i = 0; i < img.data().size(); ++i) worst = std::max(worst, std::abs(back.data()[i] - img.data()[i]));
        s.at_most("io.pnm.roundtrip", worst, 1.0 / 510.0 + 1e-15);
    });
    s.guard("io.pnm.p6", [&] {
        const Image img = decode_pnm(bytes_of("P6 2 1 255\n", {255, 0, 0, 0, 0, 0}));
        s.check("io.pnm.p6", img.shape() == Shape{1, 2, 3} && same(img.data(), {1, 0, 0, 0, 0, 0}), img.at(0, 0, 0));
    });
    s.throws<DataError>("io.pnm.maxval", [] { decode_pnm(bytes_of("P6 2 1 65535\n", {})); }, "maxval");
    s.throws<DataError>("io.pnm.truncated", [] { decode_pnm(bytes_of("P5 2 2 255\n", {1})); }, "truncated at byte 12");

    const NetConfig cfg = NetConfig::default_arch(0);
    const FeatNet net = FeatNet::build(cfg);
    const auto wb = encode_weights(net);
    s.guard("io.weights.roundtrip", [&] {
        const FeatNet back = decode_weights(wb, cfg);
        bool ok = true;
        for (std::size_t i = 0; i < net.parameters().size(); ++i)
            ok = ok && back.parameters()[i].weights == net.parameters()[i].weights &&
                 back.parameters()[i].bias == net.parameters()[i].bias;
        s.check("io.weights.roundtrip", ok, 0.0);
    });
    s.throws<DataError>("io.weights.magic", [&] {
        auto bad = wb;
        bad[3] = '2';
        decode_weights(bad, cfg);
    }, "magic");
    s.throws<DataError>("io.weights.dims", [&] {
        NetConfig other = cfg;
        other.layers[2] = LayerDesc::conv(8, 8, 5);
        decode_weights(wb, other);
    }, "conv layer 1");

    s.guard("io.report.roundtrip", [&] {
        PairScore ps;
        ps.layers = {{"b1_r2", 1.0 / 3.0, 2.0 / 3.0, 1e-300, 0.1}, {"b2_r2", std::sqrt(2.0), 1e20, 0.0, 1.0}};
        ps.classic_total = ps.layers[0].classic + ps.layers[1].classic;
        const auto rows = report_rows("p", "c", "s", ps);
        std::stringstream ss;
        write_report_csv(ss, rows);
        s.check("io.report.roundtrip", read_report_csv(ss) == rows, 0.0);
    });
    s.throws<DataError>("io.annotations.domain", [] {
        std::stringstream in("id,score\na,1\nb,2\n");
        read_annotations_csv(in);
    }, "line 3");
    s.throws<DataError>("io.bank.ragged", [] {
        std::stringstream in("id,artist,v0,v1\nx,A,1,2\ny,B,1\n");
        read_feature_bank_csv(in);
    });
    s.guard("io.gradcheck.seed0", [&] { s.at_most("io.gradcheck.seed0", run_gradcheck(0, 100, false).feature_max(), 1e-6); });
}

}  // namespace

const std::vector<std::string>& known_failing_fixtures() {
    static const std::vector<std::string> names = {"stylizer.sweep.spread", "analysis.fit.sup_vs_classic"};
    return names;
}

std::vector<FixtureResult> run_selftest() {
    Suite s;
    tensor_fixtures(s);
    gram_fixtures(s);
    grad_fixtures(s);
    featnet_fixtures(s);
    stylizer_fixtures(s);
    analysis_fixtures(s);
    io_fixtures(s);
    auto results = s.take();
    const auto& known = known_failing_fixtures();
    for (auto& r : results) r.known = std::find(known.begin(), known.end(), r.name) != known.end();
    return results;
}

}  // namespace stylebal

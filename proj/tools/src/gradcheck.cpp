// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <set>

#include "stylebal/cli.hpp"
#include "stylebal/grad.hpp"
#include "stylebal/rng.hpp"
#include "stylebal/textures.hpp"

namespace stylebal {
namespace {

FeatureMap random_map(Shape s, SplitMix64& rng, double zero_frac) {
    std::vector<double> d(s.count());
    for (double& v : d) v = rng.uniform() < zero_frac ? 0.0 : rng.uniform(0.05, 1.0);
    return FeatureMap(s, std::move(d), true);
}

FeatureMap at_point(Shape s, std::span<const double> x) {
    return FeatureMap(s, std::vector<double>(x.begin(), x.end()));
}

double network_check(std::uint64_t seed) {
    const FeatNet net = FeatNet::build(NetConfig::default_arch(seed));
    const LossConfig loss = LossConfig::defaults();
    const Shape shape{8, 8, 3};
    const Image style = random_image(shape, derive_key(seed, 1), 0.1, 0.9);
    const Image content = random_image(shape, derive_key(seed, 2), 0.1, 0.9);
    const Image pastiche = random_image(shape, derive_key(seed, 3), 0.1, 0.9);
    const double beta = 1e-3;

    std::set<std::string> taps;
    for (const auto& l : loss.style_layers) taps.insert(l.tap);
    taps.insert(loss.content_layer);
    const auto fs = net.forward(style, taps);
    const auto fc = net.forward(content, taps);

    const auto objective = [&](const std::map<std::string, FeatureMap>& fp) {
        double s = 0.0;
        for (const auto& l : loss.style_layers) {
            const FeatureMap& f = fp.at(l.tap);
            s += l.weight * classic_layer_loss(gram(fs.at(l.tap)), gram(f), norm_constant(f, loss.normalization));
        }
        return nst_total(content_loss(fc.at(loss.content_layer), fp.at(loss.content_layer)), s, beta);
    };

    const auto fp = net.forward(pastiche, taps);
    std::vector<std::pair<std::string, GradientMap>> grads;
    for (const auto& l : loss.style_layers) {
        const FeatureMap& f = fp.at(l.tap);
        GradientMap g = classic_style_grad(fs.at(l.tap), f, norm_constant(f, loss.normalization));
        for (double& v : g.data) v *= beta * l.weight;
        grads.emplace_back(l.tap, std::move(g));
    }
    grads.emplace_back(loss.content_layer, content_grad(fc.at(loss.content_layer), fp.at(loss.content_layer)));
    const GradientMap px = backprop_pixels(net, pastiche, grads);

    const auto f = [&](std::span<const double> x) {
        return objective(net.forward(Image(shape, std::vector<double>(x.begin(), x.end())), taps));
    };
    return finite_diff_check(f, pastiche.data(), px.data);
}

}  // namespace

double GradcheckReport::feature_max() const { return std::max({classic, balanced, content}); }

GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t instances, bool network) {
    GradcheckReport rep;
    rep.instances = instances;
    SplitMix64 rng(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        const std::size_t c = 1 + rng.below(6);
        const Shape ss{1 + rng.below(4), 1 + rng.below(4), c};
        const Shape ps{1 + rng.below(4), 1 + rng.below(4), c};
        const FeatureMap fs = random_map(ss, rng, 0.3);
        const FeatureMap fp = random_map(ps, rng, 0.0);
        // Content targets sit at least 0.05 away from fp in every entry; a
        // near-zero gradient entry makes the relative error ill-conditioned.
        std::vector<double> cd(fp.data().begin(), fp.data().end());
        for (double& v : cd) v += (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 0.5);
        const FeatureMap fc(ps, std::move(cd));
        const Normalization mode = t % 2 ? Normalization::spatial_product : Normalization::channels_squared;
        const double n = norm_constant(fp, mode);
        const GramMatrix gs = gram(fs);

        const auto classic = [&](std::span<const double> x) { return classic_layer_loss(gs, gram(at_point(ps, x)), n); };
        rep.classic = std::max(rep.classic, finite_diff_check(classic, fp.data(), classic_style_grad(fs, fp, n).data));

        const double sup = sup_bound(gs, gram(fp), n);
        if (sup > 0.0) {
            const auto frozen = [&](std::span<const double> x) { return classic(x) / sup; };
            rep.balanced =
                std::max(rep.balanced, finite_diff_check(frozen, fp.data(), balanced_style_grad(fs, fp, n).data));
        }

        const auto content = [&](std::span<const double> x) { return content_loss(fc, at_point(ps, x)); };
        rep.content = std::max(rep.content, finite_diff_check(content, fp.data(), content_grad(fc, fp).data));
    }
    if (network) rep.network = network_check(seed);
    return rep;
}

}  // namespace stylebal

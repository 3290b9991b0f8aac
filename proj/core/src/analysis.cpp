// SPDX-License-Identifier: Apache-2.0
#include "stylebal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "stylebal/error.hpp"
#include "stylebal/rng.hpp"

namespace stylebal {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw DimensionError("pearson inputs differ in length: " + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()));
    if (x.size() < 2) throw CorrelationError("correlation needs at least two samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw CorrelationError("correlation is undefined for a constant sequence");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
    if (bins == 0) throw PreconditionError("histogram needs at least one bin");
    if (!(lo < hi)) throw PreconditionError("histogram range must satisfy lo < hi");
    Histogram h;
    h.counts.assign(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        if (v < lo) {
            ++h.underflow;
        } else if (v > hi) {
            ++h.overflow;
        } else {
            auto b = static_cast<std::size_t>((v - lo) / width);
            h.counts[std::min(b, bins - 1)] += 1;
        }
    }
    return h;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    LinearFit fit;
    fit.r = pearson(x, y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

double deception_rate(const FeatureBank& stylized, const FeatureBank& styles) {
    if (stylized.empty() || styles.empty()) throw UsageError("deception rate needs non-empty feature banks");
    const std::size_t dim = styles.front().vector.size();
    auto check = [dim](const FeatureBankEntry& e) {
        if (e.vector.size() != dim)
            throw DimensionError("feature '" + e.id + "' has dimension " + std::to_string(e.vector.size()) +
                                 ", expected " + std::to_string(dim));
    };
    std::for_each(styles.begin(), styles.end(), check);
    std::for_each(stylized.begin(), stylized.end(), check);

    std::size_t hits = 0;
    for (const auto& q : stylized) {
        const FeatureBankEntry* best = nullptr;
        double best_d = 0.0;
        for (const auto& s : styles) {
            double d = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double t = q.vector[k] - s.vector[k];
                d += t * t;
            }
            if (best == nullptr || d < best_d || (d == best_d && s.id < best->id)) {
                best = &s;
                best_d = d;
            }
        }
        if (best->artist == q.artist) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(stylized.size());
}

std::vector<double> LossTable::totals() const {
    std::vector<double> t(rows.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t l = 0; l < columns.size(); ++l) t[i] += weights[l] * rows[i][l];
    return t;
}

std::vector<ColumnCorrelation> correlation_report(const LossTable& losses,
                                                  const std::vector<AnnotationRecord>& annotations) {
    if (losses.weights.size() != losses.columns.size())
        throw DimensionError("loss table needs one weight per column");
    if (losses.ids.size() != losses.rows.size()) throw DimensionError("loss table needs one id per row");
    for (const auto& row : losses.rows)
        if (row.size() != losses.columns.size()) throw DimensionError("loss table row has the wrong width");

    std::map<std::string, int> scores;
    for (const auto& a : annotations) {
        if (a.score < -1 || a.score > 1)
            throw DataError("annotation '" + a.id + "' has score " + std::to_string(a.score) +
                            " outside {-1, 0, 1}");
        if (!scores.emplace(a.id, a.score).second) throw DataError("duplicate annotation id '" + a.id + "'");
    }
    std::map<std::string, std::size_t> seen;
    std::vector<std::string> missing;
    std::vector<double> h;
    h.reserve(losses.ids.size());
    for (const auto& id : losses.ids) {
        if (!seen.emplace(id, 0).second) throw DataError("duplicate loss id '" + id + "'");
        const auto it = scores.find(id);
        if (it == scores.end()) {
            missing.push_back(id);
            continue;
        }
        h.push_back(static_cast<double>(it->second));
    }
    for (const auto& [id, s] : scores)
        if (!seen.count(id)) missing.push_back(id);
    if (!missing.empty()) {
        std::string msg = "ids without a match:";
        for (const auto& id : missing) msg += " " + id;
        throw DataError(msg);
    }

    std::vector<ColumnCorrelation> out;
    std::vector<double> column(losses.rows.size());
    for (std::size_t l = 0; l < losses.columns.size(); ++l) {
        for (std::size_t i = 0; i < losses.rows.size(); ++i) column[i] = losses.rows[i][l];
        out.push_back({losses.columns[l], pearson(column, h)});
    }
    out.push_back({"total", pearson(losses.totals(), h)});
    return out;
}

MomentSpec::MomentSpec(Sampler sampler) : sampler_(std::move(sampler)) {
    if (const auto* d = std::get_if<DiscreteSampler>(&sampler_)) {
        if (d->values.empty() || d->values.size() != d->probs.size())
            throw PreconditionError("discrete sampler needs matching, non-empty values and probabilities");
        double total = 0.0;
        for (double p : d->probs) {
            if (!(p >= 0.0)) throw PreconditionError("probabilities must be non-negative");
            total += p;
        }
        if (!(std::abs(total - 1.0) <= 1e-9)) throw PreconditionError("probabilities must sum to one");
        double m = 0.0, m2 = 0.0, acc = 0.0;
        for (std::size_t i = 0; i < d->values.size(); ++i) {
            m += d->probs[i] * d->values[i];
            m2 += d->probs[i] * d->values[i] * d->values[i];
            acc += d->probs[i] / total;
            cdf_.push_back(acc);
        }
        cdf_.back() = 1.0;
        mu_ = m;
        sigma_ = std::sqrt(std::max(0.0, m2 - m * m));
        min_ = *std::min_element(d->values.begin(), d->values.end());
    } else {
        const auto& u = std::get<UniformSampler>(sampler_);
        if (!(u.lo <= u.hi)) throw PreconditionError("uniform sampler needs lo <= hi");
        mu_ = 0.5 * (u.lo + u.hi);
        sigma_ = (u.hi - u.lo) / std::sqrt(12.0);
        min_ = u.lo;
    }
}

double MomentSpec::draw(std::uint64_t bits) const {
    const double u = bits_to_unit(bits);
    if (const auto* d = std::get_if<DiscreteSampler>(&sampler_)) {
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return d->values[static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                                           static_cast<std::ptrdiff_t>(cdf_.size()) - 1))];
    }
    const auto& s = std::get<UniformSampler>(sampler_);
    return s.lo + (s.hi - s.lo) * u;
}

BoundPair expectation_bounds(const MomentSpec& a, const MomentSpec& b) {
    const double va = a.sigma() * a.sigma();
    const double vb = b.sigma() * b.sigma();
    const double dm = a.mu() - b.mu();
    return {dm * dm + va + vb, a.mu() * a.mu() + va + b.mu() * b.mu() + vb};
}

BoundPair relaxed_bounds(const MomentSpec& a, const MomentSpec& b, double k) {
    if (!(k > 0.0)) throw PreconditionError("relaxation constant k must be positive");
    const double dm = a.mu() - b.mu();
    return {dm * dm, k * (a.mu() * a.mu() + b.mu() * b.mu())};
}

namespace {

struct BlockSums {
    double sum = 0.0;
    double sum_sq = 0.0;
};

BlockSums run_block(const MomentSpec& a, const MomentSpec& b, std::uint64_t seed, std::size_t block,
                    std::size_t count) {
    SplitMix64 rng(derive_key(seed, block));
    BlockSums s;
    for (std::size_t t = 0; t < count; ++t) {
        const double ga = a.draw(rng.next());
        const double gb = b.draw(rng.next());
        const double loss = (ga - gb) * (ga - gb);
        s.sum += loss;
        s.sum_sq += loss * loss;
    }
    return s;
}

}  // namespace

McResult mc_expectation_bounds(const MomentSpec& a, const MomentSpec& b, std::size_t trials, std::uint64_t seed,
                               std::size_t threads) {
    if (a.support_min() < 0.0 || b.support_min() < 0.0)
        throw PreconditionError("Gram value samplers must have non-negative support");
    if (trials < 1000) throw PreconditionError("at least 1000 trials are required");

    const std::size_t blocks = (trials + kMcBlock - 1) / kMcBlock;
    std::vector<BlockSums> sums(blocks);
    auto work = [&](std::size_t shard, std::size_t shards) {
        for (std::size_t blk = shard; blk < blocks; blk += shards) {
            const std::size_t count = std::min(kMcBlock, trials - blk * kMcBlock);
            sums[blk] = run_block(a, b, seed, blk, count);
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, blocks));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }

    // Merge in block order so the result is independent of the shard count.
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& s : sums) {
        sum += s.sum;
        sum_sq += s.sum_sq;
    }
    const double n = static_cast<double>(trials);
    McResult r;
    r.trials = trials;
    r.estimate = sum / n;
    const double var = std::max(0.0, (sum_sq - n * r.estimate * r.estimate) / (n - 1.0));
    r.standard_error = std::sqrt(var / n);
    const BoundPair bounds = expectation_bounds(a, b);
    r.lower = bounds.lower;
    r.upper = bounds.upper;
    const double band = 3.0 * r.standard_error;
    // Relative slack covers rounding when the variance (and so the band) is zero.
    const double slack = 1e-12 * std::max(1.0, r.upper);
    r.within = r.estimate >= r.lower - band - slack && r.estimate <= r.upper + band + slack;
    return r;
}

}  // namespace stylebal

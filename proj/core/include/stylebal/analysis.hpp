// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace stylebal {

/// Human score: Good = -1, OK = 0, Bad = 1.
struct AnnotationRecord {
    std::string id;
    int score = 0;
};

/// Sample Pearson correlation. Throws CorrelationError for fewer than two
/// samples or a constant sequence, DimensionError on unequal lengths.
double pearson(std::span<const double> x, std::span<const double> y);

struct Histogram {
    std::vector<std::size_t> counts;
    std::size_t underflow = 0;
    std::size_t overflow = 0;
};

/// Equal-width bins over [lo, hi); the last bin also takes hi.
Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r = 0.0;
};

/// Ordinary least squares of y on x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct FeatureBankEntry {
    std::string id;
    std::string artist;
    std::vector<double> vector;
};
using FeatureBank = std::vector<FeatureBankEntry>;

/// Fraction of stylized entries whose Euclidean nearest style entry shares
/// their artist. Ties go to the lexicographically smallest id.
double deception_rate(const FeatureBank& stylized, const FeatureBank& styles);

/// Per-sample per-layer losses; the weighted total column is derived.
struct LossTable {
    std::vector<std::string> columns;       // layer taps
    std::vector<double> weights;            // one per column
    std::vector<std::string> ids;           // one per sample
    std::vector<std::vector<double>> rows;  // rows[i][l]

    std::vector<double> totals() const;
};

struct ColumnCorrelation {
    std::string column;  // tap name or "total"
    double r = 0.0;
};

/// Pearson r of every layer column and of the weighted total against the
/// annotation scores. Throws DataError when ids do not join one to one.
std::vector<ColumnCorrelation> correlation_report(const LossTable& losses,
                                                  const std::vector<AnnotationRecord>& annotations);

struct DiscreteSampler {
    std::vector<double> values;
    std::vector<double> probs;
};
struct UniformSampler {
    double lo = 0.0;
    double hi = 1.0;
};
using Sampler = std::variant<DiscreteSampler, UniformSampler>;

/// Distribution of a scalar Gram value with its analytic moments.
class MomentSpec {
public:
    explicit MomentSpec(Sampler sampler);

    static MomentSpec point_mass(double c) { return MomentSpec(DiscreteSampler{{c}, {1.0}}); }
    static MomentSpec two_point(double a, double b) { return MomentSpec(DiscreteSampler{{a, b}, {0.5, 0.5}}); }

    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    double support_min() const noexcept { return min_; }
    const Sampler& sampler() const noexcept { return sampler_; }

    /// One draw from 64 random bits.
    double draw(std::uint64_t bits) const;

private:
    Sampler sampler_;
    std::vector<double> cdf_;
    double mu_ = 0.0;
    double sigma_ = 0.0;
    double min_ = 0.0;
};

struct BoundPair {
    double lower = 0.0;
    double upper = 0.0;
};

/// (mu_a - mu_b)^2 + s_a^2 + s_b^2 and mu_a^2 + s_a^2 + mu_b^2 + s_b^2.
BoundPair expectation_bounds(const MomentSpec& a, const MomentSpec& b);

/// Variance-free relaxation: (mu_a - mu_b)^2 and k (mu_a^2 + mu_b^2).
BoundPair relaxed_bounds(const MomentSpec& a, const MomentSpec& b, double k);

struct McResult {
    double estimate = 0.0;
    double standard_error = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool within = false;
    std::size_t trials = 0;
};

/// Trials per random-stream block; blocks are the unit of sharding.
inline constexpr std::size_t kMcBlock = 4096;

/// Monte-Carlo estimate of E[(G_a - G_b)^2] with independent draws, checked
/// against expectation_bounds with a three-standard-error band. Block b uses
/// the stream derive_key(seed, b), so the result does not depend on threads.
McResult mc_expectation_bounds(const MomentSpec& a, const MomentSpec& b, std::size_t trials, std::uint64_t seed,
                               std::size_t threads = 1);

}  // namespace stylebal

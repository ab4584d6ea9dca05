#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qest/bayes.hpp"
#include "qest/grid.hpp"
#include "qest/model.hpp"

namespace qest {

// Raised when every grid node has zero likelihood for the given counts.
class incompatible_data_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct MleResult {
    double estimate = 0.0;
    double log_likelihood_at_max = 0.0;
    std::size_t grid_index = 0;
    // Second derivative of the log-likelihood at the maximizer, from centered
    // second differences; NaN when the maximizer sits on a grid boundary.
    // -1/curvature approximates the squared local error bar.
    double curvature = std::numeric_limits<double>::quiet_NaN();
};

// Exhaustive grid search for argmax_s sum_k n_k log p(k|s). Ties break toward
// the lowest grid value so results are reproducible; with a flat likelihood
// (e.g. zero visibility) every node ties and the lower grid bound is returned.
inline MleResult mle_estimate(const DiscreteModel& model,
                              const std::vector<std::uint64_t>& histogram,
                              const ParameterGrid& grid) {
    if (histogram.size() != model.outcome_count())
        throw std::domain_error("mle: histogram size does not match the model");
    std::uint64_t total = 0;
    for (auto c : histogram) total += c;
    if (total < 1) throw std::domain_error("mle: need at least one count");

    const Sample sample = make_sample_from_histogram(histogram);
    std::vector<double> ll(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i)
        ll[i] = log_likelihood(model, sample, {grid.node(i)});

    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.n; ++i)
        if (ll[i] > ll[best]) best = i;  // strict: ties keep the lower node
    if (!std::isfinite(ll[best]))
        throw incompatible_data_error("mle: data incompatible with the model on this grid");

    MleResult r;
    r.estimate = grid.node(best);
    r.log_likelihood_at_max = ll[best];
    r.grid_index = best;
    if (best > 0 && best + 1 < grid.n && std::isfinite(ll[best - 1]) &&
        std::isfinite(ll[best + 1])) {
        const double h = grid.spacing();
        r.curvature = (ll[best + 1] - 2.0 * ll[best] + ll[best - 1]) / (h * h);
    }
    return r;
}

struct RepeatStatistics {
    double mean = 0.0;
    double variance = 0.0;  // unbiased (n-1) sample variance
    std::vector<double> estimates;
};

// R simulated experiments of M events each, every one MLE-estimated.
// Repetition r draws with seed + r, so any scheduling yields the same result.
inline RepeatStatistics mle_repeat_statistics(const DiscreteModel& model,
                                              const std::vector<double>& params_true,
                                              std::uint64_t m, std::size_t r,
                                              const ParameterGrid& grid, std::uint64_t seed) {
    if (r < 2) throw std::domain_error("mle_repeat_statistics: need at least 2 repetitions");
    RepeatStatistics out;
    out.estimates.reserve(r);
    for (std::size_t rep = 0; rep < r; ++rep) {
        const Sample s = sample_outcomes(model, params_true, m, seed + rep);
        out.estimates.push_back(mle_estimate(model, s.histogram, grid).estimate);
    }
    double acc = 0.0;
    for (double e : out.estimates) acc += e;
    out.mean = acc / static_cast<double>(r);
    double ss = 0.0;
    for (double e : out.estimates) ss += (e - out.mean) * (e - out.mean);
    out.variance = ss / static_cast<double>(r - 1);
    return out;
}

}  // namespace qest

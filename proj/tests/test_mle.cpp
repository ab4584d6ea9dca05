#include "qest/mle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "qest/bayes.hpp"
#include "qest/grid.hpp"
#include "qest/information.hpp"
#include "qest/model.hpp"
#include "qest/random.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

qest::ParameterGrid phase_grid(std::size_t n = 2048) { return {0.0, kPi, n}; }

// Counts exactly proportional to the model distribution maximize the
// log-likelihood at the generating parameter (cross-entropy inequality), so
// the grid search must land on the node nearest to it.
TEST(MleEstimate, ProportionalCountsRecoverGeneratingParameter) {
    qest::NoonPhaseModel m(0.9);
    for (double truth : {0.3, 0.7, 1.1, 2.4}) {
        std::vector<std::uint64_t> counts(4);
        for (int k = 0; k < 4; ++k)
            counts[k] = static_cast<std::uint64_t>(std::llround(1e9 * m.prob(k, {truth})));
        const auto g = phase_grid();
        const auto r = qest::mle_estimate(m, counts, g);
        EXPECT_NEAR(r.estimate, truth, g.spacing());
        EXPECT_EQ(r.estimate, g.node(r.grid_index));
        EXPECT_NEAR(r.log_likelihood_at_max,
                    qest::log_likelihood(m, qest::make_sample_from_histogram(counts),
                                         {r.estimate}),
                    1e-9);
    }
}

TEST(MleEstimate, LargeSampleLandsWithinStatisticalError) {
    qest::NoonPhaseModel m(0.9);
    const std::uint64_t mm = 20000;
    const double f = qest::fisher_information(m, {0.2});
    const auto s = qest::sample_outcomes(m, {0.2}, mm, 99);
    const auto r = qest::mle_estimate(m, s.histogram, phase_grid());
    EXPECT_NEAR(r.estimate, 0.2, 4.0 / std::sqrt(static_cast<double>(mm) * f));
}

TEST(MleEstimate, MatchesBruteForceArgmaxOnRandomCounts) {
    qest::NoonPhaseModel m(0.9);
    const auto g = phase_grid(257);
    qest::Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::uint64_t> counts(4);
        for (auto& c : counts) c = static_cast<std::uint64_t>(rng.uniform() * 50.0);
        std::uint64_t total = 0;
        for (auto c : counts) total += c;
        if (total == 0) counts[trial % 4] = 1;

        const auto s = qest::make_sample_from_histogram(counts);
        std::size_t best = 0;
        double best_ll = qest::log_likelihood(m, s, {g.node(0)});
        for (std::size_t i = 1; i < g.n; ++i) {
            const double ll = qest::log_likelihood(m, s, {g.node(i)});
            if (ll > best_ll) {
                best_ll = ll;
                best = i;
            }
        }
        const auto r = qest::mle_estimate(m, counts, g);
        EXPECT_EQ(r.grid_index, best);
        EXPECT_DOUBLE_EQ(r.estimate, g.node(best));
    }
}

TEST(MleEstimate, InvariantUnderCountRescaling) {
    qest::NoonPhaseModel m(0.9);
    const std::vector<std::uint64_t> counts{13, 2, 40, 25};
    std::vector<std::uint64_t> scaled;
    for (auto c : counts) scaled.push_back(7 * c);
    const auto g = phase_grid(1024);
    const auto a = qest::mle_estimate(m, counts, g);
    const auto b = qest::mle_estimate(m, scaled, g);
    EXPECT_EQ(a.grid_index, b.grid_index);
    EXPECT_DOUBLE_EQ(a.estimate, b.estimate);
}

// Rescaled repeat variance M * F * var drifts toward 1 as M grows. Small M is
// dominated by wrap-around outliers, so only the trend and the asymptote are
// pinned.
TEST(MleRepeat, VarianceApproachesInverseFisherScaling) {
    qest::NoonPhaseModel m(0.9);
    const double f = qest::fisher_information(m, {0.2});
    const auto g = phase_grid();
    std::vector<double> ratio;
    for (std::uint64_t mm : {100ull, 1000ull, 10000ull, 100000ull}) {
        const auto stats = qest::mle_repeat_statistics(m, {0.2}, mm, 200, g, 1234);
        ratio.push_back(stats.variance * static_cast<double>(mm) * f);
    }
    EXPECT_GT(ratio[0], ratio[2]);
    EXPECT_NEAR(ratio[2], 1.0, 0.3);
    EXPECT_NEAR(ratio[3], 1.0, 0.25);
}

TEST(MleEstimate, FlatLikelihoodTiesBreakToLowerBound) {
    qest::NoonPhaseModel flat(0.0);
    const auto g = phase_grid(512);
    const auto r = qest::mle_estimate(flat, {5, 5, 5, 5}, g);
    EXPECT_DOUBLE_EQ(r.estimate, g.lower);
    EXPECT_EQ(r.grid_index, 0u);

    const auto stats = qest::mle_repeat_statistics(flat, {0.2}, 50, 10, g, 3);
    EXPECT_DOUBLE_EQ(stats.mean, g.lower);
    EXPECT_DOUBLE_EQ(stats.variance, 0.0);
}

TEST(MleEstimate, RejectsImpossibleAndMalformedData) {
    // Outcome 0 is impossible at every tabulated parameter value.
    qest::TabulatedModel table({0.0, 1.0, 2.0},
                               {{0.0, 0.5, 0.5}, {0.0, 0.7, 0.3}, {0.0, 0.2, 0.8}});
    EXPECT_THROW(qest::mle_estimate(table, {3, 0, 0}, {0.0, 2.0, 64}),
                 qest::incompatible_data_error);

    qest::NoonPhaseModel m(0.9);
    EXPECT_THROW(qest::mle_estimate(m, {0, 0, 0, 0}, phase_grid(64)), std::domain_error);
    EXPECT_THROW(qest::mle_estimate(m, {1, 2, 3}, phase_grid(64)), std::domain_error);
}

TEST(MleRepeat, SeedArithmeticIsReproducible) {
    qest::NoonPhaseModel m(0.9);
    const auto g = phase_grid(512);
    const auto a = qest::mle_repeat_statistics(m, {0.8}, 300, 6, g, 5);
    const auto b = qest::mle_repeat_statistics(m, {0.8}, 300, 6, g, 5);
    EXPECT_EQ(a.estimates, b.estimates);

    // Repetition r uses seed + r, so overlapping windows share estimates.
    const auto c = qest::mle_repeat_statistics(m, {0.8}, 300, 6, g, 7);
    EXPECT_DOUBLE_EQ(a.estimates[2], c.estimates[0]);
    EXPECT_DOUBLE_EQ(a.estimates[5], c.estimates[3]);
}

TEST(MleEstimate, CurvatureNegativeInsideAndNanOnBoundary) {
    qest::NoonPhaseModel m(0.9);
    const auto s = qest::sample_outcomes(m, {1.2}, 5000, 77);
    const auto r = qest::mle_estimate(m, s.histogram, phase_grid());
    EXPECT_GT(r.grid_index, 0u);
    EXPECT_TRUE(std::isfinite(r.curvature));
    EXPECT_LT(r.curvature, 0.0);
    // -1/curvature approximates the inverse observed information, which for
    // M events tracks 1/(M F).
    const double f = qest::fisher_information(m, {1.2});
    const double local_var = -1.0 / r.curvature;
    EXPECT_NEAR(local_var, 1.0 / (5000.0 * f), 0.5 / (5000.0 * f));

    qest::NoonPhaseModel flat(0.0);
    const auto g = phase_grid(256);
    const auto rb = qest::mle_estimate(flat, {1, 1, 1, 1}, g);
    EXPECT_TRUE(std::isnan(rb.curvature));
}

}  // namespace

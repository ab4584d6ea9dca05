#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qest/grid.hpp"
#include "qest/model.hpp"
#include "qest/random.hpp"

namespace qest {

// Raised when every posterior weight underflows to zero: the data are
// incompatible with the whole grid (or the prior vanishes wherever the
// likelihood does not).
class degenerate_posterior_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Normalized density on a grid: trapezoid integral of weights equals 1.
struct Posterior {
    ParameterGrid grid;
    std::vector<double> weights;
};

inline Sample make_sample(std::vector<int> outcomes, std::size_t n_outcomes) {
    Sample s;
    s.histogram.assign(n_outcomes, 0);
    for (int k : outcomes) {
        if (k < 0 || static_cast<std::size_t>(k) >= n_outcomes)
            throw std::domain_error("sample: outcome outside the outcome set");
        ++s.histogram[static_cast<std::size_t>(k)];
    }
    s.outcomes = std::move(outcomes);
    return s;
}

inline Sample make_sample_from_histogram(std::vector<std::uint64_t> histogram) {
    Sample s;
    s.histogram = std::move(histogram);
    return s;
}

// log p(sample | params) = sum_k n_k log p(k | params), evaluated from the
// histogram so it is invariant under reordering of the outcome list.
// Returns -inf when an observed outcome has zero probability.
inline double log_likelihood(const DiscreteModel& model, const Sample& sample,
                             const std::vector<double>& params) {
    if (sample.histogram.size() != model.outcome_count())
        throw std::domain_error("log_likelihood: histogram size does not match the model");
    double acc = 0.0;
    for (std::size_t k = 0; k < sample.histogram.size(); ++k) {
        const auto n_k = sample.histogram[k];
        if (n_k == 0) continue;
        const double p = model.prob(static_cast<int>(k), params);
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        acc += static_cast<double>(n_k) * std::log(p);
    }
    return acc;
}

namespace detail {

// Normalize exp(log-weight) * prior over the grid in place.
// The max-shift keeps the largest exponent at 0, so M ~ 10^5 factors of
// p < 1 cannot underflow the whole vector unless the data truly exclude
// every node.
inline Posterior normalize_log_weights(const ParameterGrid& grid, std::vector<double>& logw,
                                       const std::vector<double>* prior) {
    const std::size_t n = grid.n;
    if (prior && prior->size() != n)
        throw std::invalid_argument("posterior: prior size does not match the grid");
    double mx = -std::numeric_limits<double>::infinity();
    for (double lw : logw)
        if (lw > mx) mx = lw;
    if (!std::isfinite(mx)) throw degenerate_posterior_error("posterior: all weights vanish");
    Posterior post;
    post.grid = grid;
    post.weights.resize(n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = std::exp(logw[i] - mx);
        if (prior) {
            const double pr = (*prior)[i];
            if (!(pr >= 0.0)) throw std::domain_error("posterior: negative prior weight");
            w *= pr;
        }
        post.weights[i] = w;
        z += grid.quad_weight(i) * w;
    }
    if (!(z > 0.0) || !std::isfinite(z))
        throw degenerate_posterior_error("posterior: all weights vanish");
    for (double& w : post.weights) w /= z;
    return post;
}

}  // namespace detail

// Precomputed log p(k | node) table for a one-parameter model on a fixed
// grid. Repeated posteriors over the same grid (the Monte Carlo harness)
// reduce to one fused multiply-add per outcome per node plus one exp.
class PosteriorEngine {
  public:
    PosteriorEngine(const DiscreteModel& model, const ParameterGrid& grid)
        : grid_(grid), n_outcomes_(model.outcome_count()) {
        if (model.param_count() != 1)
            throw std::domain_error("PosteriorEngine: one-parameter models only");
        logp_.resize(n_outcomes_ * grid.n);
        for (std::size_t k = 0; k < n_outcomes_; ++k)
            for (std::size_t i = 0; i < grid.n; ++i) {
                const double p = model.prob(static_cast<int>(k), {grid.node(i)});
                logp_[k * grid.n + i] =
                    p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
            }
    }

    const ParameterGrid& grid() const { return grid_; }

    Posterior from_histogram(const std::vector<std::uint64_t>& histogram,
                             const std::vector<double>* prior = nullptr) const {
        if (histogram.size() != n_outcomes_)
            throw std::domain_error("posterior: histogram size does not match the model");
        std::vector<double> logw(grid_.n, 0.0);
        for (std::size_t k = 0; k < n_outcomes_; ++k) {
            const double n_k = static_cast<double>(histogram[k]);
            if (n_k == 0.0) continue;
            const double* row = logp_.data() + k * grid_.n;
            for (std::size_t i = 0; i < grid_.n; ++i) logw[i] += n_k * row[i];
        }
        return detail::normalize_log_weights(grid_, logw, prior);
    }

  private:
    ParameterGrid grid_;
    std::size_t n_outcomes_;
    std::vector<double> logp_;
};

// Bayes theorem on a grid with an optional prior (flat when omitted).
inline Posterior posterior(const DiscreteModel& model, const Sample& sample,
                           const ParameterGrid& grid,
                           const std::vector<double>* prior = nullptr) {
    return PosteriorEngine(model, grid).from_histogram(sample.histogram, prior);
}

// Feed further data into an existing posterior (it becomes the prior).
inline Posterior posterior_update(const DiscreteModel& model, const Posterior& post,
                                  const Sample& sample) {
    return posterior(model, sample, post.grid, &post.weights);
}

// Mean of the posterior: trapezoidal integral of lambda * P(lambda).
inline double bayes_estimate(const Posterior& post) {
    double acc = 0.0;
    for (std::size_t i = 0; i < post.grid.n; ++i)
        acc += post.grid.quad_weight(i) * post.grid.node(i) * post.weights[i];
    return acc;
}

// Second moment minus squared mean; round-off can push the difference a hair
// negative for delta-like posteriors, which is clamped to zero.
inline double posterior_variance(const Posterior& post) {
    double m2 = 0.0;
    for (std::size_t i = 0; i < post.grid.n; ++i) {
        const double x = post.grid.node(i);
        m2 += post.grid.quad_weight(i) * x * x * post.weights[i];
    }
    const double mean = bayes_estimate(post);
    const double var = m2 - mean * mean;
    return var > 0.0 ? var : 0.0;
}

// Integral of |lambda - center|^beta P(lambda), beta > 1.
inline double central_abs_moment(const Posterior& post, double center, double beta) {
    if (!(beta > 1.0)) throw std::domain_error("central_abs_moment: order must exceed 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < post.grid.n; ++i)
        acc += post.grid.quad_weight(i) *
               std::pow(std::abs(post.grid.node(i) - center), beta) * post.weights[i];
    return acc;
}

// Signed central moment of integer order (diagnostics: skewness, kurtosis).
inline double central_moment(const Posterior& post, double center, int order) {
    double acc = 0.0;
    for (std::size_t i = 0; i < post.grid.n; ++i) {
        double d = post.grid.node(i) - center;
        double t = 1.0;
        for (int j = 0; j < order; ++j) t *= d;
        acc += post.grid.quad_weight(i) * t * post.weights[i];
    }
    return acc;
}

// --- Circular (periodic-domain) statistics ---------------------------------
//
// The phase models are periodic and their grid spans exactly one period, so
// the posterior lives on a circle. Displacements measured on that circle
// coincide with plain differences whenever the posterior is concentrated
// away from the domain edges; they stay meaningful when mass straddles the
// wrap point, where plain moments count a short circular distance as a long
// linear one.

// Difference x - center folded into [-period/2, period/2).
inline double wrapped_displacement(double x, double center, double period) {
    double d = std::fmod(x - center + 0.5 * period, period);
    if (d < 0.0) d += period;
    return d - 0.5 * period;
}

// Mean respecting the periodicity of the grid domain: direction of the first
// trigonometric moment, refined by the mean wrapped displacement so that an
// interior posterior reproduces bayes_estimate exactly. A posterior with no
// preferred direction (flat: zero resultant) falls back to the plain mean.
inline double circular_mean_estimate(const Posterior& post) {
    const double period = post.grid.width();
    const double two_pi = 2.0 * 3.14159265358979323846;
    std::complex<double> resultant(0.0, 0.0);
    for (std::size_t i = 0; i < post.grid.n; ++i) {
        const double angle = two_pi * (post.grid.node(i) - post.grid.lower) / period;
        resultant += post.grid.quad_weight(i) * post.weights[i] *
                     std::complex<double>(std::cos(angle), std::sin(angle));
    }
    if (std::abs(resultant) < 1e-12) return bayes_estimate(post);
    double mean = post.grid.lower + std::arg(resultant) * period / two_pi;
    double shift = 0.0;
    for (std::size_t i = 0; i < post.grid.n; ++i)
        shift += post.grid.quad_weight(i) * post.weights[i] *
                 wrapped_displacement(post.grid.node(i), mean, period);
    mean += shift;
    // Map into the grid domain.
    double rel = std::fmod(mean - post.grid.lower, period);
    if (rel < 0.0) rel += period;
    return post.grid.lower + rel;
}

// Central absolute moment with displacements measured on the circle.
inline double wrapped_central_abs_moment(const Posterior& post, double center, double beta) {
    if (!(beta > 1.0)) throw std::domain_error("central_abs_moment: order must exceed 1");
    const double period = post.grid.width();
    double acc = 0.0;
    for (std::size_t i = 0; i < post.grid.n; ++i)
        acc += post.grid.quad_weight(i) *
               std::pow(std::abs(wrapped_displacement(post.grid.node(i), center, period)), beta) *
               post.weights[i];
    return acc;
}

inline double wrapped_central_moment(const Posterior& post, double center, int order) {
    const double period = post.grid.width();
    double acc = 0.0;
    for (std::size_t i = 0; i < post.grid.n; ++i) {
        double d = wrapped_displacement(post.grid.node(i), center, period);
        double t = 1.0;
        for (int j = 0; j < order; ++j) t *= d;
        acc += post.grid.quad_weight(i) * t * post.weights[i];
    }
    return acc;
}

// --- Two-parameter posterior ------------------------------------------------

// Joint density on the Cartesian product of two grids, row-major over
// (grid_a node, grid_b node), normalized by the 2-D trapezoid rule.
struct Posterior2D {
    ParameterGrid grid_a;
    ParameterGrid grid_b;
    std::vector<double> weights;

    double at(std::size_t i, std::size_t j) const { return weights[i * grid_b.n + j]; }
};

inline Posterior2D posterior_2d(const DiscreteModel& model, const Sample& sample,
                                const ParameterGrid& grid_a, const ParameterGrid& grid_b,
                                const std::vector<double>* prior = nullptr) {
    if (model.param_count() != 2)
        throw std::domain_error("posterior_2d: two-parameter models only");
    if (sample.histogram.size() != model.outcome_count())
        throw std::domain_error("posterior_2d: histogram size does not match the model");
    const std::size_t na = grid_a.n, nb = grid_b.n;
    if (prior && prior->size() != na * nb)
        throw std::invalid_argument("posterior_2d: prior size does not match the grids");
    std::vector<double> logw(na * nb, 0.0);
    std::vector<double> logp(nb);
    for (std::size_t k = 0; k < model.outcome_count(); ++k) {
        const double n_k = static_cast<double>(sample.histogram[k]);
        if (n_k == 0.0) continue;
        for (std::size_t i = 0; i < na; ++i) {
            const double a = grid_a.node(i);
            for (std::size_t j = 0; j < nb; ++j) {
                const double p = model.prob(static_cast<int>(k), {a, grid_b.node(j)});
                logp[j] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
            }
            for (std::size_t j = 0; j < nb; ++j) logw[i * nb + j] += n_k * logp[j];
        }
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double lw : logw)
        if (lw > mx) mx = lw;
    if (!std::isfinite(mx)) throw degenerate_posterior_error("posterior: all weights vanish");
    Posterior2D post;
    post.grid_a = grid_a;
    post.grid_b = grid_b;
    post.weights.resize(na * nb);
    double z = 0.0;
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            double w = std::exp(logw[i * nb + j] - mx);
            if (prior) w *= (*prior)[i * nb + j];
            post.weights[i * nb + j] = w;
            z += grid_a.quad_weight(i) * grid_b.quad_weight(j) * w;
        }
    if (!(z > 0.0) || !std::isfinite(z))
        throw degenerate_posterior_error("posterior: all weights vanish");
    for (double& w : post.weights) w /= z;
    return post;
}

// Integrate out the other axis; axis 0 keeps grid_a, axis 1 keeps grid_b.
inline Posterior marginal(const Posterior2D& post, std::size_t axis) {
    if (axis > 1) throw std::domain_error("marginal: axis must be 0 or 1");
    const std::size_t na = post.grid_a.n, nb = post.grid_b.n;
    Posterior out;
    out.grid = (axis == 0) ? post.grid_a : post.grid_b;
    out.weights.assign(out.grid.n, 0.0);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            if (axis == 0)
                out.weights[i] += post.grid_b.quad_weight(j) * post.at(i, j);
            else
                out.weights[j] += post.grid_a.quad_weight(i) * post.at(i, j);
        }
    const double z = trapezoid(out.grid, out.weights);
    if (!(z > 0.0)) throw degenerate_posterior_error("marginal: all weights vanish");
    for (double& w : out.weights) w /= z;
    return out;
}

// --- Sampling from a posterior ----------------------------------------------

// Inverse-CDF draw from the piecewise-linear density the trapezoid rule
// integrates exactly: node weights define line segments over each cell, and
// the quadratic cell CDF is inverted in closed form.
inline double posterior_draw(const Posterior& post, Rng& rng) {
    const std::size_t n = post.grid.n;
    const double h = post.grid.spacing();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        total += 0.5 * h * (post.weights[i] + post.weights[i + 1]);
    const double target = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double w0 = post.weights[i], w1 = post.weights[i + 1];
        const double cell = 0.5 * h * (w0 + w1);
        if (acc + cell < target && i + 2 < n) {
            acc += cell;
            continue;
        }
        // Solve (w0 s + (w1-w0) s^2/2) h = target - acc for s in [0,1].
        const double r = std::max(target - acc, 0.0) / h;
        const double a = 0.5 * (w1 - w0);
        double s;
        if (std::abs(a) < 1e-300) {
            s = w0 > 0.0 ? r / w0 : 0.5;
        } else {
            const double disc = w0 * w0 + 4.0 * a * r;
            s = (-w0 + std::sqrt(std::max(disc, 0.0))) / (2.0 * a);
        }
        if (s < 0.0) s = 0.0;
        if (s > 1.0) s = 1.0;
        return post.grid.node(i) + s * h;
    }
    return post.grid.upper;
}

inline double posterior_draw(const Posterior& post, std::uint64_t seed) {
    Rng rng(seed);
    return posterior_draw(post, rng);
}

// --- Defaults ----------------------------------------------------------------

inline constexpr std::size_t kDefaultPhaseGridPoints = 2048;
inline constexpr std::size_t kDefaultVisibilityGridPoints = 256;

// Grid over the model's natural domain for one parameter. Phase-like
// parameters get the fine grid; the auxiliary visibility axis the coarse one.
inline ParameterGrid default_grid(const DiscreteModel& model, std::size_t index = 0,
                                  std::size_t points = 0) {
    const auto [lo, hi] = model.param_domain(index);
    if (points == 0)
        points = (model.param_count() == 2 && index == 1) ? kDefaultVisibilityGridPoints
                                                          : kDefaultPhaseGridPoints;
    return ParameterGrid(lo, hi, points);
}

}  // namespace qest

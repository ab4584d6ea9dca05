#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qest/bayes.hpp"
#include "qest/information.hpp"
#include "qest/model.hpp"

namespace qest {

// Raised by holevo_variance when the estimates' resultant phasor vanishes.
class unbounded_variance_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Run fn(0..n_tasks-1), each index exactly once, on up to n_threads workers.
// Tasks must write only to their own slots; the caller aggregates afterwards
// in index order, which makes results independent of scheduling.
inline void parallel_for(std::size_t n_tasks, std::size_t n_threads,
                         const std::function<void(std::size_t)>& fn) {
    if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, n_tasks);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_tasks) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Logarithmically spaced measurement counts, rounded and deduplicated.
inline std::vector<std::uint64_t> log_spaced_m(std::uint64_t lo, std::uint64_t hi,
                                               std::size_t count) {
    if (lo < 1 || hi < lo || count < 1) throw std::domain_error("log_spaced_m: bad range");
    std::vector<std::uint64_t> out;
    const double la = std::log(static_cast<double>(lo));
    const double lb = std::log(static_cast<double>(hi));
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        const auto m = static_cast<std::uint64_t>(std::llround(std::exp(la + t * (lb - la))));
        if (out.empty() || m > out.back()) out.push_back(m);
    }
    return out;
}

// Everything a saturation sweep needs. The grid spans one period of the
// model, so posterior summaries use circular statistics (see bayes.hpp);
// they agree with plain moments whenever the posterior is interior.
struct ExperimentConfig {
    std::shared_ptr<const DiscreteModel> model;
    std::vector<double> params_true;
    std::size_t estimated_index = 0;
    std::vector<std::uint64_t> m_values;
    std::size_t repetitions = 500;
    std::vector<double> betas{2.0, 3.0, 4.0, 5.0};
    std::uint64_t master_seed = 1;
    ParameterGrid grid;
    std::size_t threads = 0;  // 0: hardware concurrency

    void validate() const {
        if (!model) throw std::domain_error("config: no model");
        if (m_values.empty()) throw std::domain_error("config: no measurement counts");
        for (auto m : m_values)
            if (m < 1) throw std::domain_error("config: measurement counts must be >= 1");
        if (repetitions < 1) throw std::domain_error("config: need at least one repetition");
        if (betas.empty()) throw std::domain_error("config: no moment orders");
        for (double b : betas)
            if (!(b > 1.0)) throw std::domain_error("config: moment orders must exceed 1");
    }
};

// One (M, beta) aggregate. bound_floor is the saturation reference Xi = 1;
// gaussian_limit is NaN for non-integer beta. estimate_* repeat per beta so
// each CSV row is self-contained. Estimates live on the grid period, so
// estimate_mean is the circular mean of the per-repetition estimates and
// estimate_std the dispersion of wrapped displacements about it; both match
// the plain mean and standard deviation whenever no repetition wraps.
struct SweepCell {
    std::uint64_t m = 0;
    double beta = 0.0;
    double xi_mean = 0.0;
    double xi_std = 0.0;
    double gaussian_limit = std::numeric_limits<double>::quiet_NaN();
    double bound_floor = 1.0;
    double estimate_mean = 0.0;
    double estimate_std = 0.0;
    std::size_t n_valid = 0;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // ordered by m, then beta
    std::vector<std::uint64_t> m_values;
    std::vector<double> betas;
    std::size_t repetitions = 0;
    std::size_t degenerate_cells = 0;  // (repetition, M) posteriors excluded
    std::size_t total_cells = 0;

    const SweepCell& cell(std::size_t m_index, std::size_t beta_index) const {
        return cells[m_index * betas.size() + beta_index];
    }
};

// Simulate repetitions x measurement-counts experiments, summarize the
// posterior of each with circular mean and wrapped central absolute moments,
// and reduce Xi_beta statistics across repetitions in repetition order.
// Repetition r at count index mi draws with derive_seed(master, r, mi), so
// the result is bit-identical for any thread count.
inline SweepResult run_sweep(const ExperimentConfig& config) {
    config.validate();
    const auto& model = *config.model;
    const std::size_t n_m = config.m_values.size();
    const std::size_t n_b = config.betas.size();
    const std::size_t n_rep = config.repetitions;

    // Per-measurement information constants at the true parameter.
    const double f2 = fisher_information(model, config.params_true, config.estimated_index);
    std::vector<double> f_alpha(n_b), g_limit(n_b);
    for (std::size_t bi = 0; bi < n_b; ++bi) {
        const double beta = config.betas[bi];
        f_alpha[bi] = generalized_fisher(model, config.params_true, config.estimated_index,
                                         conjugate_order(beta));
        const double beta_int = std::nearbyint(beta);
        g_limit[bi] = (std::abs(beta - beta_int) < 1e-12 && beta_int >= 2.0)
                          ? gaussian_limit_xi(f2, f_alpha[bi], static_cast<int>(beta_int))
                          : std::numeric_limits<double>::quiet_NaN();
    }

    const PosteriorEngine engine(model, config.grid);

    // Per-repetition slots; NaN marks a degenerate (excluded) cell.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> xi(n_rep * n_m * n_b, nan);
    std::vector<double> est(n_rep * n_m, nan);

    detail::parallel_for(n_rep, config.threads, [&](std::size_t r) {
        for (std::size_t mi = 0; mi < n_m; ++mi) {
            const std::uint64_t m = config.m_values[mi];
            const Sample sample = sample_outcomes(model, config.params_true, m,
                                                  derive_seed(config.master_seed, r, mi));
            Posterior post;
            try {
                post = engine.from_histogram(sample.histogram);
            } catch (const degenerate_posterior_error&) {
                continue;  // cell stays NaN and is excluded from aggregates
            }
            const double estimate = circular_mean_estimate(post);
            est[r * n_m + mi] = estimate;
            for (std::size_t bi = 0; bi < n_b; ++bi) {
                const double sigma = wrapped_central_abs_moment(post, estimate,
                                                                config.betas[bi]);
                xi[(r * n_m + mi) * n_b + bi] =
                    xi_beta(sigma, m, f_alpha[bi], config.betas[bi]);
            }
        }
    });

    SweepResult result;
    result.m_values = config.m_values;
    result.betas = config.betas;
    result.repetitions = n_rep;
    result.total_cells = n_rep * n_m;
    result.cells.reserve(n_m * n_b);
    std::size_t degenerate = 0;
    const double period = config.grid.width();
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (std::size_t mi = 0; mi < n_m; ++mi) {
        // Circular mean first (fixed repetition order), then the wrapped
        // spread about it. Estimates near opposite domain edges are the same
        // phase, so a plain average would split them apart.
        double sx = 0.0, sy = 0.0, lin = 0.0;
        std::size_t n_valid = 0;
        for (std::size_t r = 0; r < n_rep; ++r) {
            const double e = est[r * n_m + mi];
            if (std::isnan(e)) continue;
            ++n_valid;
            const double angle = two_pi * (e - config.grid.lower) / period;
            sx += std::cos(angle);
            sy += std::sin(angle);
            lin += e;
        }
        degenerate += n_rep - n_valid;
        double est_mean = 0.0;
        if (n_valid > 0) {
            if (std::hypot(sx, sy) < 1e-12 * static_cast<double>(n_valid)) {
                est_mean = lin / static_cast<double>(n_valid);  // no mean direction
            } else {
                double rel = std::fmod(std::atan2(sy, sx) / two_pi * period, period);
                if (rel < 0.0) rel += period;
                est_mean = config.grid.lower + rel;
            }
        }
        double est_ss = 0.0;
        for (std::size_t r = 0; r < n_rep; ++r) {
            const double e = est[r * n_m + mi];
            if (std::isnan(e)) continue;
            const double d = wrapped_displacement(e, est_mean, period);
            est_ss += d * d;
        }
        const double est_std =
            n_valid > 1 ? std::sqrt(est_ss / static_cast<double>(n_valid - 1)) : 0.0;
        for (std::size_t bi = 0; bi < n_b; ++bi) {
            SweepCell cell;
            cell.m = config.m_values[mi];
            cell.beta = config.betas[bi];
            cell.gaussian_limit = g_limit[bi];
            cell.estimate_mean = est_mean;
            cell.estimate_std = est_std;
            cell.n_valid = n_valid;
            double mean = 0.0, ss = 0.0;
            std::size_t n = 0;
            for (std::size_t r = 0; r < n_rep; ++r) {
                const double x = xi[(r * n_m + mi) * n_b + bi];
                if (std::isnan(x)) continue;
                ++n;
                const double d = x - mean;
                mean += d / static_cast<double>(n);
                ss += d * (x - mean);
            }
            cell.xi_mean = mean;
            cell.xi_std = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
            result.cells.push_back(cell);
        }
    }
    result.degenerate_cells = degenerate;
    return result;
}

struct BiasPoint {
    std::uint64_t m = 0;
    double estimate_mean = 0.0;
    double estimate_std = 0.0;
    std::size_t n_valid = 0;
};

// The estimate-vs-M view of a sweep.
inline std::vector<BiasPoint> bias_curve(const SweepResult& sweep) {
    std::vector<BiasPoint> out;
    out.reserve(sweep.m_values.size());
    for (std::size_t mi = 0; mi < sweep.m_values.size(); ++mi) {
        const SweepCell& c = sweep.cell(mi, 0);
        out.push_back({c.m, c.estimate_mean, c.estimate_std, c.n_valid});
    }
    return out;
}

inline std::vector<BiasPoint> bias_curve(const ExperimentConfig& config) {
    return bias_curve(run_sweep(config));
}

// --- Adaptive feedback baseline ----------------------------------------------

struct PghStep {
    double feedback = 0.0;        // phase applied for this shot
    int outcome = 0;              // detector result
    double posterior_mean = 0.0;  // circular mean after the update
    double resultant_length = 0.0;
};

struct PghResult {
    std::vector<PghStep> steps;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    bool no_information = false;  // no shots: flat posterior, undefined direction
    Posterior final_posterior;
};

// Adaptive loop: each shot applies a feedback phase drawn from the current
// posterior, measures, and Bayes-updates. Updates run in linear space with
// per-shot renormalization: every factor is bounded by 1 and the posterior
// cannot underflow over any realistic shot count.
inline PghResult pgh_run(const FeedbackInterferometerModel& model, double phi_true,
                         std::uint64_t shots, const ParameterGrid& grid, std::uint64_t seed) {
    const std::size_t n = grid.n;
    PghResult result;
    result.final_posterior.grid = grid;
    result.final_posterior.weights.assign(n, 1.0 / grid.width());
    Posterior& post = result.final_posterior;
    if (shots == 0) {
        result.no_information = true;
        return result;
    }
    // cos/sin per node, so per-shot likelihoods and circular means need only
    // a constant number of trig calls.
    std::vector<double> cs(n), sn(n);
    for (std::size_t i = 0; i < n; ++i) {
        cs[i] = std::cos(grid.node(i));
        sn[i] = std::sin(grid.node(i));
    }
    const double two_pi = 2.0 * 3.14159265358979323846;
    Rng rng(seed);
    result.steps.reserve(shots);
    for (std::uint64_t shot = 0; shot < shots; ++shot) {
        const double feedback = posterior_draw(post, rng);
        const auto probe = model.with_feedback(feedback);
        const double p0 = probe.prob(0, {phi_true});
        const int outcome = rng.uniform() < p0 ? 0 : 1;
        const double sign = outcome == 0 ? 1.0 : -1.0;
        const double cf = std::cos(feedback), sf = std::sin(feedback);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // cos(node - feedback) expanded over the node tables
            post.weights[i] *= 0.5 * (1.0 + sign * (cs[i] * cf + sn[i] * sf));
            z += grid.quad_weight(i) * post.weights[i];
        }
        if (!(z > 0.0)) throw degenerate_posterior_error("pgh: posterior vanished");
        double rx = 0.0, ry = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            post.weights[i] /= z;
            const double w = grid.quad_weight(i) * post.weights[i];
            // first trigonometric moment on the grid period
            const double angle = two_pi * (grid.node(i) - grid.lower) / grid.width();
            rx += w * std::cos(angle);
            ry += w * std::sin(angle);
        }
        PghStep step;
        step.feedback = feedback;
        step.outcome = outcome;
        step.resultant_length = std::hypot(rx, ry);
        double mean = grid.lower + std::atan2(ry, rx) * grid.width() / two_pi;
        double rel = std::fmod(mean - grid.lower, grid.width());
        if (rel < 0.0) rel += grid.width();
        step.posterior_mean = grid.lower + rel;
        result.steps.push_back(step);
    }
    result.estimate = circular_mean_estimate(post);
    return result;
}

// Circular dispersion of phase estimates: 1/|mean phasor|^2 - 1. Zero for
// identical angles, unbounded as the resultant vanishes.
inline double holevo_variance(const std::vector<double>& estimates) {
    if (estimates.empty()) throw std::domain_error("holevo_variance: no estimates");
    double rx = 0.0, ry = 0.0;
    for (double phi : estimates) {
        rx += std::cos(phi);
        ry += std::sin(phi);
    }
    const double r = std::hypot(rx, ry) / static_cast<double>(estimates.size());
    if (r < 1e-15)
        throw unbounded_variance_error("holevo_variance: zero resultant phasor");
    return 1.0 / (r * r) - 1.0;
}

}  // namespace qest

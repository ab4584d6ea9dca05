#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qest/model.hpp"

namespace qest {

// Raised when a bound is requested for a model carrying no information about
// the parameter (generalized Fisher information equal to zero).
class zero_information_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {
// Outcomes with p below this are excluded from information sums: the summand
// p |p'/p|^a is a 0 * inf form there and the excluded set has measure zero.
inline constexpr double kProbFloor = 1e-300;
}  // namespace detail

// Generalized Fisher information F_a = sum_k p(k) |d log p(k)|^a, a > 1.
// a = 2 recovers the classical Fisher information.
inline double generalized_fisher(const DiscreteModel& model, const std::vector<double>& params,
                                 std::size_t index, double alpha) {
    if (!(alpha > 1.0)) throw std::domain_error("generalized_fisher: order must exceed 1");
    double acc = 0.0;
    for (std::size_t k = 0; k < model.outcome_count(); ++k) {
        const double p = model.prob(static_cast<int>(k), params);
        if (p < detail::kProbFloor) continue;
        const double score = model.dprob(static_cast<int>(k), params, index) / p;
        acc += p * std::pow(std::abs(score), alpha);
    }
    return acc;
}

inline double fisher_information(const DiscreteModel& model, const std::vector<double>& params,
                                 std::size_t index = 0) {
    return generalized_fisher(model, params, index, 2.0);
}

// Conjugate order: 1/alpha + 1/beta = 1.
inline double conjugate_order(double beta) {
    if (!(beta > 1.0)) throw std::domain_error("conjugate_order: order must exceed 1");
    return beta / (beta - 1.0);
}

// Lower bound on the beta-th central absolute moment of an unbiased
// estimator after M measurements: 1 / (M^(beta/2) F_a^(beta/alpha)).
// With beta = 2 this is the familiar 1/(M F).
inline double barankin_bound(double f_alpha, std::uint64_t m, double beta) {
    if (!(beta > 1.0)) throw std::domain_error("barankin_bound: order must exceed 1");
    if (m < 1) throw std::domain_error("barankin_bound: need at least one measurement");
    if (!(f_alpha > 0.0))
        throw zero_information_error("barankin_bound: undefined at zero information");
    const double alpha = conjugate_order(beta);
    return 1.0 / (std::pow(static_cast<double>(m), beta / 2.0) *
                  std::pow(f_alpha, beta / alpha));
}

inline double cramer_rao_bound(double fisher, std::uint64_t m) {
    return barankin_bound(fisher, m, 2.0);
}

// Saturation diagnostic Xi_beta = Sigma_beta * M^(beta/2) * F_a^(beta/alpha);
// the moment bound asserts Xi_beta >= 1, with equality exactly at the bound.
inline double xi_beta(double sigma_beta, std::uint64_t m, double f_alpha, double beta) {
    return sigma_beta / barankin_bound(f_alpha, m, beta);
}

// (beta-1)!! for integer beta >= 2.
inline double double_factorial(int n) {
    double r = 1.0;
    for (; n > 1; n -= 2) r *= n;
    return r;
}

// Central absolute moment of a Gaussian with the given variance:
//   Sigma_beta = variance^(beta/2) (beta-1)!! * sqrt(2/pi) for odd beta, * 1 even.
// Integer beta only; the double factorial has no meaning here otherwise.
inline double gaussian_abs_moment(double variance, int beta) {
    if (beta < 2) throw std::domain_error("gaussian_abs_moment: order must be >= 2");
    if (!(variance >= 0.0)) throw std::domain_error("gaussian_abs_moment: negative variance");
    const double parity = (beta % 2 == 1) ? std::sqrt(2.0 / 3.14159265358979323846) : 1.0;
    return std::pow(variance, beta / 2.0) * double_factorial(beta - 1) * parity;
}

// Value Xi_beta approaches when the posterior becomes Gaussian with variance
// 1/(M F_2):  (F_a^(beta/alpha) / F_2^(beta/2)) (beta-1)!! {sqrt(2/pi) odd; 1 even}.
// Greater than 1 for beta > 2 away from degenerate visibilities, so the
// higher-order bounds are not saturated even asymptotically.
inline double gaussian_limit_xi(double f_2, double f_alpha, int beta) {
    if (beta < 2) throw std::domain_error("gaussian_limit_xi: order must be >= 2");
    if (!(f_2 > 0.0) || !(f_alpha > 0.0))
        throw zero_information_error("gaussian_limit_xi: undefined at zero information");
    const double alpha = conjugate_order(static_cast<double>(beta));
    const double parity = (beta % 2 == 1) ? std::sqrt(2.0 / 3.14159265358979323846) : 1.0;
    return std::pow(f_alpha, beta / alpha) / std::pow(f_2, beta / 2.0) *
           double_factorial(beta - 1) * parity;
}

// One (M, beta) row of a bound analysis. sigma_beta and xi_beta are NaN until
// a measured moment is attached; gaussian_limit is NaN for non-integer beta,
// where the Gaussian-moment formula does not apply.
struct BoundReport {
    std::uint64_t m = 0;
    double beta = 0.0;
    double alpha = 0.0;
    double fisher = 0.0;
    double generalized_fisher = 0.0;
    double crb = 0.0;
    double barankin = 0.0;
    double sigma_beta = std::numeric_limits<double>::quiet_NaN();
    double xi = std::numeric_limits<double>::quiet_NaN();
    double gaussian_limit = std::numeric_limits<double>::quiet_NaN();
};

inline BoundReport make_bound_report(const DiscreteModel& model,
                                     const std::vector<double>& params, std::size_t index,
                                     std::uint64_t m, double beta,
                                     double measured_sigma_beta =
                                         std::numeric_limits<double>::quiet_NaN()) {
    BoundReport r;
    r.m = m;
    r.beta = beta;
    r.alpha = conjugate_order(beta);
    r.fisher = fisher_information(model, params, index);
    r.generalized_fisher = generalized_fisher(model, params, index, r.alpha);
    r.crb = cramer_rao_bound(r.fisher, m);
    r.barankin = barankin_bound(r.generalized_fisher, m, beta);
    const double beta_int = std::nearbyint(beta);
    if (std::abs(beta - beta_int) < 1e-12 && beta_int >= 2.0)
        r.gaussian_limit = gaussian_limit_xi(r.fisher, r.generalized_fisher,
                                             static_cast<int>(beta_int));
    if (!std::isnan(measured_sigma_beta)) {
        r.sigma_beta = measured_sigma_beta;
        r.xi = xi_beta(measured_sigma_beta, m, r.generalized_fisher, beta);
    }
    return r;
}

}  // namespace qest

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qest/random.hpp"

namespace qest {

// Ordered record of outcome draws plus its count histogram. The histogram is
// the sufficient statistic for every estimator in this library; the ordered
// list is kept so order-invariance can be tested against it.
struct Sample {
    std::vector<int> outcomes;
    std::vector<std::uint64_t> histogram;

    std::uint64_t total() const {
        std::uint64_t m = 0;
        for (auto c : histogram) m += c;
        return m;
    }
};

// A discrete statistical model p(k | params): finitely many outcomes k,
// continuously parameterized probabilities. Implementations are immutable
// after construction and safe to share across threads.
class DiscreteModel {
  public:
    virtual ~DiscreteModel() = default;

    virtual std::size_t outcome_count() const = 0;
    virtual std::size_t param_count() const = 0;

    // p(k | params). Throws std::domain_error on a bad outcome or on
    // parameters outside the admissible box.
    virtual double prob(int k, const std::vector<double>& params) const = 0;

    // d p(k | params) / d params[index].
    virtual double dprob(int k, const std::vector<double>& params,
                         std::size_t index) const = 0;

    // Natural estimation interval of one parameter (one period for the
    // periodic models). Grids default to this when the caller gives none.
    virtual std::pair<double, double> param_domain(std::size_t index) const = 0;

    virtual std::string name() const = 0;

  protected:
    void check_outcome(int k) const {
        if (k < 0 || static_cast<std::size_t>(k) >= outcome_count())
            throw std::domain_error(name() + ": outcome " + std::to_string(k) +
                                    " outside the outcome set");
    }
    void check_params(const std::vector<double>& params) const {
        if (params.size() != param_count())
            throw std::domain_error(name() + ": expected " + std::to_string(param_count()) +
                                    " parameter(s), got " + std::to_string(params.size()));
        for (double p : params)
            if (!std::isfinite(p)) throw std::domain_error(name() + ": non-finite parameter");
    }
};

// Four-outcome phase model with fixed fringe visibility:
//   p(k | phi) = (1/4) [1 + v cos(2 phi - k pi/2)],  k in {0,1,2,3}.
// Probabilities have period pi in phi; one period is [0, pi).
class NoonPhaseModel final : public DiscreteModel {
  public:
    explicit NoonPhaseModel(double visibility) : v_(visibility) {
        if (!(v_ >= 0.0 && v_ <= 1.0))
            throw std::domain_error("NoonPhaseModel: visibility must lie in [0,1]");
    }

    std::size_t outcome_count() const override { return 4; }
    std::size_t param_count() const override { return 1; }

    double prob(int k, const std::vector<double>& params) const override {
        check_outcome(k);
        check_params(params);
        return 0.25 * (1.0 + v_ * std::cos(2.0 * params[0] - k * kHalfPi));
    }

    double dprob(int k, const std::vector<double>& params, std::size_t index) const override {
        check_outcome(k);
        check_params(params);
        check_index(index);
        return -0.5 * v_ * std::sin(2.0 * params[0] - k * kHalfPi);
    }

    std::pair<double, double> param_domain(std::size_t index) const override {
        check_index(index);
        return {0.0, kPi};
    }

    std::string name() const override { return "noon"; }

    double visibility() const { return v_; }

  private:
    void check_index(std::size_t index) const {
        if (index != 0) throw std::domain_error("noon: parameter index out of range");
    }
    static constexpr double kPi = 3.14159265358979323846;
    static constexpr double kHalfPi = kPi / 2.0;
    double v_;
};

// Same fringe law with the visibility promoted to a second estimated
// parameter: params = {phi, v}. Outcome k stands for the projection setting
// theta = k pi/16, so p(k | phi, v) = (1/4)(1 + v cos(2 phi - 8 theta)).
class TwoParamNoonModel final : public DiscreteModel {
  public:
    TwoParamNoonModel() = default;

    std::size_t outcome_count() const override { return 4; }
    std::size_t param_count() const override { return 2; }

    double prob(int k, const std::vector<double>& params) const override {
        check_outcome(k);
        check_all(params);
        return 0.25 * (1.0 + params[1] * std::cos(2.0 * params[0] - k * kHalfPi));
    }

    double dprob(int k, const std::vector<double>& params, std::size_t index) const override {
        check_outcome(k);
        check_all(params);
        const double arg = 2.0 * params[0] - k * kHalfPi;
        if (index == 0) return -0.5 * params[1] * std::sin(arg);
        if (index == 1) return 0.25 * std::cos(arg);
        throw std::domain_error("noon2: parameter index out of range");
    }

    std::pair<double, double> param_domain(std::size_t index) const override {
        if (index == 0) return {0.0, kPi};
        if (index == 1) return {0.0, 1.0};
        throw std::domain_error("noon2: parameter index out of range");
    }

    std::string name() const override { return "noon2"; }

  private:
    void check_all(const std::vector<double>& params) const {
        check_params(params);
        if (params[1] < 0.0 || params[1] > 1.0)
            throw std::domain_error("noon2: visibility parameter outside [0,1]");
    }
    static constexpr double kPi = 3.14159265358979323846;
    static constexpr double kHalfPi = kPi / 2.0;
};

// Ideal lossless two-port interferometer with a controllable feedback phase:
//   p(x | phi) = [1 + (-1)^x cos(phi - feedback)] / 2,  x in {0,1}.
// The feedback phase is fixed per instance; adaptive loops build a fresh
// instance per shot (the struct is trivially cheap) so models stay immutable.
class FeedbackInterferometerModel final : public DiscreteModel {
  public:
    explicit FeedbackInterferometerModel(double feedback_phase = 0.0)
        : feedback_(feedback_phase) {
        if (!std::isfinite(feedback_)) throw std::domain_error("feedback: non-finite phase");
    }

    FeedbackInterferometerModel with_feedback(double feedback_phase) const {
        return FeedbackInterferometerModel(feedback_phase);
    }

    std::size_t outcome_count() const override { return 2; }
    std::size_t param_count() const override { return 1; }

    double prob(int x, const std::vector<double>& params) const override {
        check_outcome(x);
        check_params(params);
        const double sign = (x == 0) ? 1.0 : -1.0;
        return 0.5 * (1.0 + sign * std::cos(params[0] - feedback_));
    }

    double dprob(int x, const std::vector<double>& params, std::size_t index) const override {
        check_outcome(x);
        check_params(params);
        if (index != 0) throw std::domain_error("feedback: parameter index out of range");
        const double sign = (x == 0) ? 1.0 : -1.0;
        return -0.5 * sign * std::sin(params[0] - feedback_);
    }

    std::pair<double, double> param_domain(std::size_t index) const override {
        if (index != 0) throw std::domain_error("feedback: parameter index out of range");
        return {0.0, 2.0 * 3.14159265358979323846};
    }

    std::string name() const override { return "feedback"; }

    double feedback() const { return feedback_; }

  private:
    double feedback_;
};

// Model read from a plain-text matrix: one row per parameter value lambda
// (first column), remaining columns p(k | lambda). Probabilities between
// tabulated rows are linearly interpolated; derivatives fall back to finite
// differences since no analytic form exists.
class TabulatedModel final : public DiscreteModel {
  public:
    TabulatedModel(std::vector<double> lambdas, std::vector<std::vector<double>> rows)
        : lambdas_(std::move(lambdas)), rows_(std::move(rows)) {
        if (lambdas_.size() < 2) throw std::domain_error("table: need at least 2 rows");
        if (rows_.size() != lambdas_.size())
            throw std::domain_error("table: row count mismatch");
        n_outcomes_ = rows_.front().size();
        if (n_outcomes_ < 2) throw std::domain_error("table: need at least 2 outcomes");
        for (std::size_t i = 0; i < lambdas_.size(); ++i) {
            if (i > 0 && !(lambdas_[i] > lambdas_[i - 1]))
                throw std::domain_error("table: lambda column must increase strictly");
            auto& row = rows_[i];
            if (row.size() != n_outcomes_) throw std::domain_error("table: ragged row");
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0) || p > 1.0 + 1e-12)
                    throw std::domain_error("table: probability outside [0,1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::domain_error("table: row does not sum to 1 within 1e-9");
            for (double& p : row) p /= sum;  // remove the residual round-off
        }
    }

    std::size_t outcome_count() const override { return n_outcomes_; }
    std::size_t param_count() const override { return 1; }

    double prob(int k, const std::vector<double>& params) const override {
        check_outcome(k);
        check_params(params);
        const double x = params[0];
        if (x < lambdas_.front() - 1e-12 || x > lambdas_.back() + 1e-12)
            throw std::domain_error("table: parameter outside the tabulated range");
        return interpolate(k, std::min(std::max(x, lambdas_.front()), lambdas_.back()));
    }

    double dprob(int k, const std::vector<double>& params, std::size_t index) const override {
        check_outcome(k);
        check_params(params);
        if (index != 0) throw std::domain_error("table: parameter index out of range");
        // Centered difference, one-sided at the table edges.
        const double h = 1e-6;
        const double lo = lambdas_.front(), hi = lambdas_.back();
        double a = params[0] - h, b = params[0] + h;
        if (a < lo) a = lo;
        if (b > hi) b = hi;
        if (!(b > a)) throw std::domain_error("table: range too narrow for differences");
        return (interpolate(k, b) - interpolate(k, a)) / (b - a);
    }

    std::pair<double, double> param_domain(std::size_t index) const override {
        if (index != 0) throw std::domain_error("table: parameter index out of range");
        return {lambdas_.front(), lambdas_.back()};
    }

    std::string name() const override { return "table"; }

  private:
    double interpolate(int k, double x) const {
        auto it = std::lower_bound(lambdas_.begin(), lambdas_.end(), x);
        std::size_t j = static_cast<std::size_t>(it - lambdas_.begin());
        if (j == 0) j = 1;
        if (j >= lambdas_.size()) j = lambdas_.size() - 1;
        const double x0 = lambdas_[j - 1], x1 = lambdas_[j];
        const double t = (x - x0) / (x1 - x0);
        return (1.0 - t) * rows_[j - 1][k] + t * rows_[j][k];
    }

    std::vector<double> lambdas_;
    std::vector<std::vector<double>> rows_;
    std::size_t n_outcomes_ = 0;
};

// p(k | params) with the model's own validation. Kept as a free function so
// call sites read symmetrically with the information-theory helpers.
inline double outcome_probability(const DiscreteModel& model, int k,
                                  const std::vector<double>& params) {
    return model.prob(k, params);
}

inline double probability_derivative(const DiscreteModel& model, int k,
                                     const std::vector<double>& params, std::size_t index) {
    return model.dprob(k, params, index);
}

// M independent categorical draws from p(. | params). Identical seeds give
// identical samples; the generator is local, never global.
inline Sample sample_outcomes(const DiscreteModel& model, const std::vector<double>& params,
                              std::uint64_t m, std::uint64_t seed) {
    const std::size_t n_out = model.outcome_count();
    std::vector<double> cdf(n_out);
    double acc = 0.0;
    for (std::size_t k = 0; k < n_out; ++k) {
        acc += model.prob(static_cast<int>(k), params);
        cdf[k] = acc;
    }
    Sample s;
    s.outcomes.reserve(m);
    s.histogram.assign(n_out, 0);
    Rng rng(seed);
    for (std::uint64_t i = 0; i < m; ++i) {
        const double u = rng.uniform() * acc;  // acc == 1 up to round-off
        std::size_t k = 0;
        while (k + 1 < n_out && u >= cdf[k]) ++k;
        s.outcomes.push_back(static_cast<int>(k));
        ++s.histogram[k];
    }
    return s;
}

}  // namespace qest

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qest {

// Uniform grid over a closed interval. node(0) == lower, node(n-1) == upper,
// spacing = (upper-lower)/(n-1). All quadrature in this library is the
// composite trapezoid rule on such grids.
struct ParameterGrid {
    double lower = 0.0;
    double upper = 1.0;
    std::size_t n = 2;

    ParameterGrid() = default;
    ParameterGrid(double lo, double hi, std::size_t points)
        : lower(lo), upper(hi), n(points) {
        if (!(lower < upper)) throw std::domain_error("grid: lower must be < upper");
        if (n < 2) throw std::domain_error("grid: need at least 2 points");
    }

    double spacing() const { return (upper - lower) / static_cast<double>(n - 1); }

    double node(std::size_t i) const { return lower + spacing() * static_cast<double>(i); }

    double width() const { return upper - lower; }

    // Trapezoid weight of node i (half spacing at the two ends).
    double quad_weight(std::size_t i) const {
        const double h = spacing();
        return (i == 0 || i + 1 == n) ? 0.5 * h : h;
    }

    std::vector<double> nodes() const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = node(i);
        return out;
    }
};

// Trapezoid integral of per-node values over the grid.
inline double trapezoid(const ParameterGrid& g, const std::vector<double>& values) {
    if (values.size() != g.n) throw std::invalid_argument("trapezoid: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) acc += g.quad_weight(i) * values[i];
    return acc;
}

}  // namespace qest

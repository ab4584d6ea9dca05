#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qest/bayes.hpp"
#include "qest/montecarlo.hpp"

namespace qest {

// All floating-point output goes through this: 17 significant digits, enough
// for a double to survive a print/parse round trip bit-exactly.
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double parse_double(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw std::runtime_error("not a number: '" + s + "'");
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvTable parse_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != t.header.size())
                throw std::runtime_error("csv: ragged row '" + line + "'");
            t.rows.push_back(std::move(fields));
        }
    }
    return t;
}

inline CsvTable parse_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_csv(in);
}

inline constexpr const char* kSweepCsvHeader =
    "M,beta,xi_mean,xi_std,gaussian_limit,bound_floor,estimate_mean,estimate_std,n_valid";

inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    out << kSweepCsvHeader << '\n';
    for (const SweepCell& c : sweep.cells) {
        out << c.m << ',' << format_g17(c.beta) << ',' << format_g17(c.xi_mean) << ','
            << format_g17(c.xi_std) << ',' << format_g17(c.gaussian_limit) << ','
            << format_g17(c.bound_floor) << ',' << format_g17(c.estimate_mean) << ','
            << format_g17(c.estimate_std) << ',' << c.n_valid << '\n';
    }
}

inline void write_bias_csv(std::ostream& out, const std::vector<BiasPoint>& curve) {
    out << "M,estimate_mean,estimate_std,n_valid\n";
    for (const BiasPoint& p : curve)
        out << p.m << ',' << format_g17(p.estimate_mean) << ','
            << format_g17(p.estimate_std) << ',' << p.n_valid << '\n';
}

inline void write_posterior_csv(std::ostream& out, const Posterior& post) {
    out << "param,weight\n";
    for (std::size_t i = 0; i < post.grid.n; ++i)
        out << format_g17(post.grid.node(i)) << ',' << format_g17(post.weights[i]) << '\n';
}

inline void write_posterior2d_csv(std::ostream& out, const Posterior2D& post) {
    out << "param_a,param_b,weight\n";
    for (std::size_t i = 0; i < post.grid_a.n; ++i)
        for (std::size_t j = 0; j < post.grid_b.n; ++j)
            out << format_g17(post.grid_a.node(i)) << ',' << format_g17(post.grid_b.node(j))
                << ',' << format_g17(post.at(i, j)) << '\n';
}

// Holevo-variance-vs-shots table with the standard quantum limit reference.
inline void write_pgh_csv(std::ostream& out,
                          const std::vector<std::pair<std::uint64_t, double>>& points) {
    out << "shots,holevo_variance,sql_reference\n";
    for (const auto& [m, v] : points)
        out << m << ',' << format_g17(v) << ','
            << format_g17(1.0 / static_cast<double>(m)) << '\n';
}

// --- Data-file readers --------------------------------------------------------

// "outcome,count" rows (header optional). Counts land at their outcome index;
// unlisted outcomes stay zero.
inline std::vector<std::uint64_t> read_counts_csv(const std::string& path,
                                                  std::size_t n_outcomes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::uint64_t> hist(n_outcomes, 0);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split(line, ',');
        if (fields.size() != 2)
            throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                     ": expected 'outcome,count'");
        if (line_no == 1 && fields[0] == "outcome") continue;  // header row
        char* end = nullptr;
        const long k = std::strtol(fields[0].c_str(), &end, 10);
        if (*end != '\0' || k < 0 || static_cast<std::size_t>(k) >= n_outcomes)
            throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                     ": outcome outside the model's outcome set");
        const long long c = std::strtoll(fields[1].c_str(), &end, 10);
        if (*end != '\0' || c < 0)
            throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                     ": count must be a nonnegative integer");
        hist[static_cast<std::size_t>(k)] += static_cast<std::uint64_t>(c);
    }
    return hist;
}

// Whitespace-separated outcome indices.
inline std::vector<int> read_outcomes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<int> out;
    std::string tok;
    while (in >> tok) {
        if (tok[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        char* end = nullptr;
        const long k = std::strtol(tok.c_str(), &end, 10);
        if (*end != '\0')
            throw std::runtime_error(path + ": '" + tok + "' is not an outcome index");
        out.push_back(static_cast<int>(k));
    }
    return out;
}

// First data line decides: a comma means "outcome,count" rows.
inline bool looks_like_counts_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        return line.find(',') != std::string::npos;
    }
    return false;
}

// Whitespace-separated matrix with '#' comment lines: first column the
// parameter value, remaining columns p(k | value) per outcome.
inline TabulatedModel read_tabulated_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<double> lambdas;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<double> values;
        double v;
        while (ls >> v) values.push_back(v);
        if (values.empty()) continue;
        if (values.size() < 3)
            throw std::runtime_error(path + " line " + std::to_string(line_no) +
                                     ": need a parameter value and at least 2 probabilities");
        lambdas.push_back(values.front());
        rows.emplace_back(values.begin() + 1, values.end());
    }
    try {
        return TabulatedModel(std::move(lambdas), std::move(rows));
    } catch (const std::domain_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace qest

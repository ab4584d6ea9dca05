// Command-line front end: estimation, information bounds, posterior export,
// saturation sweeps, and the adaptive-feedback baseline, with CSV/JSON output
// and a manifest next to every file so runs can be reproduced exactly.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qest/bayes.hpp"
#include "qest/config.hpp"
#include "qest/grid.hpp"
#include "qest/information.hpp"
#include "qest/io.hpp"
#include "qest/mle.hpp"
#include "qest/model.hpp"
#include "qest/montecarlo.hpp"
#include "qest/version.hpp"

namespace {

using nlohmann::json;

struct CommonOptions {
    std::string model_spec = "noon";
    double phi = 0.2;
    double vis = 0.9;
    double feedback = 0.0;
    std::size_t grid_points = 0;  // 0: model default
    std::uint64_t seed = 1;
    std::size_t threads = 0;  // 0: hardware parallelism
    std::string out;          // output directory; empty means stdout where possible
    std::string format = "csv";
};

void add_common_flags(CLI::App& cmd, CommonOptions& o) {
    cmd.add_option("--model", o.model_spec,
                   "Model: noon | noon2 | feedback | table:<path>");
    cmd.add_option("--phi", o.phi, "Phase (first model parameter)");
    cmd.add_option("--vis", o.vis, "Visibility (noon contrast / noon2 second parameter)");
    cmd.add_option("--feedback", o.feedback, "Feedback phase offset (feedback model only)");
    cmd.add_option("--grid-points", o.grid_points, "Grid resolution (0: model default)");
    cmd.add_option("--seed", o.seed, "Master seed");
    cmd.add_option("--threads", o.threads, "Worker threads (0: hardware parallelism)");
    cmd.add_option("--out", o.out, "Output directory");
    cmd.add_option("--format", o.format, "Output format: csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
}

struct ResolvedModel {
    std::shared_ptr<const qest::DiscreteModel> model;
    std::vector<double> params;  // evaluation point from the flags
};

ResolvedModel make_model(const CommonOptions& o) {
    ResolvedModel r;
    if (o.model_spec == "noon") {
        r.model = std::make_shared<qest::NoonPhaseModel>(o.vis);
        r.params = {o.phi};
    } else if (o.model_spec == "noon2") {
        r.model = std::make_shared<qest::TwoParamNoonModel>();
        r.params = {o.phi, o.vis};
    } else if (o.model_spec == "feedback") {
        r.model = std::make_shared<qest::FeedbackInterferometerModel>(o.feedback);
        r.params = {o.phi};
    } else if (o.model_spec.rfind("table:", 0) == 0) {
        r.model = std::make_shared<qest::TabulatedModel>(
            qest::read_tabulated_model(o.model_spec.substr(6)));
        r.params = {o.phi};
    } else {
        throw std::domain_error("unknown model '" + o.model_spec + "'");
    }
    return r;
}

qest::ParameterGrid grid_for(const qest::DiscreteModel& model, const CommonOptions& o,
                             std::size_t index = 0) {
    return qest::default_grid(model, index, o.grid_points);
}

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

// Reproduction record written next to every produced file.
struct Manifest {
    std::string subcommand;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> parameters;
    std::vector<std::string> outputs;
};

void write_manifest(const std::filesystem::path& dir, const Manifest& m) {
    json j;
    j["tool"] = "qest";
    j["version"] = qest::kVersion;
    j["subcommand"] = m.subcommand;
    j["seed"] = m.seed;
    j["timestamp"] = iso_timestamp();
    j["parameters"] = m.parameters;
    j["outputs"] = m.outputs;
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << '\n';
    std::cout << "wrote " << (dir / "manifest.json").string() << '\n';
}

std::map<std::string, std::string> echo_common(const CommonOptions& o) {
    return {{"model", o.model_spec},
            {"phi", qest::format_g17(o.phi)},
            {"vis", qest::format_g17(o.vis)},
            {"feedback", qest::format_g17(o.feedback)},
            {"grid_points", std::to_string(o.grid_points)},
            {"seed", std::to_string(o.seed)},
            {"threads", std::to_string(o.threads)},
            {"format", o.format}};
}

// Small numeric table that can render as CSV or as a JSON array of objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void write_csv(std::ostream& out) const {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << columns[c] << (c + 1 < columns.size() ? ',' : '\n');
        for (const auto& row : rows)
            for (std::size_t c = 0; c < row.size(); ++c)
                out << qest::format_g17(row[c]) << (c + 1 < row.size() ? ',' : '\n');
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& row : rows) {
            json obj;
            for (std::size_t c = 0; c < row.size(); ++c) obj[columns[c]] = row[c];
            arr.push_back(obj);
        }
        return arr;
    }
};

// Emit a table to stdout, or to <out>/<name>.{csv,json} plus a manifest when
// an output directory was requested.
void emit_table(const Table& t, const CommonOptions& o, const std::string& name,
                Manifest manifest) {
    if (o.out.empty()) {
        if (o.format == "json")
            std::cout << t.to_json().dump(2) << '\n';
        else
            t.write_csv(std::cout);
        return;
    }
    const std::filesystem::path dir(o.out);
    std::filesystem::create_directories(dir);
    const auto path = dir / (name + (o.format == "json" ? ".json" : ".csv"));
    std::ofstream out(path);
    if (o.format == "json")
        out << t.to_json().dump(2) << '\n';
    else
        t.write_csv(out);
    std::cout << "wrote " << path.string() << '\n';
    manifest.outputs.push_back(path.string());
    write_manifest(dir, manifest);
}

// --- fisher ---------------------------------------------------------------

int cmd_fisher(const CommonOptions& o, const std::vector<double>& alphas) {
    const auto rm = make_model(o);
    Table t;
    t.columns = {"alpha", "f_alpha"};
    for (double a : alphas)
        t.rows.push_back({a, qest::generalized_fisher(*rm.model, rm.params, 0, a)});
    Manifest m{"fisher", o.seed, echo_common(o), {}};
    emit_table(t, o, "fisher", std::move(m));
    return 0;
}

// --- bounds ---------------------------------------------------------------

int cmd_bounds(const CommonOptions& o, std::uint64_t events, const std::vector<double>& betas) {
    const auto rm = make_model(o);
    Table t;
    t.columns = {"M",   "beta",        "alpha",    "fisher",
                 "f_alpha", "crb", "barankin", "gaussian_limit"};
    for (double b : betas) {
        const auto rep = qest::make_bound_report(*rm.model, rm.params, 0, events, b);
        t.rows.push_back({static_cast<double>(events), rep.beta, rep.alpha, rep.fisher,
                          rep.generalized_fisher, rep.crb, rep.barankin, rep.gaussian_limit});
    }
    Manifest m{"bounds", o.seed, echo_common(o), {}};
    m.parameters["M"] = std::to_string(events);
    emit_table(t, o, "bounds", std::move(m));
    return 0;
}

// --- shared data loading ----------------------------------------------------

qest::Sample load_sample(const std::string& path, const qest::DiscreteModel& model) {
    if (qest::looks_like_counts_csv(path))
        return qest::make_sample_from_histogram(
            qest::read_counts_csv(path, model.outcome_count()));
    return qest::make_sample(qest::read_outcomes_file(path),
                             static_cast<int>(model.outcome_count()));
}

// --- posterior --------------------------------------------------------------

int cmd_posterior(const CommonOptions& o, const std::string& data_path) {
    const auto rm = make_model(o);
    const auto sample = load_sample(data_path, *rm.model);
    const std::filesystem::path dir(o.out.empty() ? "." : o.out);
    std::filesystem::create_directories(dir);
    Manifest m{"posterior", o.seed, echo_common(o), {}};
    m.parameters["data"] = data_path;
    m.parameters["events"] = std::to_string(sample.total());

    if (rm.model->param_count() == 1) {
        const auto post = qest::posterior(*rm.model, sample, grid_for(*rm.model, o));
        const auto path = dir / "posterior.csv";
        std::ofstream out(path);
        qest::write_posterior_csv(out, post);
        std::cout << "wrote " << path.string() << '\n';
        m.outputs.push_back(path.string());
    } else {
        const auto ga = grid_for(*rm.model, o, 0);
        const auto gb = qest::default_grid(*rm.model, 1);
        const auto post = qest::posterior_2d(*rm.model, sample, ga, gb);
        const auto joint_path = dir / "posterior2d.csv";
        std::ofstream joint(joint_path);
        qest::write_posterior2d_csv(joint, post);
        m.outputs.push_back(joint_path.string());
        std::cout << "wrote " << joint_path.string() << '\n';
        for (std::size_t axis = 0; axis < 2; ++axis) {
            const auto marg = qest::marginal(post, axis);
            const auto path = dir / (axis == 0 ? "posterior_a.csv" : "posterior_b.csv");
            std::ofstream out(path);
            qest::write_posterior_csv(out, marg);
            m.outputs.push_back(path.string());
            std::cout << "wrote " << path.string() << '\n';
        }
    }
    write_manifest(dir, m);
    return 0;
}

// --- estimate ---------------------------------------------------------------

int cmd_estimate(const CommonOptions& o, const std::string& data_path,
                 const std::string& method) {
    const auto rm = make_model(o);
    const auto sample = load_sample(data_path, *rm.model);
    const double events = static_cast<double>(sample.total());

    Table t;
    t.columns = {"events"};
    std::vector<double> row{events};
    std::string note;

    if (method == "bayes") {
        if (rm.model->param_count() == 1) {
            const auto post =
                qest::posterior(*rm.model, sample, grid_for(*rm.model, o));
            const double est = qest::bayes_estimate(post);
            const double var = qest::posterior_variance(post);
            t.columns.insert(t.columns.end(),
                             {"estimate", "posterior_sd", "crb_reference"});
            const double f = qest::fisher_information(*rm.model, {est});
            const double crb = events > 0 && f > 0 ? 1.0 / (events * f)
                                                   : std::numeric_limits<double>::quiet_NaN();
            row.insert(row.end(), {est, std::sqrt(var), crb});
            if (sample.total() == 0)
                note = "no information: the data file is empty, this is the prior mean";
        } else {
            const auto ga = grid_for(*rm.model, o, 0);
            const auto gb = qest::default_grid(*rm.model, 1);
            const auto post = qest::posterior_2d(*rm.model, sample, ga, gb);
            const auto ma = qest::marginal(post, 0);
            const auto mb = qest::marginal(post, 1);
            t.columns.insert(t.columns.end(), {"estimate_a", "posterior_sd_a", "estimate_b",
                                               "posterior_sd_b"});
            row.insert(row.end(),
                       {qest::bayes_estimate(ma), std::sqrt(qest::posterior_variance(ma)),
                        qest::bayes_estimate(mb), std::sqrt(qest::posterior_variance(mb))});
            if (sample.total() == 0)
                note = "no information: the data file is empty, these are prior means";
        }
    } else if (method == "mle") {
        if (rm.model->param_count() != 1)
            throw std::domain_error("estimate --method mle supports single-parameter models");
        const auto r =
            qest::mle_estimate(*rm.model, sample.histogram, grid_for(*rm.model, o));
        const double f = qest::fisher_information(*rm.model, {r.estimate});
        const double crb = f > 0 ? 1.0 / (events * f)
                                 : std::numeric_limits<double>::quiet_NaN();
        const double err = r.curvature < 0 ? std::sqrt(-1.0 / r.curvature)
                                           : std::numeric_limits<double>::quiet_NaN();
        t.columns.insert(t.columns.end(),
                         {"estimate", "log_likelihood", "error_bar", "crb_reference"});
        row.insert(row.end(), {r.estimate, r.log_likelihood_at_max, err, crb});
    } else {
        throw std::domain_error("unknown method '" + method + "' (bayes | mle)");
    }

    t.rows.push_back(std::move(row));
    Manifest m{"estimate", o.seed, echo_common(o), {}};
    m.parameters["data"] = data_path;
    m.parameters["method"] = method;
    if (!note.empty()) {
        std::cout << "note: " << note << '\n';
        m.parameters["note"] = note;
    }
    emit_table(t, o, "estimate", std::move(m));
    return 0;
}

// --- sweep --------------------------------------------------------------

// Defaults reproduce the bundled benchmark; a config file overrides them and
// explicit flags override the file.
struct SweepSettings {
    std::uint64_t m_lo = 10, m_hi = 450;
    std::size_t m_count = 25;
    std::size_t repetitions = 500;
    std::vector<double> betas{2.0, 3.0, 4.0, 5.0};
};

int cmd_sweep(CommonOptions o, const std::string& config_path, bool dry_run,
              SweepSettings s, const CLI::App& cmd) {
    const auto flag_given = [&cmd](const std::string& name) {
        const auto* opt = cmd.get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    qest::Config cfg;
    if (!config_path.empty()) cfg = qest::Config::parse_file(config_path);

    // file value unless the flag was typed explicitly
    if (!flag_given("--model")) o.model_spec = cfg.get_string("model", o.model_spec);
    if (!flag_given("--phi")) o.phi = cfg.get_double("phi", o.phi);
    if (!flag_given("--vis")) o.vis = cfg.get_double("vis", o.vis);
    if (!flag_given("--grid-points"))
        o.grid_points = cfg.get_u64("grid_points", o.grid_points);
    if (!flag_given("--seed")) o.seed = cfg.get_u64("sweep.seed", o.seed);
    if (!flag_given("--threads")) o.threads = cfg.get_u64("sweep.threads", o.threads);
    if (!flag_given("--m-lo")) s.m_lo = cfg.get_u64("sweep.m_lo", s.m_lo);
    if (!flag_given("--m-hi")) s.m_hi = cfg.get_u64("sweep.m_hi", s.m_hi);
    if (!flag_given("--m-count")) s.m_count = cfg.get_u64("sweep.m_count", s.m_count);
    if (!flag_given("--reps")) s.repetitions = cfg.get_u64("sweep.repetitions", s.repetitions);
    if (!flag_given("--betas") && cfg.has("sweep.betas"))
        s.betas = cfg.get_double_list("sweep.betas");

    const auto rm = make_model(o);
    qest::ExperimentConfig ec;
    ec.model = rm.model;
    ec.params_true = rm.params;
    ec.m_values = qest::log_spaced_m(s.m_lo, s.m_hi, s.m_count);
    ec.repetitions = s.repetitions;
    ec.betas = s.betas;
    ec.master_seed = o.seed;
    ec.grid = grid_for(*rm.model, o);
    ec.threads = o.threads;
    ec.validate();

    const std::filesystem::path dir(o.out.empty() ? "." : o.out);
    std::filesystem::create_directories(dir);
    Manifest m{"sweep", o.seed, echo_common(o), {}};
    if (!config_path.empty()) m.parameters["config"] = config_path;
    m.parameters["m_lo"] = std::to_string(s.m_lo);
    m.parameters["m_hi"] = std::to_string(s.m_hi);
    m.parameters["m_count"] = std::to_string(s.m_count);
    m.parameters["repetitions"] = std::to_string(s.repetitions);
    std::string beta_list;
    for (double b : s.betas)
        beta_list += (beta_list.empty() ? "" : ",") + qest::format_g17(b);
    m.parameters["betas"] = beta_list;

    if (dry_run) {
        m.parameters["dry_run"] = "true";
        write_manifest(dir, m);
        return 0;
    }

    const auto result = qest::run_sweep(ec);
    const auto sweep_path = dir / "sweep.csv";
    {
        std::ofstream out(sweep_path);
        qest::write_sweep_csv(out, result);
    }
    const auto bias_path = dir / "bias.csv";
    {
        std::ofstream out(bias_path);
        qest::write_bias_csv(out, qest::bias_curve(result));
    }
    m.outputs = {sweep_path.string(), bias_path.string()};
    std::cout << "wrote " << sweep_path.string() << '\n'
              << "wrote " << bias_path.string() << '\n';
    write_manifest(dir, m);

    const double rate = result.total_cells == 0
                            ? 0.0
                            : static_cast<double>(result.degenerate_cells) /
                                  static_cast<double>(result.total_cells);
    std::cout << "cells: " << result.total_cells << ", degenerate: " << result.degenerate_cells
              << '\n';
    if (rate > 0.5) {
        std::cerr << "error: degenerate posterior rate " << rate << " exceeds 0.5\n";
        return 3;
    }
    return 0;
}

// --- pgh ---------------------------------------------------------------------

int cmd_pgh(const CommonOptions& o, double phi_true, std::uint64_t shots,
            std::size_t repetitions) {
    qest::FeedbackInterferometerModel model(o.feedback);
    const std::size_t points = o.grid_points == 0 ? 512 : o.grid_points;
    const auto domain = model.param_domain(0);
    const qest::ParameterGrid grid(domain.first, domain.second, points);

    Manifest m{"pgh", o.seed, echo_common(o), {}};
    m.parameters["phi_true"] = qest::format_g17(phi_true);
    m.parameters["shots"] = std::to_string(shots);
    m.parameters["repetitions"] = std::to_string(repetitions);

    const std::filesystem::path dir(o.out.empty() ? "." : o.out);
    if (shots == 0) {
        std::cout << "no information: zero shots leave the posterior flat\n";
        std::filesystem::create_directories(dir);
        m.parameters["no_information"] = "true";
        write_manifest(dir, m);
        return 0;
    }

    // Estimates at log-spaced checkpoints come straight from each
    // trajectory's per-step posterior means.
    const auto checkpoints =
        qest::log_spaced_m(std::min<std::uint64_t>(25, shots), shots, 4);
    std::vector<std::vector<double>> estimates(checkpoints.size());
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        const auto run = qest::pgh_run(model, phi_true, shots, grid, o.seed + rep);
        for (std::size_t ci = 0; ci < checkpoints.size(); ++ci)
            estimates[ci].push_back(run.steps[checkpoints[ci] - 1].posterior_mean);
    }
    std::vector<std::pair<std::uint64_t, double>> rows;
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci)
        rows.emplace_back(checkpoints[ci], qest::holevo_variance(estimates[ci]));

    std::filesystem::create_directories(dir);
    const auto path = dir / "pgh.csv";
    {
        std::ofstream out(path);
        qest::write_pgh_csv(out, rows);
    }
    std::cout << "wrote " << path.string() << '\n';
    m.outputs.push_back(path.string());
    write_manifest(dir, m);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimation toolkit for discrete statistical models: Bayesian and "
                 "maximum-likelihood estimators, information bounds, and Monte Carlo "
                 "saturation benchmarks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("qest ") + qest::kVersion);

    CommonOptions fisher_o, bounds_o, posterior_o, estimate_o, sweep_o, pgh_o;

    auto* fisher = app.add_subcommand("fisher", "Information of order alpha per event");
    add_common_flags(*fisher, fisher_o);
    std::vector<double> alphas{2.0};
    fisher->add_option("--alpha", alphas, "Information orders (> 1)")->delimiter(',');

    auto* bounds = app.add_subcommand("bounds", "Moment lower bounds for M events");
    add_common_flags(*bounds, bounds_o);
    std::uint64_t bounds_m = 450;
    std::vector<double> bound_betas{2.0, 3.0, 4.0, 5.0};
    bounds->add_option("--m", bounds_m, "Events per experiment");
    bounds->add_option("--beta", bound_betas, "Moment orders (> 1)")->delimiter(',');

    auto* posterior = app.add_subcommand("posterior", "Export the posterior for a data file");
    add_common_flags(*posterior, posterior_o);
    std::string posterior_data;
    posterior->add_option("--data", posterior_data, "Outcome list or outcome,count CSV")
        ->required();

    auto* estimate = app.add_subcommand("estimate", "Point estimate from a data file");
    add_common_flags(*estimate, estimate_o);
    std::string estimate_data, method = "bayes";
    estimate->add_option("--data", estimate_data, "Outcome list or outcome,count CSV")
        ->required();
    estimate->add_option("--method", method, "bayes | mle")
        ->check(CLI::IsMember({"bayes", "mle"}));

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo saturation benchmark");
    add_common_flags(*sweep, sweep_o);
    SweepSettings sweep_s;
    std::string sweep_config;
    bool dry_run = false;
    sweep->add_option("--config", sweep_config, "key=value config file");
    sweep->add_flag("--dry-run", dry_run, "Write the manifest only, skip computation");
    sweep->add_option("--m-lo", sweep_s.m_lo, "Smallest event count");
    sweep->add_option("--m-hi", sweep_s.m_hi, "Largest event count");
    sweep->add_option("--m-count", sweep_s.m_count, "Number of log-spaced event counts");
    sweep->add_option("--reps", sweep_s.repetitions, "Experiments per event count");
    sweep->add_option("--betas", sweep_s.betas, "Moment orders")->delimiter(',');

    auto* pgh = app.add_subcommand("pgh", "Adaptive-feedback baseline run");
    add_common_flags(*pgh, pgh_o);
    double pgh_phi = 0.8;
    std::uint64_t pgh_shots = 200;
    std::size_t pgh_reps = 200;
    pgh->add_option("--phi-true", pgh_phi, "True phase to track");
    pgh->add_option("--shots", pgh_shots, "Shots per trajectory");
    pgh->add_option("--reps", pgh_reps, "Independent trajectories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fisher->parsed()) return cmd_fisher(fisher_o, alphas);
        if (bounds->parsed()) return cmd_bounds(bounds_o, bounds_m, bound_betas);
        if (posterior->parsed()) return cmd_posterior(posterior_o, posterior_data);
        if (estimate->parsed()) return cmd_estimate(estimate_o, estimate_data, method);
        if (sweep->parsed())
            return cmd_sweep(sweep_o, sweep_config, dry_run, sweep_s, *sweep);
        if (pgh->parsed()) return cmd_pgh(pgh_o, pgh_phi, pgh_shots, pgh_reps);
    } catch (const qest::degenerate_posterior_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const qest::incompatible_data_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const qest::unbounded_variance_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const qest::zero_information_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

// Batch front end: simulate / fit / krige / validate on CSV files driven
// by a single JSON config.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "wrapgp/circular.hpp"
#include "wrapgp/inference.hpp"
#include "wrapgp/io.hpp"
#include "wrapgp/prediction.hpp"
#include "wrapgp/sim.hpp"
#include "wrapgp/wrapped_normal.hpp"

namespace {

using nlohmann::json;
using namespace wrapgp;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_model = 3;
constexpr int exit_consistency = 4;

struct RunConfig {
    std::string model = "spatial";
    AngleUnit angle_unit = AngleUnit::radians;
    bool incoming = false;
    Priors priors;
    McmcConfig mcmc;
    SimSpec sim;
    double grid_resolution_km = 10.0;
    json raw;
    std::string config_hash;
};

double require_positive(const json& j, const char* field, double fallback) {
    const double v = j.value(field, fallback);
    if (!(v > 0.0))
        throw config_error(std::string("config field '") + field +
                           "' must be > 0");
    return v;
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (!path.empty()) {
        const std::string text = read_file(path);
        cfg.raw = json::parse(text);
    } else {
        cfg.raw = json::object();
    }
    const json& j = cfg.raw;

    cfg.model = j.value("model", "spatial");
    if (cfg.model != "spatial" && cfg.model != "independent")
        throw config_error("config field 'model' must be 'spatial' or "
                           "'independent'");
    const std::string unit = j.value("angle_unit", "radians");
    if (unit == "radians") cfg.angle_unit = AngleUnit::radians;
    else if (unit == "degrees") cfg.angle_unit = AngleUnit::degrees;
    else throw config_error("config field 'angle_unit' must be 'radians' or "
                            "'degrees'");
    const std::string convention =
        j.value("direction_convention", "outgoing");
    if (convention == "incoming") cfg.incoming = true;
    else if (convention != "outgoing")
        throw config_error(
            "config field 'direction_convention' must be 'outgoing' or "
            "'incoming'");
    if (j.value("kernel", "exponential") != "exponential")
        throw config_error("config field 'kernel': only 'exponential' is "
                           "supported");

    const json priors = j.value("priors", json::object());
    const json mu = priors.value("mu", json::object());
    cfg.priors.mu.mean = mu.value("mean", 0.0);
    cfg.priors.mu.variance = require_positive(mu, "variance", 100.0);
    const json s2 = priors.value("sigma2", json::object());
    cfg.priors.sigma2.shape = require_positive(s2, "shape", 2.0);
    cfg.priors.sigma2.scale = require_positive(s2, "scale", 1.0);
    if (s2.contains("right_trunc") && !s2["right_trunc"].is_null())
        cfg.priors.sigma2.right_trunc =
            require_positive(s2, "right_trunc", 1.0);
    const json phi = priors.value("phi", json::object());
    cfg.priors.phi.lo = phi.value("lo", 0.001);
    cfg.priors.phi.hi = phi.value("hi", 1.0);

    const json mcmc = j.value("mcmc", json::object());
    cfg.mcmc.iterations = mcmc.value("iterations", std::size_t{30000});
    cfg.mcmc.burn_in = mcmc.value("burn_in", std::size_t{6000});
    cfg.mcmc.thin = mcmc.value("thin", std::size_t{10});
    const double pv_s2 = require_positive(mcmc, "proposal_var_log_sigma2", 0.01);
    const double pv_phi = require_positive(mcmc, "proposal_var_log_phi", 0.01);
    const double pc = mcmc.value("proposal_cov_log", 0.0);
    cfg.mcmc.proposal_cov << pv_s2, pc, pc, pv_phi;
    cfg.mcmc.adapt_during_burnin = mcmc.value("adapt_during_burnin", true);
    cfg.mcmc.seed = mcmc.value("seed", std::uint64_t{0});

    const json sim = j.value("sim", json::object());
    cfg.sim.n_total = sim.value("n_total", std::size_t{100});
    cfg.sim.mu = sim.value("mu", pi);
    cfg.sim.sigma2 = require_positive(sim, "sigma2", 0.1);
    cfg.sim.phi = require_positive(sim, "phi", 0.021);
    cfg.sim.n_estimation = sim.value("n_estimation", std::size_t{70});
    const json region = sim.value("region", json::object());
    cfg.sim.region.x_min = region.value("x_min", 0.0);
    cfg.sim.region.y_min = region.value("y_min", 0.0);
    cfg.sim.region.x_max = region.value("x_max", 205.15);
    cfg.sim.region.y_max = region.value("y_max", 205.15);
    cfg.sim.seed = cfg.mcmc.seed;

    const json grid = j.value("grid", json::object());
    cfg.grid_resolution_km = require_positive(grid, "resolution_km", 10.0);

    cfg.config_hash = hash_hex(cfg.raw.dump());

    cfg.priors.validate();
    cfg.mcmc.validate();
    return cfg;
}

std::string path_from_config(const RunConfig& cfg, const char* key,
                             const std::string& fallback) {
    const json paths = cfg.raw.value("paths", json::object());
    return paths.value(key, fallback);
}

void print_warnings(const PosteriorDraws& draws) {
    for (const std::string& w : draws.warnings)
        std::cerr << "warning: " << w << '\n';
}

void write_summary(std::ostream& out, const FitSummary& s, bool spatial) {
    out << std::setprecision(6);
    out << "mean_direction " << s.mean_direction.value() << " ("
        << s.mean_direction_arc.lower.value() << ", "
        << s.mean_direction_arc.upper.value() << ")\n";
    out << "concentration " << s.concentration.estimate << " ("
        << s.concentration.lo << ", " << s.concentration.hi << ")\n";
    if (spatial && s.phi) {
        out << "phi " << s.phi->estimate << " (" << s.phi->lo << ", "
            << s.phi->hi << ")\n";
        out << "acceptance_rate " << s.acceptance_rate << '\n';
    }
}

int cmd_simulate(const RunConfig& cfg) {
    const SimResult result = simulate(cfg.sim);
    if (result.resampled_sites)
        std::cerr << "warning: coincident random sites, design resampled\n";
    const std::string est_path =
        path_from_config(cfg, "sample", "sample.csv");
    const std::string val_path =
        path_from_config(cfg, "validation", "validation.csv");
    const std::string truth_path =
        path_from_config(cfg, "truth", "truth.json");
    write_sample_csv(est_path, result.estimation, cfg.angle_unit);
    write_sample_csv(val_path, result.validation, cfg.angle_unit);
    json truth;
    truth["mu"] = result.truth.mu;
    truth["sigma2"] = result.truth.sigma2;
    truth["phi"] = result.truth.phi;
    truth["seed"] = result.truth.seed;
    truth["estimation_indices"] = result.truth.estimation_indices;
    truth["validation_indices"] = result.truth.validation_indices;
    std::ofstream(truth_path) << truth.dump(2) << '\n';
    std::cout << "wrote " << est_path << " (" << result.estimation.size()
              << " sites), " << val_path << " (" << result.validation.size()
              << " sites), " << truth_path << '\n';
    return exit_ok;
}

int cmd_fit(const RunConfig& cfg, const std::string& data_path) {
    const CircularSample sample = read_sample_csv(data_path, cfg.angle_unit);
    PosteriorDraws draws;
    if (cfg.model == "spatial")
        draws = fit_spatial(sample, KernelKind::exponential, cfg.priors,
                            cfg.mcmc);
    else
        draws = fit_independent(sample.angles, cfg.priors, cfg.mcmc);
    print_warnings(draws);

    const std::string chain_path = path_from_config(cfg, "chain", "chain.csv");
    ChainFile chain{cfg.model, cfg.config_hash, sample_hash(sample),
                    std::move(draws)};
    write_chain(chain_path, chain, sample.size());

    const FitSummary summary =
        summarize(chain.draws, 0.95,
                  cfg.model == "spatial" ? std::optional(cfg.priors.phi)
                                         : std::nullopt);
    const std::string summary_path =
        path_from_config(cfg, "summary", "summary.txt");
    std::ofstream sum_out(summary_path);
    write_summary(sum_out, summary, cfg.model == "spatial");
    write_summary(std::cout, summary, cfg.model == "spatial");
    std::cout << "retained_draws " << chain.draws.draws.size() << '\n';
    std::cout << "wrote " << chain_path << ", " << summary_path << '\n';
    return exit_ok;
}

std::vector<Point> default_grid(const CircularSample& sample,
                                double resolution_km) {
    double x_min = sample.locations.front().x, x_max = x_min;
    double y_min = sample.locations.front().y, y_max = y_min;
    for (const Point& p : sample.locations) {
        x_min = std::min(x_min, p.x);
        x_max = std::max(x_max, p.x);
        y_min = std::min(y_min, p.y);
        y_max = std::max(y_max, p.y);
    }
    std::vector<Point> grid;
    for (double y = y_min; y <= y_max + 1e-9; y += resolution_km)
        for (double x = x_min; x <= x_max + 1e-9; x += resolution_km)
            grid.push_back(Point{x, y});
    return grid;
}

std::vector<Point> read_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) ||
        detail::split_csv_line(line) !=
            std::vector<std::string>{"x_km", "y_km"})
        throw config_error(path + ": expected header x_km,y_km");
    std::vector<Point> grid;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw config_error(path + ": expected 2 fields per row");
        grid.push_back(Point{std::stod(fields[0]), std::stod(fields[1])});
    }
    return grid;
}

int cmd_krige(const RunConfig& cfg, const std::string& chain_path,
              const std::string& data_path, const std::string& grid_path,
              bool incoming, unsigned threads) {
    const CircularSample sample = read_sample_csv(data_path, cfg.angle_unit);
    const ChainFile chain = read_chain(chain_path);
    if (chain.data_hash != sample_hash(sample)) {
        std::cerr << "error: chain file " << chain_path
                  << " was fitted to different data (hash mismatch)\n";
        return exit_consistency;
    }
    const std::vector<Point> grid =
        grid_path.empty() ? default_grid(sample, cfg.grid_resolution_km)
                          : read_grid_csv(grid_path);
    const auto results = krige(chain.draws, sample, grid, threads);
    const std::string out_path = path_from_config(cfg, "krige", "krige.csv");
    write_krige_csv(out_path, results, incoming || cfg.incoming);
    std::cout << "wrote " << out_path << " (" << results.size() << " cells)\n";
    return exit_ok;
}

int cmd_validate(const RunConfig& cfg, const std::string& data_path,
                 const std::string& validation_path, bool fast_loo) {
    const CircularSample sample = read_sample_csv(data_path, cfg.angle_unit);
    std::optional<CircularSample> validation;
    if (!validation_path.empty())
        validation = read_sample_csv(validation_path, cfg.angle_unit);

    LooOptions loo_opts;
    loo_opts.fast = fast_loo;
    double spatial_error = 0.0;
    std::string spatial_label;
    if (!validation) {
        const LooReport loo = loo_validate(sample, KernelKind::exponential,
                                           cfg.priors, cfg.mcmc, loo_opts);
        spatial_error = loo.average_prediction_error;
        spatial_label = "spatial_loo_error";
    } else {
        const PosteriorDraws draws = fit_spatial(
            sample, KernelKind::exponential, cfg.priors, cfg.mcmc);
        print_warnings(draws);
        const auto results = krige(draws, sample, validation->locations);
        double sum = 0.0;
        for (std::size_t j = 0; j < validation->size(); ++j)
            sum += circular_distance(results[j].mean_direction,
                                     validation->angles[j]);
        spatial_error = sum / static_cast<double>(validation->size());
        spatial_label = "spatial_validation_error";
    }

    // Nonspatial comparison with the independence model on the same data.
    const PosteriorDraws ind_draws =
        fit_independent(sample.angles, cfg.priors, cfg.mcmc);
    const double nonspatial_error =
        nonspatial_predict_error(validation ? *validation : sample, ind_draws);

    const double reduction =
        nonspatial_error > 0.0
            ? 100.0 * (1.0 - spatial_error / nonspatial_error)
            : 0.0;
    std::cout << std::setprecision(6);
    std::cout << spatial_label << ' ' << spatial_error << '\n'
              << "nonspatial_error " << nonspatial_error << '\n'
              << "error_ratio "
              << (nonspatial_error > 0.0 ? spatial_error / nonspatial_error
                                         : 0.0)
              << '\n'
              << "percent_reduction " << reduction << '\n';
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wrapped Gaussian process analysis of circular spatial data"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned threads = std::thread::hardware_concurrency();
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--threads", threads, "worker threads for kriging");

    auto* sim_cmd = app.add_subcommand("simulate",
                                       "generate a synthetic wrapped GP sample");
    auto* fit_cmd = app.add_subcommand("fit", "run MCMC on a sample CSV");
    auto* krige_cmd =
        app.add_subcommand("krige", "krige a fitted chain onto a grid");
    auto* validate_cmd = app.add_subcommand(
        "validate", "leave-one-out / hold-out validation report");

    std::string data_path, chain_path, grid_path, validation_path;
    bool incoming = false, fast_loo = false;
    fit_cmd->add_option("--data", data_path, "sample CSV")->required();
    krige_cmd->add_option("--data", data_path, "sample CSV")->required();
    krige_cmd->add_option("--chain", chain_path, "chain CSV from fit")
        ->required();
    krige_cmd->add_option("--grid", grid_path,
                          "grid CSV (x_km,y_km); default: data bounding box "
                          "at the configured resolution");
    krige_cmd->add_flag("--incoming", incoming,
                        "export incoming directions (180 degree rotation)");
    validate_cmd->add_option("--data", data_path, "sample CSV")->required();
    validate_cmd->add_option("--validation", validation_path,
                             "held-out validation CSV; omit for LOO");
    validate_cmd->add_flag("--fast-loo", fast_loo,
                           "reuse the full-data fit for LOO conditioning");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (seed_given) {
            cfg.mcmc.seed = seed;
            cfg.sim.seed = seed;
        }
        if (sim_cmd->parsed()) return cmd_simulate(cfg);
        if (fit_cmd->parsed()) return cmd_fit(cfg, data_path);
        if (krige_cmd->parsed())
            return cmd_krige(cfg, chain_path, data_path, grid_path, incoming,
                             std::max(1u, threads));
        if (validate_cmd->parsed())
            return cmd_validate(cfg, data_path, validation_path, fast_loo);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const singular_covariance_error& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return exit_model;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_model;
    }
    return exit_ok;
}

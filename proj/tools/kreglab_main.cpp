// Command-line runner for scans, locality reports, correlation data,
// synthetic data generation, and Gaussian mass tables.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kreglab/dataset.hpp"
#include "kreglab/diagnostics.hpp"
#include "kreglab/experiment.hpp"
#include "kreglab/format.hpp"

namespace {

struct CommonOverrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> runs;
};

kreglab::ExperimentConfig load_with_overrides(const CommonOverrides& common) {
    kreglab::ExperimentConfig config = kreglab::load_config(common.config_path);
    if (common.seed) {
        config.seed = *common.seed;
        config.seed_set = true;
    }
    if (common.out_dir) config.output_dir = *common.out_dir;
    if (common.runs) config.runs = *common.runs;
    return config;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string cell = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            values.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw std::runtime_error(flag + ": cannot parse '" + cell + "' as a number");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return values;
}

int run_scan_command(const CommonOverrides& common) {
    const kreglab::ExperimentConfig config = load_with_overrides(common);
    const kreglab::ScanResult result = kreglab::run_scan(config);
    const std::filesystem::path out(config.output_dir);
    std::cout << "wrote " << (out / "scan.csv").string() << "\n"
              << "wrote " << (out / "scan_summary.json").string() << "\n";
    for (const kreglab::VariantBest& best : result.best)
        std::cout << best.variant << ": best l = " << kreglab::format_double(best.best_l)
                  << ", mean test rmse = " << kreglab::format_double(best.best_mean_test_rmse) << "\n";
    return 0;
}

int run_locality_command(const CommonOverrides& common, double l) {
    const kreglab::ExperimentConfig config = load_with_overrides(common);
    const auto reports = kreglab::run_locality(config, l);
    const std::filesystem::path out(config.output_dir);
    for (const kreglab::LocalityReport& report : reports)
        std::cout << "wrote " << (out / ("locality_z" + std::to_string(report.zeta_index) + ".csv")).string()
                  << " (length " << kreglab::format_double(report.length) << ")\n";
    std::cout << "wrote " << (out / "locality.json").string() << "\n";
    return 0;
}

int run_correlate_command(const CommonOverrides& common, double l) {
    const kreglab::ExperimentConfig config = load_with_overrides(common);
    const kreglab::CorrelationSummary summary = kreglab::run_correlate(config, l);
    const std::filesystem::path out(config.output_dir);
    std::cout << "wrote " << (out / "correlation.csv").string() << "\n"
              << "wrote " << (out / "correlation_summary.json").string() << "\n";
    std::cout << "train rmse = " << kreglab::format_double(summary.train.rmse);
    if (summary.train.correlation_r)
        std::cout << ", train R = " << kreglab::format_double(*summary.train.correlation_r);
    std::cout << "\n";
    if (summary.test) {
        std::cout << "test rmse = " << kreglab::format_double(summary.test->rmse);
        if (summary.test->correlation_r)
            std::cout << ", test R = " << kreglab::format_double(*summary.test->correlation_r);
        std::cout << "\n";
    }
    return 0;
}

int run_gen_data_command(int dim, long long points, std::uint64_t seed, double halfwidth,
                         const std::string& out_path) {
    const kreglab::Dataset data = kreglab::synth_potential(dim, points, seed, halfwidth);
    kreglab::save_csv(data, out_path);
    std::cout << "wrote " << out_path << " (" << data.n_rows() << " rows, dim " << data.dim() << ")\n";
    return 0;
}

int run_mass_command(const std::string& dims_text, const std::string& radii_text, const std::string& out_path) {
    std::vector<int> dims;
    for (double d : parse_double_list(dims_text, "--dims")) {
        if (d < 1 || d != static_cast<int>(d)) throw std::runtime_error("--dims: values must be positive integers");
        dims.push_back(static_cast<int>(d));
    }
    const std::vector<double> radii = parse_double_list(radii_text, "--r");

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("mass: cannot open '" + out_path + "' for writing");
        out = &file;
    }
    *out << "dim,r,mass\n";
    for (int dim : dims)
        for (double r : radii)
            *out << dim << ',' << kreglab::format_double(r) << ','
                 << kreglab::format_double(kreglab::gaussian_mass_within(dim, r)) << '\n';
    if (!out_path.empty()) std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kreglab: multi-zeta kernel regression scans and locality diagnostics"};
    app.require_subcommand(1);

    CommonOverrides common;
    double l_value = 0.0;

    auto add_common = [&common](CLI::App* cmd, bool with_runs) {
        cmd->add_option("--config", common.config_path, "experiment config (JSON)")->required();
        cmd->add_option("--seed", common.seed, "override the config seed");
        cmd->add_option("--out", common.out_dir, "override the output directory");
        if (with_runs) cmd->add_option("--runs", common.runs, "override the number of runs");
    };

    CLI::App* scan = app.add_subcommand("scan", "rmse scan over the length grid; writes scan.csv + scan_summary.json");
    add_common(scan, true);

    CLI::App* locality = app.add_subcommand(
        "locality", "kernel entry distributions at a given length; writes locality_z<k>.csv + locality.json");
    add_common(locality, false);
    locality->add_option("--l", l_value, "length parameter (typically the scan's best l)")->required();

    CLI::App* correlate = app.add_subcommand(
        "correlate", "exact vs predicted data for one fit; writes correlation.csv + correlation_summary.json");
    add_common(correlate, false);
    correlate->add_option("--l", l_value, "length parameter of the fit")->required();

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
    int gen_dim = 3;
    long long gen_points = 2000;
    std::uint64_t gen_seed = 0;
    double gen_halfwidth = 1.5;
    std::string gen_out;
    gen->add_option("--dim", gen_dim, "input dimension")->required();
    gen->add_option("--points", gen_points, "number of points")->required();
    gen->add_option("--seed", gen_seed, "generator seed")->required();
    gen->add_option("--halfwidth", gen_halfwidth, "box halfwidth (default 1.5)");
    gen->add_option("--out", gen_out, "output CSV path")->required();

    CLI::App* mass = app.add_subcommand("mass", "Gaussian mass within r standard deviations, tabulated by dimension");
    std::string mass_dims = "1,2,3,6,10,15";
    std::string mass_radii = "0.25,0.5,0.75,1,1.5,2,3,5";
    std::string mass_out;
    mass->add_option("--dims", mass_dims, "comma-separated dimensions");
    mass->add_option("--r", mass_radii, "comma-separated radii in standard deviations");
    mass->add_option("--out", mass_out, "output CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scan->parsed()) return run_scan_command(common);
        if (locality->parsed()) return run_locality_command(common, l_value);
        if (correlate->parsed()) return run_correlate_command(common, l_value);
        if (gen->parsed()) return run_gen_data_command(gen_dim, gen_points, gen_seed, gen_halfwidth, gen_out);
        if (mass->parsed()) return run_mass_command(mass_dims, mass_radii, mass_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kreglab/dataset.hpp"
#include "kreglab/diagnostics.hpp"
#include "kreglab/format.hpp"
#include "kreglab/kernels.hpp"
#include "kreglab/regression.hpp"

namespace kreglab {

struct SyntheticSource {
    int dim = 3;
    Eigen::Index n_points = 2000;
    double box_halfwidth = 1.5;
};

// Everything one scan needs.  The seed is mandatory: runs are never seeded
// from the clock, so a config reproduces its outputs byte for byte.
struct ExperimentConfig {
    std::string csv_path;  // exclusive with `synthetic`
    std::optional<SyntheticSource> synthetic;

    Eigen::Index n_centers = 0;
    double m_ratio = 1.4;
    Eigen::Index test_size = 0;
    KernelFamily family = KernelFamily::SquaredExponential;
    std::vector<double> l_grid;        // empty: default grid derived from the data dimension
    std::vector<double> zeta_ratios;   // one double-zeta variant per ratio; empty: single-zeta only
    int runs = 3;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double rcond = 1e-10;
    std::string output_dir = ".";
};

struct ScanCell {
    std::string variant;
    double l = 0.0;
    int run = 0;
    double train_rmse = 0.0;
    double test_rmse = 0.0;
    double test_mae = 0.0;
    std::optional<double> test_r;
    Eigen::Index effective_rank = 0;
    std::string error;  // nonempty marks a failed cell; numeric fields are then meaningless
};

struct VariantBest {
    std::string variant;
    double best_l = 0.0;
    double best_mean_test_rmse = 0.0;
};

struct ScanResult {
    std::vector<std::string> variants;
    std::vector<double> l_grid;
    std::vector<ScanCell> cells;
    std::vector<VariantBest> best;
};

namespace detail {

inline void check_config(const ExperimentConfig& config) {
    if (config.csv_path.empty() == !config.synthetic.has_value())
        throw std::invalid_argument("config: exactly one data source (csv or synthetic) is required");
    if (config.n_centers < 1) throw std::invalid_argument("config: n_centers must be >= 1");
    if (!(config.m_ratio >= 1.0)) throw std::invalid_argument("config: m_ratio must be >= 1");
    if (config.test_size < 1) throw std::invalid_argument("config: test_size must be >= 1");
    if (config.runs < 1) throw std::invalid_argument("config: runs must be >= 1");
    if (!config.seed_set) throw std::invalid_argument("config: seed is required (no wall-clock seeding)");
    if (!(config.rcond > 0.0 && config.rcond < 1.0)) throw std::invalid_argument("config: rcond must lie in (0, 1)");
    for (std::size_t i = 0; i < config.l_grid.size(); ++i) {
        if (!(config.l_grid[i] > 0.0)) throw std::invalid_argument("config: l_grid values must be positive");
        if (i > 0 && !(config.l_grid[i] > config.l_grid[i - 1]))
            throw std::invalid_argument("config: l_grid values must be strictly increasing");
    }
    for (std::size_t i = 0; i < config.zeta_ratios.size(); ++i) {
        if (!(config.zeta_ratios[i] > 1.0)) throw std::invalid_argument("config: zeta_ratios must all exceed 1");
        for (std::size_t j = 0; j < i; ++j)
            if (config.zeta_ratios[i] == config.zeta_ratios[j])
                throw std::invalid_argument("config: duplicate zeta ratio");
    }
}

inline std::string variant_name(double ratio) {
    return ratio > 0.0 ? "dz" + format_double(ratio) : std::string("single");
}

// Replaces separators so messages stay one CSV field.
inline std::string sanitize_message(std::string message) {
    for (char& ch : message) {
        if (ch == ',') ch = ';';
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    return message;
}

inline std::string optional_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace detail

inline Dataset resolve_dataset(const ExperimentConfig& config) {
    if (!config.csv_path.empty()) return load_csv(config.csv_path);
    const SyntheticSource& s = *config.synthetic;
    return synth_potential(s.dim, s.n_points, config.seed_set ? config.seed : 0, s.box_halfwidth);
}

// Default scan grid: 20 geometrically spaced lengths on
// [0.25 sqrt(D), 8 sqrt(D)].  Standardized data has mean pairwise squared
// distance about 2D, so useful lengths scale with sqrt(D).
inline std::vector<double> default_l_grid(int dim) {
    if (dim < 1) throw std::invalid_argument("default_l_grid: dim must be >= 1");
    const double lo = 0.25 * std::sqrt(static_cast<double>(dim));
    const double hi = 8.0 * std::sqrt(static_cast<double>(dim));
    constexpr int count = 20;
    std::vector<double> grid(count);
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
    return grid;
}

// Per-variant best length by mean test rmse over the runs, ties broken
// toward the smaller length.  A length qualifies only if every run produced
// a finite test rmse for it.
inline std::vector<VariantBest> select_best(const std::vector<ScanCell>& cells) {
    std::vector<std::string> variant_order;
    for (const ScanCell& cell : cells)
        if (std::find(variant_order.begin(), variant_order.end(), cell.variant) == variant_order.end())
            variant_order.push_back(cell.variant);

    std::vector<VariantBest> best;
    for (const std::string& variant : variant_order) {
        std::map<double, std::pair<double, bool>> by_l;  // l -> (rmse sum, all cells usable)
        std::map<double, int> counts;
        for (const ScanCell& cell : cells) {
            if (cell.variant != variant) continue;
            auto& [sum, ok] = by_l.try_emplace(cell.l, std::make_pair(0.0, true)).first->second;
            if (!cell.error.empty() || !std::isfinite(cell.test_rmse)) ok = false;
            sum += cell.test_rmse;
            ++counts[cell.l];
        }
        bool found = false;
        VariantBest candidate{variant, 0.0, 0.0};
        for (const auto& [l, entry] : by_l) {  // std::map iterates l ascending
            if (!entry.second) continue;
            const double mean = entry.first / counts[l];
            if (!found || mean < candidate.best_mean_test_rmse) {
                candidate.best_l = l;
                candidate.best_mean_test_rmse = mean;
                found = true;
            }
        }
        if (found) best.push_back(candidate);
    }
    return best;
}

// Config echo for summaries.  The output directory is deliberately omitted
// so the emitted bytes do not depend on where the results land.
inline nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::json j;
    if (!config.csv_path.empty()) {
        j["data"] = {{"csv", config.csv_path}};
    } else if (config.synthetic) {
        j["data"] = {{"synthetic",
                      {{"dim", config.synthetic->dim},
                       {"points", config.synthetic->n_points},
                       {"halfwidth", config.synthetic->box_halfwidth}}}};
    }
    j["n_centers"] = config.n_centers;
    j["m_ratio"] = config.m_ratio;
    j["test_size"] = config.test_size;
    j["family"] = to_string(config.family);
    if (!config.l_grid.empty()) j["l_grid"] = config.l_grid;
    j["zeta_ratios"] = config.zeta_ratios;
    j["runs"] = config.runs;
    if (config.seed_set) j["seed"] = config.seed;
    j["rcond"] = config.rcond;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::runtime_error("config: top-level JSON value must be an object");
    static const std::vector<std::string> known{"data",  "n_centers",   "m_ratio", "test_size", "family", "l_grid",
                                                "zeta_ratios", "runs", "seed",    "rcond",     "output_dir"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::runtime_error("config: unknown key '" + key + "'");

    ExperimentConfig config;

    const nlohmann::json& data = j.at("data");
    if (data.contains("csv") == data.contains("synthetic"))
        throw std::runtime_error("config: data must have exactly one of 'csv' or 'synthetic'");
    if (data.contains("csv")) {
        config.csv_path = data.at("csv").get<std::string>();
        if (config.csv_path.empty()) throw std::runtime_error("config: data.csv must be a nonempty path");
    } else {
        const nlohmann::json& synth = data.at("synthetic");
        SyntheticSource source;
        source.dim = synth.at("dim").get<int>();
        source.n_points = synth.at("points").get<Eigen::Index>();
        source.box_halfwidth = synth.value("halfwidth", 1.5);
        config.synthetic = source;
    }

    config.n_centers = j.at("n_centers").get<Eigen::Index>();
    config.m_ratio = j.value("m_ratio", 1.4);
    config.test_size = j.at("test_size").get<Eigen::Index>();
    config.family = kernel_family_from_string(j.value("family", "squared_exponential"));

    if (j.contains("l_grid")) {
        const nlohmann::json& grid = j.at("l_grid");
        if (grid.is_array()) {
            config.l_grid = grid.get<std::vector<double>>();
        } else if (grid.is_object()) {
            const double lo = grid.at("min").get<double>();
            const double hi = grid.at("max").get<double>();
            const int count = grid.at("count").get<int>();
            const std::string spacing = grid.value("spacing", "geometric");
            if (spacing != "geometric") throw std::runtime_error("config: l_grid.spacing must be 'geometric'");
            if (!(lo > 0.0) || !(hi > lo) || count < 2)
                throw std::runtime_error("config: l_grid spec needs 0 < min < max and count >= 2");
            config.l_grid.resize(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i)
                config.l_grid[static_cast<std::size_t>(i)] =
                    lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
        } else {
            throw std::runtime_error("config: l_grid must be an array or a {min,max,count} object");
        }
    }

    if (j.contains("zeta_ratios")) config.zeta_ratios = j.at("zeta_ratios").get<std::vector<double>>();
    config.runs = j.value("runs", 3);
    if (j.contains("seed")) {
        if (j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() < 0)
            throw std::runtime_error("config: seed must be nonnegative");
        config.seed = j.at("seed").get<std::uint64_t>();
        config.seed_set = true;
    }
    config.rcond = j.value("rcond", 1e-10);
    config.output_dir = j.value("output_dir", ".");

    detail::check_config(config);
    return config;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("load_config: " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

namespace detail {

// One seeded split, standardized with statistics from the training rows
// only.  Run r uses seed + r so the runs differ but stay reproducible.
struct PreparedSplit {
    SplitIndices indices;
    Normalizer normalizer;
    Eigen::MatrixXd std_train;    // M x D, standardized
    Eigen::MatrixXd std_centers;  // N x D, the first rows of std_train
    Eigen::MatrixXd raw_test;
    Eigen::VectorXd train_targets;
    Eigen::VectorXd test_targets;
};

inline PreparedSplit prepare_split(const Dataset& data, const ExperimentConfig& config, int run) {
    PreparedSplit p;
    p.indices = split(data, config.n_centers, config.m_ratio, config.test_size,
                      config.seed + static_cast<std::uint64_t>(run));
    const Eigen::MatrixXd raw_train = gather_rows(data.inputs, p.indices.train_idx);
    p.raw_test = gather_rows(data.inputs, p.indices.test_idx);
    p.train_targets = gather(data.targets, p.indices.train_idx);
    p.test_targets = gather(data.targets, p.indices.test_idx);
    p.normalizer = fit_normalizer(raw_train, data.input_names);
    p.std_train = p.normalizer.apply(raw_train);
    p.std_centers = p.std_train.topRows(config.n_centers);
    return p;
}

}  // namespace detail

inline void write_scan_csv(const ScanResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_scan_csv: cannot open '" + path.string() + "' for writing");
    out << "variant,l,run,train_rmse,test_rmse,test_mae,test_r,effective_rank,error\n";
    for (const ScanCell& cell : result.cells) {
        out << cell.variant << ',' << format_double(cell.l) << ',' << cell.run << ',';
        if (cell.error.empty()) {
            out << format_double(cell.train_rmse) << ',' << format_double(cell.test_rmse) << ','
                << format_double(cell.test_mae) << ',' << detail::optional_field(cell.test_r) << ','
                << cell.effective_rank << ",\n";
        } else {
            out << ",,,,," << detail::sanitize_message(cell.error) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write_scan_csv: write to '" + path.string() + "' failed");
}

// Full scan: for every run a fresh seeded split, then one rectangular fit
// per (variant, length).  A failed fit flags its cell and the scan moves on.
// Results land in output_dir as scan.csv plus scan_summary.json.
inline ScanResult run_scan(const ExperimentConfig& config) {
    detail::check_config(config);
    const Dataset data = resolve_dataset(config);

    ScanResult result;
    result.l_grid = config.l_grid.empty() ? default_l_grid(static_cast<int>(data.dim())) : config.l_grid;
    result.variants.push_back(detail::variant_name(0.0));
    for (double ratio : config.zeta_ratios) result.variants.push_back(detail::variant_name(ratio));

    for (int run = 0; run < config.runs; ++run) {
        const detail::PreparedSplit p = detail::prepare_split(data, config, run);
        for (std::size_t v = 0; v < result.variants.size(); ++v) {
            const bool single = v == 0;
            const double ratio = single ? 0.0 : config.zeta_ratios[v - 1];
            for (double l : result.l_grid) {
                ScanCell cell;
                cell.variant = result.variants[v];
                cell.l = l;
                cell.run = run;
                try {
                    const KernelSpec spec = single ? KernelSpec::single(config.family, l)
                                                   : KernelSpec::with_ratios(config.family, l, {ratio});
                    const FitModel model = fit_rectangular(p.std_train, p.train_targets, p.std_centers, spec,
                                                           config.rcond, p.normalizer);
                    cell.train_rmse = model.solve_report.residual_norm /
                                      std::sqrt(static_cast<double>(p.train_targets.size()));
                    const Metrics test = score(predict(model, p.raw_test), p.test_targets);
                    cell.test_rmse = test.rmse;
                    cell.test_mae = test.mae;
                    cell.test_r = test.correlation_r;
                    cell.effective_rank = model.solve_report.effective_rank;
                } catch (const std::exception& e) {
                    cell.error = e.what();
                }
                result.cells.push_back(std::move(cell));
            }
        }
    }

    result.best = select_best(result.cells);

    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    write_scan_csv(result, out_dir / "scan.csv");

    nlohmann::json summary;
    summary["format"] = "kreglab-scan-summary";
    summary["version"] = 1;
    summary["config"] = config_to_json(config);
    summary["l_grid"] = result.l_grid;
    summary["variants"] = result.variants;
    summary["best"] = nlohmann::json::array();
    for (const VariantBest& vb : result.best)
        summary["best"].push_back({{"variant", vb.variant},
                                   {"best_l", vb.best_l},
                                   {"best_mean_test_rmse", vb.best_mean_test_rmse}});
    std::ofstream out(out_dir / "scan_summary.json");
    if (!out) throw std::runtime_error("run_scan: cannot write scan_summary.json");
    out << summary.dump(2) << '\n';
    if (!out) throw std::runtime_error("run_scan: write of scan_summary.json failed");
    return result;
}

// Entry distributions of the run-0 split at the given length: one report per
// zeta length (the length itself, then ratio * length per configured ratio).
// Writes locality_z<k>.csv per report plus locality.json with all records.
inline std::vector<LocalityReport> run_locality(const ExperimentConfig& config, double l, int bins = 50) {
    detail::check_config(config);
    if (!(l > 0.0)) throw std::invalid_argument("run_locality: l must be positive");
    const Dataset data = resolve_dataset(config);
    const detail::PreparedSplit p = detail::prepare_split(data, config, 0);

    std::vector<double> lengths{l};
    for (double ratio : config.zeta_ratios) lengths.push_back(ratio * l);

    std::vector<LocalityReport> reports;
    for (std::size_t z = 0; z < lengths.size(); ++z)
        reports.push_back(kernel_entry_distribution(p.std_train, p.std_centers, config.family, lengths[z], bins,
                                                    static_cast<int>(z)));

    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    nlohmann::json all = nlohmann::json::array();
    for (const LocalityReport& report : reports) {
        write_locality_csv(report, out_dir / ("locality_z" + std::to_string(report.zeta_index) + ".csv"));
        all.push_back(locality_to_json(report));
    }
    nlohmann::json doc;
    doc["format"] = "kreglab-locality";
    doc["version"] = 1;
    doc["config"] = config_to_json(config);
    doc["reports"] = all;
    std::ofstream out(out_dir / "locality.json");
    if (!out) throw std::runtime_error("run_locality: cannot write locality.json");
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("run_locality: write of locality.json failed");
    return reports;
}

struct CorrelationSummary {
    Metrics train;
    std::optional<Metrics> test;  // absent for an empty test set
    double l = 0.0;
};

// Exact-vs-predicted pairs for correlation plots, one CSV row per point,
// with a JSON summary carrying R and rmse for both point sets.
inline CorrelationSummary emit_correlation_data(const FitModel& model, const Eigen::MatrixXd& train_inputs,
                                                const Eigen::VectorXd& train_targets,
                                                const Eigen::MatrixXd& test_inputs,
                                                const Eigen::VectorXd& test_targets,
                                                const std::filesystem::path& csv_path,
                                                const std::filesystem::path& json_path) {
    if (train_inputs.rows() != train_targets.size() || test_inputs.rows() != test_targets.size())
        throw std::invalid_argument("emit_correlation_data: inputs and targets disagree on row count");

    const Eigen::VectorXd train_pred = predict(model, train_inputs);
    const Eigen::VectorXd test_pred = predict(model, test_inputs);

    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("emit_correlation_data: cannot open '" + csv_path.string() + "' for writing");
    out << "set,exact,predicted\n";
    for (Eigen::Index i = 0; i < train_targets.size(); ++i)
        out << "train," << format_double(train_targets(i)) << ',' << format_double(train_pred(i)) << '\n';
    for (Eigen::Index i = 0; i < test_targets.size(); ++i)
        out << "test," << format_double(test_targets(i)) << ',' << format_double(test_pred(i)) << '\n';
    if (!out) throw std::runtime_error("emit_correlation_data: write to '" + csv_path.string() + "' failed");

    CorrelationSummary summary;
    summary.train = score(train_pred, train_targets);
    if (test_targets.size() > 0) summary.test = score(test_pred, test_targets);

    const auto metrics_json = [](const Metrics& m) {
        nlohmann::json j{{"rmse", m.rmse}, {"mae", m.mae}, {"n_points", m.n_points}};
        j["r"] = m.correlation_r ? nlohmann::json(*m.correlation_r) : nlohmann::json();
        return j;
    };
    nlohmann::json doc;
    doc["format"] = "kreglab-correlation-summary";
    doc["version"] = 1;
    doc["train"] = metrics_json(summary.train);
    doc["test"] = summary.test ? metrics_json(*summary.test) : nlohmann::json{{"n_points", 0}};
    std::ofstream jout(json_path);
    if (!jout) throw std::runtime_error("emit_correlation_data: cannot open '" + json_path.string() + "' for writing");
    jout << doc.dump(2) << '\n';
    if (!jout) throw std::runtime_error("emit_correlation_data: write to '" + json_path.string() + "' failed");
    return summary;
}

// Fits one model on the run-0 split at the given length (the config's zeta
// ratios make it multi-zeta) and emits its correlation data to output_dir.
inline CorrelationSummary run_correlate(const ExperimentConfig& config, double l) {
    detail::check_config(config);
    if (!(l > 0.0)) throw std::invalid_argument("run_correlate: l must be positive");
    const Dataset data = resolve_dataset(config);
    const detail::PreparedSplit p = detail::prepare_split(data, config, 0);

    const KernelSpec spec = config.zeta_ratios.empty()
                                ? KernelSpec::single(config.family, l)
                                : KernelSpec::with_ratios(config.family, l, config.zeta_ratios);
    const FitModel model =
        fit_rectangular(p.std_train, p.train_targets, p.std_centers, spec, config.rcond, p.normalizer);

    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    const Eigen::MatrixXd raw_train = gather_rows(data.inputs, p.indices.train_idx);
    CorrelationSummary summary =
        emit_correlation_data(model, raw_train, p.train_targets, p.raw_test, p.test_targets,
                              out_dir / "correlation.csv", out_dir / "correlation_summary.json");
    summary.l = l;
    return summary;
}

}  // namespace kreglab

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kreglab/dataset.hpp"
#include "kreglab/kernels.hpp"
#include "kreglab/linalg.hpp"

namespace kreglab {

// A trained predictor: standardization transform, basis centers in
// standardized coordinates, the kernel spec, and one coefficient per
// (zeta, center) pair.
struct FitModel {
    Normalizer normalizer;
    Eigen::MatrixXd centers;       // N x D, standardized coordinates
    KernelSpec spec;
    Eigen::VectorXd coefficients;  // Z * N
    SolveReport solve_report;
};

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> correlation_r;  // absent when undefined
    Eigen::Index n_points = 0;
};

// Least-squares fit of the rectangular system: coefficients solve the
// M x (Z*N) design matrix against the targets by truncated SVD.  Inputs and
// centers are expected in standardized coordinates; the normalizer is stored
// so predictions can take raw coordinates.
inline FitModel fit_rectangular(const Eigen::MatrixXd& train_inputs, const Eigen::VectorXd& train_targets,
                                const Eigen::MatrixXd& center_rows, const KernelSpec& spec, double rcond,
                                Normalizer normalizer) {
    if (train_inputs.rows() != train_targets.size())
        throw std::invalid_argument("fit_rectangular: inputs and targets disagree on row count");
    if (normalizer.means.size() != train_inputs.cols())
        throw std::invalid_argument("fit_rectangular: normalizer dimension mismatch");
    LeastSquaresSolution solution =
        pseudoinverse_solve(design_matrix(train_inputs, center_rows, spec), train_targets, rcond);
    return FitModel{std::move(normalizer), center_rows, spec, std::move(solution.coefficients), solution.report};
}

inline FitModel fit_rectangular(const Eigen::MatrixXd& train_inputs, const Eigen::VectorXd& train_targets,
                                const Eigen::MatrixXd& center_rows, const KernelSpec& spec, double rcond = 1e-10) {
    return fit_rectangular(train_inputs, train_targets, center_rows, spec, rcond,
                           Normalizer::identity(train_inputs.cols()));
}

// Square-system fit: all inputs become centers and the coefficients solve
// the regularized covariance matrix directly.  The singular-value fields of
// the report are not populated on this path.
inline FitModel fit_square_gpr(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, KernelFamily family,
                               double l, double delta, Normalizer normalizer) {
    if (inputs.rows() != targets.size())
        throw std::invalid_argument("fit_square_gpr: inputs and targets disagree on row count");
    if (normalizer.means.size() != inputs.cols())
        throw std::invalid_argument("fit_square_gpr: normalizer dimension mismatch");
    const Eigen::MatrixXd k = square_covariance_matrix(inputs, family, l, delta);
    Eigen::VectorXd coefficients = regularized_solve(k, targets);
    SolveReport report;
    report.effective_rank = inputs.rows();
    report.residual_norm = (k * coefficients - targets).norm();
    return FitModel{std::move(normalizer), inputs, KernelSpec::single(family, l), std::move(coefficients), report};
}

inline FitModel fit_square_gpr(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, KernelFamily family,
                               double l, double delta) {
    return fit_square_gpr(inputs, targets, family, l, delta, Normalizer::identity(inputs.cols()));
}

// Standardizes the raw inputs with the model's normalizer and evaluates the
// kernel expansion against the stored centers.
inline Eigen::VectorXd predict(const FitModel& model, const Eigen::MatrixXd& raw_inputs) {
    if (raw_inputs.cols() != model.centers.cols())
        throw std::invalid_argument("predict: input dimension " + std::to_string(raw_inputs.cols()) +
                                    " does not match the model dimension " + std::to_string(model.centers.cols()));
    if (raw_inputs.rows() == 0) return Eigen::VectorXd(0);
    const Eigen::MatrixXd standardized = model.normalizer.apply(raw_inputs);
    return design_matrix(standardized, model.centers, model.spec) * model.coefficients;
}

// RMSE, MAE, and Pearson correlation.  The correlation is reported absent
// when it is undefined (fewer than two points, or either side constant).
inline Metrics score(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
    if (predictions.size() != truth.size())
        throw std::invalid_argument("score: predictions and truth disagree on length");
    const Eigen::Index n = truth.size();
    if (n < 1) throw std::invalid_argument("score: at least one point is required");

    const Eigen::ArrayXd err = (predictions - truth).array();
    Metrics m;
    m.n_points = n;
    m.rmse = std::sqrt(err.square().sum() / static_cast<double>(n));
    m.mae = err.abs().sum() / static_cast<double>(n);
    if (n >= 2) {
        const Eigen::ArrayXd dp = predictions.array() - predictions.mean();
        const Eigen::ArrayXd dt = truth.array() - truth.mean();
        const double denom = std::sqrt(dp.square().sum() * dt.square().sum());
        if (denom > 0.0) {
            const double r = (dp * dt).sum() / denom;
            m.correlation_r = std::clamp(r, -1.0, 1.0);
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Model serialization.  JSON numbers are written by the shortest decimal
// representation that re-parses to the same double, so a save/load round
// trip is bit-lossless.

inline nlohmann::json model_to_json(const FitModel& model) {
    nlohmann::json j;
    j["format"] = "kreglab-model";
    j["version"] = 1;
    j["normalizer"] = {
        {"means", std::vector<double>(model.normalizer.means.data(),
                                      model.normalizer.means.data() + model.normalizer.means.size())},
        {"stds", std::vector<double>(model.normalizer.stds.data(),
                                     model.normalizer.stds.data() + model.normalizer.stds.size())}};
    j["kernel"] = {{"family", to_string(model.spec.family())}, {"lengths", model.spec.lengths()}};
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(model.centers.rows()));
    for (Eigen::Index r = 0; r < model.centers.rows(); ++r) {
        centers[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(model.centers.cols()));
        for (Eigen::Index c = 0; c < model.centers.cols(); ++c)
            centers[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = model.centers(r, c);
    }
    j["centers"] = centers;
    j["coefficients"] = std::vector<double>(model.coefficients.data(),
                                            model.coefficients.data() + model.coefficients.size());
    j["solve_report"] = {{"effective_rank", model.solve_report.effective_rank},
                         {"max_singular_value", model.solve_report.max_singular_value},
                         {"min_kept_singular_value", model.solve_report.min_kept_singular_value},
                         {"residual_norm", model.solve_report.residual_norm}};
    return j;
}

inline FitModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "kreglab-model")
        throw std::runtime_error("model_from_json: not a kreglab model document");

    Normalizer norm;
    const auto means = j.at("normalizer").at("means").get<std::vector<double>>();
    const auto stds = j.at("normalizer").at("stds").get<std::vector<double>>();
    norm.means = Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    norm.stds = Eigen::Map<const Eigen::VectorXd>(stds.data(), static_cast<Eigen::Index>(stds.size()));

    KernelSpec spec(kernel_family_from_string(j.at("kernel").at("family").get<std::string>()),
                    j.at("kernel").at("lengths").get<std::vector<double>>());

    const auto center_rows = j.at("centers").get<std::vector<std::vector<double>>>();
    if (center_rows.empty()) throw std::runtime_error("model_from_json: empty centers");
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(center_rows.size()),
                            static_cast<Eigen::Index>(center_rows.front().size()));
    for (std::size_t r = 0; r < center_rows.size(); ++r) {
        if (center_rows[r].size() != center_rows.front().size())
            throw std::runtime_error("model_from_json: ragged centers");
        for (std::size_t c = 0; c < center_rows[r].size(); ++c)
            centers(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = center_rows[r][c];
    }

    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(coeffs.size()) != static_cast<Eigen::Index>(spec.n_zeta()) * centers.rows())
        throw std::runtime_error("model_from_json: coefficient count does not match zeta count times centers");

    SolveReport report;
    const auto& jr = j.at("solve_report");
    report.effective_rank = jr.at("effective_rank").get<Eigen::Index>();
    report.max_singular_value = jr.at("max_singular_value").get<double>();
    report.min_kept_singular_value = jr.at("min_kept_singular_value").get<double>();
    report.residual_norm = jr.at("residual_norm").get<double>();

    return FitModel{std::move(norm), std::move(centers), std::move(spec),
                    Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size())),
                    report};
}

inline void save_model(const FitModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot open '" + path.string() + "' for writing");
    out << model_to_json(model).dump(2) << '\n';
    if (!out) throw std::runtime_error("save_model: write to '" + path.string() + "' failed");
}

inline FitModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open '" + path.string() + "'");
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

}  // namespace kreglab

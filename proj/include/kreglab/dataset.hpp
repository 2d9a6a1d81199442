#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kreglab/format.hpp"
#include "kreglab/rng.hpp"

namespace kreglab {

// Points plus scalar targets in their native units.  Immutable by convention
// once built; every fit and diagnostic consumes one of these.
struct Dataset {
    Eigen::MatrixXd inputs;   // n_rows x dim, raw coordinate units
    Eigen::VectorXd targets;  // n_rows, target units (e.g. cm^-1)
    std::vector<std::string> input_names;
    std::string target_name;
    std::string target_unit;  // label only; empty when unknown

    Eigen::Index n_rows() const { return inputs.rows(); }
    Eigen::Index dim() const { return inputs.cols(); }
};

// Column-wise affine transform to zero mean and unit population variance.
struct Normalizer {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;  // strictly positive

    static Normalizer identity(Eigen::Index dim) {
        return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const {
        if (raw.cols() != means.size())
            throw std::invalid_argument("Normalizer: input has " + std::to_string(raw.cols()) +
                                        " columns, expected " + std::to_string(means.size()));
        Eigen::MatrixXd out(raw.rows(), raw.cols());
        for (Eigen::Index j = 0; j < raw.cols(); ++j)
            out.col(j) = (raw.col(j).array() - means(j)) / stds(j);
        return out;
    }

    Eigen::MatrixXd invert(const Eigen::MatrixXd& standardized) const {
        if (standardized.cols() != means.size())
            throw std::invalid_argument("Normalizer: input has " + std::to_string(standardized.cols()) +
                                        " columns, expected " + std::to_string(means.size()));
        Eigen::MatrixXd out(standardized.rows(), standardized.cols());
        for (Eigen::Index j = 0; j < standardized.cols(); ++j)
            out.col(j) = standardized.col(j).array() * stds(j) + means(j);
        return out;
    }
};

// One seeded draw of basis centers, training rows, and test rows.  The
// centers are the first n_centers training indices in draw order, so they
// are always a subset of the training set.
struct SplitIndices {
    std::vector<Eigen::Index> center_idx;
    std::vector<Eigen::Index> train_idx;
    std::vector<Eigen::Index> test_idx;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(trim(line.substr(start)));
            return fields;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

inline double parse_cell(const std::string& cell, const std::string& where) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw std::runtime_error(where + ": cannot parse '" + cell + "' as a number");
    if (!std::isfinite(value))
        throw std::runtime_error(where + ": non-finite value '" + cell + "'");
    return value;
}

}  // namespace detail

// Loads the dataset CSV format: UTF-8, comma separated, one header line with
// D input names followed by the target name, then one record per line.
inline Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path.string() + "'");

    const std::string tag = path.string();
    std::string line;
    long line_no = 0;

    std::vector<std::string> names;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        names = detail::split_fields(line);
        break;
    }
    if (names.empty()) throw std::runtime_error("load_csv: " + tag + ": empty file");
    if (names.size() < 2)
        throw std::runtime_error("load_csv: " + tag + ": header needs at least one input column and a target column");

    const std::size_t n_fields = names.size();
    std::vector<double> values;
    Eigen::Index n_rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> cells = detail::split_fields(line);
        const std::string where = tag + ":" + std::to_string(line_no);
        if (cells.size() != n_fields)
            throw std::runtime_error(where + ": expected " + std::to_string(n_fields) + " fields, got " +
                                     std::to_string(cells.size()));
        for (const std::string& cell : cells) values.push_back(detail::parse_cell(cell, where));
        ++n_rows;
    }
    if (n_rows == 0) throw std::runtime_error("load_csv: " + tag + ": zero data rows");

    Dataset d;
    const Eigen::Index dim = static_cast<Eigen::Index>(n_fields) - 1;
    d.inputs.resize(n_rows, dim);
    d.targets.resize(n_rows);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        for (Eigen::Index j = 0; j < dim; ++j) d.inputs(r, j) = values[static_cast<std::size_t>(r) * n_fields + j];
        d.targets(r) = values[static_cast<std::size_t>(r) * n_fields + dim];
    }
    d.input_names.assign(names.begin(), names.end() - 1);
    d.target_name = names.back();
    return d;
}

inline void save_csv(const Dataset& d, const std::filesystem::path& path) {
    if (static_cast<Eigen::Index>(d.input_names.size()) != d.dim())
        throw std::invalid_argument("save_csv: input_names does not match the input dimension");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open '" + path.string() + "' for writing");
    for (const std::string& name : d.input_names) out << name << ',';
    out << (d.target_name.empty() ? "y" : d.target_name) << '\n';
    for (Eigen::Index r = 0; r < d.n_rows(); ++r) {
        for (Eigen::Index j = 0; j < d.dim(); ++j) out << format_double(d.inputs(r, j)) << ',';
        out << format_double(d.targets(r)) << '\n';
    }
    if (!out) throw std::runtime_error("save_csv: write to '" + path.string() + "' failed");
}

// Column means and population (divide-by-n) standard deviations.
inline Normalizer fit_normalizer(const Eigen::MatrixXd& inputs, const std::vector<std::string>& names = {}) {
    if (inputs.rows() < 1 || inputs.cols() < 1)
        throw std::invalid_argument("fit_normalizer: inputs must be nonempty");
    Normalizer norm;
    norm.means = inputs.colwise().mean();
    norm.stds.resize(inputs.cols());
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
        const double var = (inputs.col(j).array() - norm.means(j)).square().mean();
        norm.stds(j) = std::sqrt(var);
        if (norm.stds(j) == 0.0) {
            const std::string label = static_cast<std::size_t>(j) < names.size()
                                          ? "'" + names[static_cast<std::size_t>(j)] + "' (index " + std::to_string(j) + ")"
                                          : "index " + std::to_string(j);
            throw std::runtime_error("fit_normalizer: input column " + label + " has zero variance");
        }
    }
    return norm;
}

inline std::pair<Dataset, Normalizer> standardize(const Dataset& d) {
    Normalizer norm = fit_normalizer(d.inputs, d.input_names);
    Dataset out = d;
    out.inputs = norm.apply(d.inputs);
    return {std::move(out), std::move(norm)};
}

// Draws round(m_ratio * n_centers) training rows without replacement, then
// test rows from the remainder.  Deterministic given the seed.
inline SplitIndices split(const Dataset& d, Eigen::Index n_centers, double m_ratio,
                          Eigen::Index test_size, std::uint64_t seed) {
    if (n_centers < 1) throw std::invalid_argument("split: n_centers must be >= 1");
    if (!(m_ratio >= 1.0)) throw std::invalid_argument("split: m_ratio must be >= 1");
    if (test_size < 1) throw std::invalid_argument("split: test_size must be >= 1");

    const Eigen::Index n_total = d.n_rows();
    const Eigen::Index m_train = static_cast<Eigen::Index>(std::llround(m_ratio * static_cast<double>(n_centers)));
    const Eigen::Index needed = m_train + test_size;
    if (needed > n_total)
        throw std::runtime_error("split: needs " + std::to_string(needed) + " rows (" + std::to_string(m_train) +
                                 " training + " + std::to_string(test_size) + " test) but the dataset has " +
                                 std::to_string(n_total));

    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n_total));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    SplitMix64 rng(seed);
    for (Eigen::Index i = 0; i < needed; ++i) {
        const Eigen::Index j = i + static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n_total - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }

    SplitIndices idx;
    idx.center_idx.assign(pool.begin(), pool.begin() + n_centers);
    idx.train_idx.assign(pool.begin(), pool.begin() + m_train);
    idx.test_idx.assign(pool.begin() + m_train, pool.begin() + needed);
    idx.seed = seed;
    return idx;
}

inline Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& source, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), source.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = source.row(idx[i]);
    return out;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& source, const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = source(idx[i]);
    return out;
}

// Morse-like sum with bilinear couplings; exchange symmetric in the
// coordinates, minimum 0 at the origin.
inline double synth_potential_value(const Eigen::VectorXd& x) {
    double morse = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double t = 1.0 - std::exp(-0.5 * x(i));
        morse += t * t;
    }
    double coupling = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (Eigen::Index j = i + 1; j < x.size(); ++j) coupling += x(i) * x(j);
    return morse + 0.1 * coupling;
}

// Synthetic surrogate surface: inputs uniform on [-h, h]^dim, drawn point by
// point and coordinate by coordinate from SplitMix64(seed).
inline Dataset synth_potential(int dim, Eigen::Index n_points, std::uint64_t seed, double box_halfwidth = 1.5) {
    if (dim < 1) throw std::invalid_argument("synth_potential: dim must be >= 1");
    if (n_points < 1) throw std::invalid_argument("synth_potential: n_points must be >= 1");
    if (!(box_halfwidth > 0.0)) throw std::invalid_argument("synth_potential: box_halfwidth must be positive");

    SplitMix64 rng(seed);
    Dataset d;
    d.inputs.resize(n_points, dim);
    d.targets.resize(n_points);
    for (Eigen::Index p = 0; p < n_points; ++p) {
        for (int j = 0; j < dim; ++j)
            d.inputs(p, j) = box_halfwidth * (2.0 * rng.next_double() - 1.0);
        d.targets(p) = synth_potential_value(d.inputs.row(p).transpose());
    }
    d.input_names.reserve(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) d.input_names.push_back("x" + std::to_string(j + 1));
    d.target_name = "V";
    d.target_unit = "dimensionless";
    return d;
}

}  // namespace kreglab

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kreglab/format.hpp"
#include "kreglab/kernels.hpp"
#include "kreglab/rng.hpp"

namespace kreglab {

// Distribution of the entries of one M x N kernel matrix: a fixed-bin
// histogram on [0, 1] plus a small set of quantiles.  This is the measure of
// how local the kernel still is at a given dimension and length.
struct LocalityReport {
    static constexpr std::array<double, 7> quantile_probs{0.0, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0};

    struct Bin {
        double lower = 0.0;
        double upper = 0.0;
        std::int64_t count = 0;
    };

    int dimension = 0;
    double length = 0.0;
    int zeta_index = 0;
    Eigen::Index n_entries = 0;
    std::vector<Bin> histogram;
    std::array<double, 7> quantiles{};
};

// Quantile with linear interpolation between order statistics: at probability
// p the value is data[h] interpolated at h = p * (n - 1), which reduces to
// the midpoint of the two middle entries for the median of an even count.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty data");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_sorted: probability must lie in [0, 1]");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Histogram and quantiles over all M*N entries of the single-length kernel
// matrix rows x centers.  Multi-zeta reports come from calling this once per
// length with the matching zeta_index.
inline LocalityReport kernel_entry_distribution(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& centers,
                                                KernelFamily family, double l, int bins = 50,
                                                int zeta_index = 0) {
    if (bins < 1) throw std::invalid_argument("kernel_entry_distribution: bins must be >= 1");
    if (rows.rows() == 0) throw std::invalid_argument("kernel_entry_distribution: rows must be nonempty");
    const Eigen::MatrixXd k = apply_kernel(pairwise_squared_distances(rows, centers), family, l);

    std::vector<double> entries(k.data(), k.data() + k.size());
    std::sort(entries.begin(), entries.end());

    LocalityReport report;
    report.dimension = static_cast<int>(rows.cols());
    report.length = l;
    report.zeta_index = zeta_index;
    report.n_entries = static_cast<Eigen::Index>(entries.size());
    report.histogram.resize(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        report.histogram[static_cast<std::size_t>(b)].lower = static_cast<double>(b) / bins;
        report.histogram[static_cast<std::size_t>(b)].upper = static_cast<double>(b + 1) / bins;
    }
    for (double e : entries) {
        int b = static_cast<int>(e * bins);
        if (b >= bins) b = bins - 1;
        if (b < 0) b = 0;
        ++report.histogram[static_cast<std::size_t>(b)].count;
    }
    for (std::size_t q = 0; q < report.quantile_probs.size(); ++q)
        report.quantiles[q] = quantile_sorted(entries, report.quantile_probs[q]);
    return report;
}

namespace detail {

// Regularized lower incomplete gamma P(a, x): series expansion for
// x < a + 1, Lentz continued fraction for the upper tail otherwise.
// Absolute error well below 1e-10 over the ranges used here.
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_p: a must be positive");
    if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;

    const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
    constexpr int max_iter = 500;
    constexpr double eps = 1e-16;

    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int i = 0; i < max_iter; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * eps) break;
        }
        return std::min(1.0, sum * std::exp(log_prefactor));
    }

    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= max_iter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    const double q = std::exp(log_prefactor) * h;
    return std::max(0.0, 1.0 - q);
}

}  // namespace detail

// Probability mass of a standard dim-variate Gaussian inside the ball of
// radius r, i.e. the chi-square CDF with dim degrees of freedom at r^2.
inline double gaussian_mass_within(int dim, double r) {
    if (dim < 1) throw std::invalid_argument("gaussian_mass_within: dim must be >= 1");
    if (r < 0.0) throw std::invalid_argument("gaussian_mass_within: r must be nonnegative");
    return detail::regularized_gamma_p(0.5 * static_cast<double>(dim), 0.5 * r * r);
}

struct ExpectedKernel {
    double monte_carlo = 0.0;
    double closed_form = 0.0;  // (1 + 2/l^2)^(-dim/2), exact for this kernel
    double std_error = 0.0;
    Eigen::Index n_samples = 0;
};

// Mean squared-exponential kernel value between two independent standard
// normal points in `dim` dimensions: a Monte Carlo estimate next to the
// exact closed form.  Shows how fast typical kernel values rise toward 1 as
// the dimension grows at fixed length.
inline ExpectedKernel expected_kernel_under_standardization(int dim, double l, Eigen::Index n_samples,
                                                            std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("expected_kernel_under_standardization: dim must be >= 1");
    if (!(l > 0.0)) throw std::invalid_argument("expected_kernel_under_standardization: l must be positive");
    if (n_samples < 1) throw std::invalid_argument("expected_kernel_under_standardization: n_samples must be >= 1");

    SplitMix64 rng(seed);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (Eigen::Index s = 0; s < n_samples; ++s) {
        double r2 = 0.0;
        for (int j = 0; j < dim; ++j) {
            const double diff = rng.next_normal() - rng.next_normal();
            r2 += diff * diff;
        }
        const double k = std::exp(-r2 / (2.0 * l * l));
        sum += k;
        sum_sq += k * k;
    }

    ExpectedKernel out;
    out.n_samples = n_samples;
    out.monte_carlo = sum / static_cast<double>(n_samples);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n_samples) - out.monte_carlo * out.monte_carlo);
    out.std_error = std::sqrt(var / static_cast<double>(n_samples));
    out.closed_form = std::pow(1.0 + 2.0 / (l * l), -0.5 * static_cast<double>(dim));
    return out;
}

// ---------------------------------------------------------------------------
// Report export: CSV with one row per bin, JSON with the full record.

inline void write_locality_csv(const LocalityReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_locality_csv: cannot open '" + path.string() + "' for writing");
    out << "bin_lower,bin_upper,count\n";
    for (const LocalityReport::Bin& bin : report.histogram)
        out << format_double(bin.lower) << ',' << format_double(bin.upper) << ',' << bin.count << '\n';
    if (!out) throw std::runtime_error("write_locality_csv: write to '" + path.string() + "' failed");
}

inline nlohmann::json locality_to_json(const LocalityReport& report) {
    nlohmann::json bins = nlohmann::json::array();
    for (const LocalityReport::Bin& bin : report.histogram)
        bins.push_back({{"lower", bin.lower}, {"upper", bin.upper}, {"count", bin.count}});
    return nlohmann::json{{"dimension", report.dimension},
                          {"length", report.length},
                          {"zeta_index", report.zeta_index},
                          {"n_entries", report.n_entries},
                          {"histogram", bins},
                          {"quantile_probs", report.quantile_probs},
                          {"quantiles", report.quantiles}};
}

}  // namespace kreglab

#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>

#include "kreglab/dataset.hpp"

using namespace kreglab;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / ("kreglab_test_" + name);
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("load_csv happy path") {
    const auto path = write_temp("ok.csv", "x1,x2,y\n0,0,1.5\n1,2,-3e-1\n");
    const Dataset d = load_csv(path);
    CHECK(d.dim() == 2);
    CHECK(d.n_rows() == 2);
    CHECK(d.targets(0) == Approx(1.5));
    CHECK(d.targets(1) == Approx(-0.3));
    CHECK(d.inputs(1, 1) == Approx(2.0));
    CHECK(d.input_names == std::vector<std::string>{"x1", "x2"});
    CHECK(d.target_name == "y");
    std::filesystem::remove(path);
}

TEST_CASE("load_csv error cases name the line") {
    SECTION("missing file") {
        CHECK_THROWS_WITH(load_csv("/nonexistent/kreglab_nope.csv"), Catch::Contains("cannot open"));
    }
    SECTION("non-numeric cell") {
        const auto path = write_temp("bad_cell.csv", "x1,x2,y\n0,abc,1\n");
        CHECK_THROWS_WITH(load_csv(path), Catch::Contains(":2") && Catch::Contains("abc"));
        std::filesystem::remove(path);
    }
    SECTION("ragged row") {
        const auto path = write_temp("ragged.csv", "x1,x2,y\n1,2,3\n1,2\n");
        CHECK_THROWS_WITH(load_csv(path), Catch::Contains(":3") && Catch::Contains("expected 3 fields"));
        std::filesystem::remove(path);
    }
    SECTION("header only") {
        const auto path = write_temp("header_only.csv", "x1,x2,y\n");
        CHECK_THROWS_WITH(load_csv(path), Catch::Contains("zero data rows"));
        std::filesystem::remove(path);
    }
    SECTION("non-finite value") {
        const auto path = write_temp("inf.csv", "x1,y\ninf,1\n");
        CHECK_THROWS_WITH(load_csv(path), Catch::Contains("non-finite"));
        std::filesystem::remove(path);
    }
}

TEST_CASE("save_csv then load_csv reproduces values exactly") {
    Dataset d = synth_potential(3, 25, 99);
    const auto path = write_temp("roundtrip.csv", "");
    save_csv(d, path);
    const Dataset back = load_csv(path);
    REQUIRE(back.n_rows() == d.n_rows());
    REQUIRE(back.dim() == d.dim());
    CHECK((back.inputs - d.inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.targets - d.targets).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("standardize hand cases") {
    SECTION("symmetric column is already standard") {
        Dataset d;
        d.inputs.resize(2, 1);
        d.inputs << -1.0, 1.0;
        d.targets.resize(2);
        d.targets << 0.5, 0.7;
        d.input_names = {"a"};
        const auto [out, norm] = standardize(d);
        CHECK(out.inputs(0, 0) == Approx(-1.0).epsilon(1e-12));
        CHECK(out.inputs(1, 0) == Approx(1.0).epsilon(1e-12));
        CHECK(norm.means(0) == Approx(0.0).margin(1e-15));
        CHECK(norm.stds(0) == Approx(1.0).epsilon(1e-12));
        CHECK(out.targets == d.targets);  // targets never touched
    }
    SECTION("population convention: column (0, 2) maps to (-1, 1)") {
        Dataset d;
        d.inputs.resize(2, 1);
        d.inputs << 0.0, 2.0;
        d.targets = Eigen::VectorXd::Zero(2);
        d.input_names = {"a"};
        const auto [out, norm] = standardize(d);
        CHECK(norm.means(0) == Approx(1.0));
        CHECK(norm.stds(0) == Approx(1.0));
        CHECK(out.inputs(0, 0) == Approx(-1.0));
        CHECK(out.inputs(1, 0) == Approx(1.0));
    }
    SECTION("constant column errors naming the column") {
        Dataset d;
        d.inputs.resize(3, 2);
        d.inputs << 1.0, 3.0, 2.0, 3.0, 3.0, 3.0;
        d.targets = Eigen::VectorXd::Zero(3);
        d.input_names = {"ok", "flat"};
        CHECK_THROWS_WITH(standardize(d), Catch::Contains("flat") && Catch::Contains("zero variance"));
    }
}

TEST_CASE("standardize invariants on random data") {
    const Dataset d = synth_potential(4, 200, 7, 2.5);
    const auto [out, norm] = standardize(d);
    for (Eigen::Index j = 0; j < out.dim(); ++j) {
        CHECK(std::abs(out.inputs.col(j).mean()) <= 1e-10);
        const double var = (out.inputs.col(j).array() - out.inputs.col(j).mean()).square().mean();
        CHECK(var == Approx(1.0).margin(1e-10));
    }
    // apply then invert is the identity
    const Eigen::MatrixXd back = norm.invert(norm.apply(d.inputs));
    CHECK((back - d.inputs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("split sizes follow round(m_ratio * N)") {
    const Dataset d = synth_potential(2, 3000, 5);
    const SplitIndices a = split(d, 250, 1.4, 100, 1);
    CHECK(a.train_idx.size() == 350);
    CHECK(a.center_idx.size() == 250);
    CHECK(a.test_idx.size() == 100);

    const Dataset big = synth_potential(2, 3000, 6);
    const SplitIndices b = split(big, 2000, 1.4, 100, 1);
    CHECK(b.train_idx.size() == 2800);
}

TEST_CASE("split determinism, subset structure, and disjointness") {
    const Dataset d = synth_potential(3, 500, 10);
    const SplitIndices a = split(d, 40, 1.4, 60, 1234);
    const SplitIndices b = split(d, 40, 1.4, 60, 1234);
    CHECK(a.center_idx == b.center_idx);
    CHECK(a.train_idx == b.train_idx);
    CHECK(a.test_idx == b.test_idx);

    // centers are the first N training indices in draw order
    CHECK(std::equal(a.center_idx.begin(), a.center_idx.end(), a.train_idx.begin()));

    std::vector<Eigen::Index> sorted_train = a.train_idx;
    std::sort(sorted_train.begin(), sorted_train.end());
    CHECK(std::adjacent_find(sorted_train.begin(), sorted_train.end()) == sorted_train.end());
    for (Eigen::Index t : a.test_idx) {
        CHECK(!std::binary_search(sorted_train.begin(), sorted_train.end(), t));
        CHECK(t >= 0);
        CHECK(t < d.n_rows());
    }

    const SplitIndices c = split(d, 40, 1.4, 60, 1235);
    CHECK(a.train_idx != c.train_idx);  // different seed, different draw
}

TEST_CASE("split reports required vs available rows") {
    const Dataset d = synth_potential(2, 100, 3);
    CHECK_THROWS_WITH(split(d, 80, 1.4, 30, 1), Catch::Contains("142") && Catch::Contains("100"));
}

TEST_CASE("synth_potential closed-form targets") {
    SECTION("origin is the minimum") {
        CHECK(synth_potential_value(Eigen::VectorXd::Zero(5)) == 0.0);
    }
    SECTION("1-D hand value") {
        Eigen::VectorXd x(1);
        x << 1.0;
        CHECK(synth_potential_value(x) == Approx(0.1548181).margin(1e-7));
    }
    SECTION("2-D hand value with coupling") {
        Eigen::VectorXd x(2);
        x << 1.0, 1.0;
        CHECK(synth_potential_value(x) == Approx(0.4096363).margin(1e-7));
    }
}

TEST_CASE("synth_potential dataset properties") {
    const Dataset d = synth_potential(6, 300, 42, 1.5);
    CHECK(d.dim() == 6);
    CHECK(d.n_rows() == 300);
    CHECK(d.inputs.cwiseAbs().maxCoeff() <= 1.5);
    CHECK(d.target_unit == "dimensionless");

    const Dataset again = synth_potential(6, 300, 42, 1.5);
    CHECK((d.inputs - again.inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((d.targets - again.targets).cwiseAbs().maxCoeff() == 0.0);

    // targets recompute from the formula
    for (Eigen::Index i = 0; i < 10; ++i)
        CHECK(d.targets(i) == synth_potential_value(d.inputs.row(i).transpose()));
}

TEST_CASE("synth_potential target is exchange symmetric") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = 2 + static_cast<int>(rng.next_below(6));
        Eigen::VectorXd x(dim);
        for (int j = 0; j < dim; ++j) x(j) = 3.0 * (2.0 * rng.next_double() - 1.0);
        Eigen::VectorXd perm = x.reverse();
        std::swap(perm(0), perm(dim / 2));
        CHECK(synth_potential_value(perm) == Approx(synth_potential_value(x)).margin(1e-12));
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dmimo/errors.hpp"
#include "dmimo/matrix.hpp"
#include "dmimo/rng.hpp"
#include "dmimo/serde.hpp"

#include "test_util.hpp"

#include <cmath>

using dmimo::Matrix;
namespace serde = dmimo::serde;

TEST_CASE("matrix product and transpose") {
    Matrix a = {{1.0, 2.0}, {3.0, 4.0}};
    Matrix b = {{0.0, 1.0}, {1.0, 0.0}};
    Matrix c = a * b;
    CHECK(c(0, 0) == doctest::Approx(2.0));
    CHECK(c(0, 1) == doctest::Approx(1.0));
    CHECK(c(1, 0) == doctest::Approx(4.0));
    CHECK(c(1, 1) == doctest::Approx(3.0));

    Matrix at = a.transposed();
    CHECK(at(0, 1) == doctest::Approx(3.0));

    Matrix rev = a.reversed_both();
    CHECK(rev(0, 0) == doctest::Approx(4.0));
    CHECK(rev(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("matvec agrees with explicit products") {
    dmimo::rng::Substream g(7, 0, 0);
    Matrix a = testutil::random_gaussian(3, 5, g);
    std::vector<double> x = {1.0, -2.0, 0.5, 3.0, -1.0};
    const std::vector<double> y = matvec(a, x);
    for (std::size_t i = 0; i < 3; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 5; ++j) acc += a(i, j) * x[j];
        CHECK(y[i] == doctest::Approx(acc));
    }
    std::vector<double> z = {0.3, -0.7, 2.0};
    const std::vector<double> w = matvec_transposed(a, z);
    for (std::size_t j = 0; j < 5; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 3; ++i) acc += a(i, j) * z[i];
        CHECK(w[j] == doctest::Approx(acc));
    }
}

TEST_CASE("shape mismatches throw") {
    Matrix a(2, 3), b(2, 3);
    CHECK_THROWS_AS((void)(a * b), dmimo::Error);
    CHECK_THROWS_AS(a.block(1, 1, 3, 3), dmimo::Error);
}

TEST_CASE("matrix JSON round trip is bit-exact") {
    dmimo::rng::Substream g(11, 0, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t rows = 1 + g.uniform_int(6);
        const std::size_t cols = 1 + g.uniform_int(9);
        Matrix m(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                // Awkward magnitudes on purpose.
                m(i, j) = g.normal() * std::pow(10.0, static_cast<double>(g.uniform_int(19)) - 9.0);
            }
        const std::string text = serde::dump(serde::matrix_to_json(m));
        Matrix back = serde::matrix_from_json(serde::parse_json(text));
        REQUIRE(back.rows() == m.rows());
        REQUIRE(back.cols() == m.cols());
        CHECK(back == m); // bitwise
    }
}

TEST_CASE("matrix JSON validation") {
    CHECK_THROWS_AS(serde::parse_json("{not json"), dmimo::Error);
    CHECK_THROWS_AS(serde::matrix_from_json(serde::parse_json(R"({"rows":2,"cols":2})")),
                    dmimo::Error);
    CHECK_THROWS_AS(
        serde::matrix_from_json(serde::parse_json(R"({"rows":2,"cols":2,"data":[1,2,3]})")),
        dmimo::Error);
    // Round-trips but must reject non-finite entries.
    CHECK_THROWS_AS(
        serde::matrix_from_json(serde::parse_json(R"({"rows":1,"cols":1,"data":["x"]})")),
        dmimo::Error);
}

TEST_CASE("csv cells re-parse losslessly at 12 significant digits") {
    dmimo::rng::Substream g(13, 0, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const double v = g.normal() * std::pow(10.0, static_cast<double>(g.uniform_int(13)) - 6.0);
        const std::string cell = serde::format_g12(v);
        const double back = std::stod(cell);
        CHECK(serde::format_g12(back) == cell);
        CHECK(back == doctest::Approx(v).epsilon(1e-11));
    }
}

TEST_CASE("scenario JSON accepts inf and rejects junk") {
    const char* text = R"({
      "h1": {"rows":2, "cols":2, "data":[0.25,0,0,4]},
      "h2": {"rows":2, "cols":2, "data":[4,0,0,0.25]},
      "power": 8.0,
      "power_kind": "per_antenna",
      "c_common": "inf"
    })";
    auto s = serde::scenario_from_json(serde::parse_json(text));
    CHECK(std::isinf(s.c_common));
    CHECK(s.total_power(0) == doctest::Approx(16.0));

    auto bad = serde::parse_json(text);
    bad["c_common"] = "huge";
    CHECK_THROWS_AS(serde::scenario_from_json(bad), dmimo::Error);
}

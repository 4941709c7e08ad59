#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dmimo/decomp.hpp"
#include "dmimo/errors.hpp"
#include "dmimo/rng.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using dmimo::Matrix;
namespace decomp = dmimo::decomp;
namespace linalg = dmimo::linalg;
using testutil::random_proper;

namespace {

Matrix reconstruct_gtd(const decomp::GtdResult& g) { return g.u * g.t * g.v.transposed(); }

// Exhaustive numeric construction oracle for a prescribed diagonal: a value
// can be produced at each step from any pair that straddles it, replacing
// the pair with its product over the target. Accepts iff some pairing order
// realizes every prescribed value within tol.
bool gtd_construction_oracle(std::vector<double> values, std::vector<double> prescribed,
                             double tol = 1e-6) {
    std::sort(prescribed.begin(), prescribed.end(), std::greater<>());
    struct Rec {
        static bool step(std::vector<double> vals, const std::vector<double>& tgt,
                         std::size_t idx, double tol) {
            if (idx == tgt.size()) return true;
            const double r = tgt[idx];
            if (vals.size() == 1)
                return std::abs(vals[0] - r) <= tol * std::max(1.0, std::abs(r));
            for (std::size_t i = 0; i < vals.size(); ++i) {
                for (std::size_t j = i + 1; j < vals.size(); ++j) {
                    const double lo = std::min(vals[i], vals[j]);
                    const double hi = std::max(vals[i], vals[j]);
                    if (r < lo * (1.0 - tol) || r > hi * (1.0 + tol)) continue;
                    std::vector<double> rest;
                    for (std::size_t k = 0; k < vals.size(); ++k)
                        if (k != i && k != j) rest.push_back(vals[k]);
                    rest.push_back(vals[i] * vals[j] / r);
                    if (step(std::move(rest), tgt, idx + 1, tol)) return true;
                }
            }
            return false;
        }
    };
    return Rec::step(std::move(values), prescribed, 0, tol);
}

} // namespace

TEST_CASE("gmd: asymmetric diagonal equalizes to ones") {
    decomp::GtdResult g = decomp::gmd(Matrix::diagonal(std::vector<double>{4.0, 0.25}));
    REQUIRE(g.diag.size() == 2);
    CHECK(g.diag[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.diag[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(relative_residual(reconstruct_gtd(g), Matrix::diagonal(std::vector<double>{4.0, 0.25})) <=
          1e-10);
}

TEST_CASE("gmd: identity is a fixed point") {
    decomp::GtdResult g = decomp::gmd(Matrix::identity(3));
    CHECK(relative_residual(g.t, Matrix::identity(3)) <= 1e-12);
    CHECK(relative_residual(reconstruct_gtd(g), Matrix::identity(3)) <= 1e-12);
}

TEST_CASE("gmd: random proper 3x3 against the determinant oracle") {
    dmimo::rng::Substream rng(201, 0, 0);
    for (int rep = 0; rep < 25; ++rep) {
        linalg::ProperChannel ch = random_proper(3, 3, 1.0, rng);
        decomp::GtdResult g = decomp::gmd(ch.h);
        // Independent route: the common diagonal value is the geometric mean
        // of the singular values, i.e. det(h h^T)^(1/(2 n)).
        const double expected = std::pow(std::abs(testutil::cofactor_det_gram(ch.h)), 1.0 / 6.0);
        for (double d : g.diag) CHECK(d == doctest::Approx(expected).epsilon(1e-8));
        CHECK(relative_residual(reconstruct_gtd(g), ch.h) <= 1e-8);
    }
}

TEST_CASE("gmd: batch of random proper matrices up to 6x10") {
    dmimo::rng::Substream rng(202, 0, 0);
    double worst_diag = 0.0, worst_recon = 0.0, worst_above = 0.0, worst_orth = 0.0;
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t m = 2 + rng.uniform_int(5);
        const std::size_t n = m + rng.uniform_int(10 - m + 1);
        linalg::ProperChannel ch = random_proper(m, n, 1.0, rng);
        decomp::GtdResult g = decomp::gmd(ch.h);
        for (double d : g.diag) worst_diag = std::max(worst_diag, std::abs(d - 1.0));
        worst_recon = std::max(worst_recon, relative_residual(reconstruct_gtd(g), ch.h));
        worst_orth = std::max(worst_orth, std::max(orthonormality_residual(g.u),
                                                   orthonormality_residual(g.v)));
        for (std::size_t i = 0; i < g.t.rows(); ++i)
            for (std::size_t j = i + 1; j < g.t.cols(); ++j)
                worst_above = std::max(worst_above, std::abs(g.t(i, j)));
    }
    CHECK(worst_diag <= 1e-8);
    CHECK(worst_recon <= 1e-8);
    CHECK(worst_above <= 1e-10);
    CHECK(worst_orth <= 1e-9);
}

TEST_CASE("gmd rejects non-proper input") {
    CHECK_THROWS_AS(decomp::gmd(Matrix::diagonal(std::vector<double>{2.0, 2.0})), dmimo::Error);
}

TEST_CASE("gtd_feasible: worked examples") {
    std::vector<double> sigma = {4.0, 1.0, 0.25};
    CHECK(decomp::gtd_feasible(sigma, std::vector<double>{2.0, 1.0, 0.5}));
    CHECK_FALSE(decomp::gtd_feasible(sigma, std::vector<double>{5.0, 1.0, 0.2}));
    CHECK(decomp::gtd_feasible(sigma, sigma)); // the SVD itself
    CHECK_THROWS_AS(decomp::gtd_feasible(sigma, std::vector<double>{1.0, 1.0}), dmimo::Error);
}

TEST_CASE("gtd_feasible agrees with the exhaustive construction oracle") {
    const std::vector<double> sigma = {2.0, 1.0, 0.5};
    dmimo::rng::Substream rng(203, 0, 0);
    int agreements = 0;
    const int samples = 200;
    auto boundary_distance = [&](const std::vector<double>& prescribed) {
        double closest = 1e9;
        double ps = 0.0, pp = 0.0;
        for (std::size_t k = 0; k < sigma.size(); ++k) {
            ps += std::log(sigma[k]);
            pp += std::log(prescribed[k]);
            closest = std::min(closest, std::abs(ps - pp));
        }
        return closest;
    };
    for (int rep = 0; rep < samples; ++rep) {
        // Unit-product prescriptions spanning feasible and infeasible territory.
        const double a = rng.uniform(0.0, std::log(2.2));
        const double b = rng.uniform(-a, a);
        std::vector<double> prescribed = {std::exp(a), std::exp(b), std::exp(-a - b)};
        std::sort(prescribed.begin(), prescribed.end(), std::greater<>());

        const bool lib = decomp::gtd_feasible(sigma, prescribed);
        const bool oracle = gtd_construction_oracle(sigma, prescribed);
        if (lib == oracle)
            ++agreements;
        else
            CHECK(boundary_distance(prescribed) <= 1e-6);
    }
    CHECK(agreements >= samples * 99 / 100);

    // Prescriptions planted right on the majorization boundary may land on
    // either side of the two tolerances; any disagreement must stay within
    // 1e-6 of the boundary.
    for (int rep = 0; rep < 40; ++rep) {
        const double a = std::log(2.0) + rng.uniform(-1e-7, 1e-7);
        const double b = rng.uniform(-0.2, 0.2);
        std::vector<double> prescribed = {std::exp(a), std::exp(b), std::exp(-a - b)};
        std::sort(prescribed.begin(), prescribed.end(), std::greater<>());
        const bool lib = decomp::gtd_feasible(sigma, prescribed);
        const bool oracle = gtd_construction_oracle(sigma, prescribed);
        if (lib != oracle) CHECK(boundary_distance(prescribed) <= 1e-6);
    }
}

TEST_CASE("jet_shared_right: identity pair") {
    decomp::JointTriangularization jt =
        decomp::jet_shared_right(Matrix::identity(2), Matrix::identity(2));
    CHECK(relative_residual(jt.shared, Matrix::identity(2)) <= 1e-12);
    for (const auto& f : jt.per_matrix) CHECK(relative_residual(f.t, Matrix::identity(2)) <= 1e-12);
    auto rep = decomp::verify_joint_triangularization(jt, {Matrix::identity(2), Matrix::identity(2)});
    CHECK(rep.pass);
}

TEST_CASE("jet_shared_right: mirrored parallel channels") {
    Matrix a1 = Matrix::diagonal(std::vector<double>{0.25, 4.0});
    Matrix a2 = Matrix::diagonal(std::vector<double>{4.0, 0.25});
    decomp::JointTriangularization jt = decomp::jet_shared_right(a1, a2);
    REQUIRE(jt.diag.size() == 2);
    CHECK(std::abs(jt.diag[0] * jt.diag[1]) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(jt.per_matrix[0].t(0, 0) - jt.per_matrix[1].t(0, 0)) <= 1e-8);
    CHECK(std::abs(jt.per_matrix[0].t(1, 1) - jt.per_matrix[1].t(1, 1)) <= 1e-8);
    auto rep = decomp::verify_joint_triangularization(jt, {a1, a2});
    CHECK(rep.pass);
}

TEST_CASE("jet_shared_right: wide pairs go through the transposed route") {
    dmimo::rng::Substream rng(204, 0, 0);
    for (int rep = 0; rep < 500; ++rep) {
        linalg::ProperChannel c1 = random_proper(2, 3, 1.0, rng);
        linalg::ProperChannel c2 = random_proper(2, 3, 1.0, rng);
        decomp::JointTriangularization jt = decomp::jet_shared_right(c1.h, c2.h);
        auto report = decomp::verify_joint_triangularization(jt, {c1.h, c2.h});
        CHECK(report.pass);
        CHECK(report.max_diag_disparity <= 1e-8);
        for (double r : report.reconstruction) CHECK(r <= 1e-8);
    }
}

TEST_CASE("jet_shared_right: tall pairs with unequal heights") {
    dmimo::rng::Substream rng(205, 0, 0);
    linalg::ProperChannel c1 = random_proper(2, 4, 1.0, rng); // transposed below
    linalg::ProperChannel c2 = random_proper(2, 3, 1.0, rng);
    Matrix t1 = c1.h.transposed(); // 4 x 2, det(t^T t) = 1
    Matrix t2 = c2.h.transposed(); // 3 x 2
    decomp::JointTriangularization jt = decomp::jet_shared_right(t1, t2);
    CHECK(jt.shared.rows() == 2);
    CHECK(jt.per_matrix[0].t.rows() == 4);
    CHECK(jt.per_matrix[1].t.rows() == 3);
    auto report = decomp::verify_joint_triangularization(jt, {t1, t2});
    CHECK(report.pass);
}

TEST_CASE("jet_shared_left: identity pair") {
    decomp::JointTriangularization jt =
        decomp::jet_shared_left(Matrix::identity(2), Matrix::identity(2));
    CHECK(relative_residual(jt.shared, Matrix::identity(2)) <= 1e-12);
    auto rep = decomp::verify_joint_triangularization(jt, {Matrix::identity(2), Matrix::identity(2)});
    CHECK(rep.pass);
}

TEST_CASE("jet_shared_left: mirrored parallel channels") {
    Matrix h1 = Matrix::diagonal(std::vector<double>{0.25, 4.0});
    Matrix h2 = Matrix::diagonal(std::vector<double>{4.0, 0.25});
    decomp::JointTriangularization jt = decomp::jet_shared_left(h1, h2);
    CHECK(std::abs(jt.diag[0] * jt.diag[1]) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(jt.diag[0] > 0.0);
    CHECK(jt.diag[1] > 0.0);
    auto rep = decomp::verify_joint_triangularization(jt, {h1, h2});
    CHECK(rep.pass);
    CHECK(rep.max_diag_disparity <= 1e-8);
}

TEST_CASE("jet_shared_left: mixed transmit dimensions") {
    dmimo::rng::Substream rng(206, 0, 0);
    for (int rep = 0; rep < 25; ++rep) {
        linalg::ProperChannel c1 = random_proper(2, 2, 1.0, rng);
        linalg::ProperChannel c2 = random_proper(2, 4, 1.0, rng);
        decomp::JointTriangularization jt = decomp::jet_shared_left(c1.h, c2.h);
        CHECK(jt.per_matrix[1].t.rows() == 2);
        CHECK(jt.per_matrix[1].t.cols() == 4);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = i + 1; j < 4; ++j)
                CHECK(std::abs(jt.per_matrix[1].t(i, j)) <= 1e-10);
        CHECK(std::abs(jt.per_matrix[0].t(0, 0) - jt.per_matrix[1].t(0, 0)) <= 1e-8);
        CHECK(std::abs(jt.per_matrix[0].t(1, 1) - jt.per_matrix[1].t(1, 1)) <= 1e-8);
        auto report = decomp::verify_joint_triangularization(jt, {c1.h, c2.h});
        CHECK(report.pass);
    }
}

TEST_CASE("jet equal diagonals across a random batch") {
    dmimo::rng::Substream rng(207, 0, 0);
    double worst = 0.0;
    for (int rep = 0; rep < 150; ++rep) {
        const std::size_t n_r = 2 + rng.uniform_int(3);
        const std::size_t n1 = n_r + rng.uniform_int(3);
        const std::size_t n2 = n_r + rng.uniform_int(3);
        linalg::ProperChannel c1 = random_proper(n_r, n1, 1.0, rng);
        linalg::ProperChannel c2 = random_proper(n_r, n2, 1.0, rng);
        decomp::JointTriangularization jt = decomp::jet_shared_left(c1.h, c2.h);
        auto report = decomp::verify_joint_triangularization(jt, {c1.h, c2.h});
        CHECK(report.pass);
        worst = std::max(worst, report.max_diag_disparity);
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("orientation duality: shared-left equals shared-right on the reversed transposes") {
    dmimo::rng::Substream rng(208, 0, 0);
    for (int rep = 0; rep < 25; ++rep) {
        linalg::ProperChannel c1 = random_proper(2, 3, 1.0, rng);
        linalg::ProperChannel c2 = random_proper(2, 3, 1.0, rng);

        decomp::JointTriangularization left = decomp::jet_shared_left(c1.h, c2.h);
        auto left_rep = decomp::verify_joint_triangularization(left, {c1.h, c2.h});
        CHECK(left_rep.pass);

        const Matrix d1 = c1.h.transposed().reversed_both(); // tall, unit gram
        const Matrix d2 = c2.h.transposed().reversed_both();
        decomp::JointTriangularization right = decomp::jet_shared_right(d1, d2);
        auto right_rep = decomp::verify_joint_triangularization(right, {d1, d2});
        CHECK(right_rep.pass);
        CHECK(right_rep.max_diag_disparity <= 1e-8);

        // The equi-diagonal profile is not unique across routes, but both
        // are unit-product and positive.
        REQUIRE(left.diag.size() == right.diag.size());
        double lp = 1.0, rp = 1.0;
        for (std::size_t i = 0; i < left.diag.size(); ++i) {
            CHECK(left.diag[i] > 0.0);
            CHECK(right.diag[i] > 0.0);
            lp *= left.diag[i];
            rp *= right.diag[i];
        }
        CHECK(lp == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(rp == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("verifier flags a perturbed triangular factor") {
    Matrix h1 = Matrix::diagonal(std::vector<double>{0.25, 4.0});
    Matrix h2 = Matrix::diagonal(std::vector<double>{4.0, 0.25});
    decomp::JointTriangularization jt = decomp::jet_shared_left(h1, h2);
    jt.per_matrix[0].t(1, 0) += 1e-3;
    auto rep = decomp::verify_joint_triangularization(jt, {h1, h2});
    CHECK_FALSE(rep.pass);
    // Residual must reflect the injected perturbation scale.
    CHECK(rep.reconstruction[0] >= 1e-5);
    CHECK(rep.reconstruction[0] <= 1e-2);
}

TEST_CASE("verifier flags swapped per-user factors") {
    dmimo::rng::Substream rng(209, 0, 0);
    linalg::ProperChannel c1 = random_proper(2, 3, 1.0, rng);
    linalg::ProperChannel c2 = random_proper(2, 3, 1.0, rng);
    decomp::JointTriangularization jt = decomp::jet_shared_left(c1.h, c2.h);
    std::swap(jt.per_matrix[0], jt.per_matrix[1]);
    auto rep = decomp::verify_joint_triangularization(jt, {c1.h, c2.h});
    CHECK_FALSE(rep.pass);
}

TEST_CASE("gmd handles wide spectra") {
    // Proper matrices with singular-value spread up to 1e8 built from exact
    // orthogonal factors.
    dmimo::rng::Substream rng(212, 0, 0);
    for (double kappa : {1e2, 1e4, 1e8}) {
        const double s = std::sqrt(kappa);
        Matrix u = testutil::random_orthogonal(2, rng);
        Matrix v = testutil::random_orthogonal(3, rng).block(0, 0, 3, 2);
        Matrix a = u * Matrix::diagonal(std::vector<double>{s, 1.0 / s}) *
                   v.transposed();
        decomp::GtdResult g = decomp::gmd(a, 1e-4);
        for (double d : g.diag) CHECK(std::abs(d - 1.0) <= 1e-8);
        CHECK(relative_residual(g.u * g.t * g.v.transposed(), a) <= 1e-8);
    }
}

TEST_CASE("jet conditioning behavior") {
    // The equal-diagonal disparity grows like eps * cond(s1 s2^{-1}); the
    // spec tolerances hold comfortably for moderately conditioned pairs and
    // degrade gracefully for extreme ones.
    dmimo::rng::Substream rng(213, 0, 0);
    auto skewed_pair = [&](double s) {
        Matrix h1 = testutil::random_orthogonal(2, rng) *
                    Matrix::diagonal(std::vector<double>{s, 1.0 / s}) *
                    testutil::random_orthogonal(2, rng);
        Matrix h2 = testutil::random_orthogonal(2, rng) *
                    Matrix::diagonal(std::vector<double>{1.0 / s, s}) *
                    testutil::random_orthogonal(2, rng);
        return std::pair<Matrix, Matrix>(std::move(h1), std::move(h2));
    };
    {
        auto [h1, h2] = skewed_pair(10.0); // cond(ratio) ~ 1e4
        decomp::JointTriangularization jt = decomp::jet_shared_left(h1, h2, 1e-6);
        auto rep = decomp::verify_joint_triangularization(jt, {h1, h2});
        CHECK(rep.pass);
        CHECK(rep.max_diag_disparity <= 1e-8);
    }
    {
        auto [h1, h2] = skewed_pair(100.0); // cond(ratio) ~ 1e8
        decomp::JointTriangularization jt = decomp::jet_shared_left(h1, h2, 1e-4);
        auto rep = decomp::verify_joint_triangularization(jt, {h1, h2});
        for (double r : rep.reconstruction) CHECK(r <= 1e-8);
        CHECK(rep.max_diag_disparity <= 1e-5); // ~ eps * cond * diagonal scale
    }
}

TEST_CASE("jet_shared_right rejects incompatible shapes") {
    dmimo::rng::Substream rng(214, 0, 0);
    linalg::ProperChannel wide = random_proper(2, 3, 1.0, rng);
    linalg::ProperChannel square = random_proper(3, 3, 1.0, rng);
    linalg::ProperChannel wide_taller = random_proper(1, 3, 1.0, rng);
    // Mixed wide/tall orientation.
    CHECK_THROWS_AS(decomp::jet_shared_right(wide.h, square.h), dmimo::Error);
    // Wide pairs need equal row counts for a common diagonal length.
    CHECK_THROWS_AS(decomp::jet_shared_right(wide.h, wide_taller.h), dmimo::Error);
    // Column counts must agree.
    linalg::ProperChannel other = random_proper(2, 4, 1.0, rng);
    CHECK_THROWS_AS(decomp::jet_shared_right(wide.h, other.h), dmimo::Error);
    CHECK_THROWS_AS(decomp::jet_shared_left(wide.h, wide_taller.h), dmimo::Error);
}

TEST_CASE("equal-diagonal profiles are feasible prescriptions") {
    // Cross-module consistency: the unit diagonal produced by gmd and the
    // common diagonal produced by the joint triangularization must both be
    // multiplicatively majorized by the corresponding singular values.
    dmimo::rng::Substream rng(215, 0, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n_r = 2 + rng.uniform_int(3);
        linalg::ProperChannel c1 = random_proper(n_r, n_r + rng.uniform_int(3), 1.0, rng);
        linalg::ProperChannel c2 = random_proper(n_r, n_r + rng.uniform_int(3), 1.0, rng);

        const std::vector<double> ones(n_r, 1.0);
        CHECK(decomp::gtd_feasible(linalg::svd(c1.h).sigma, ones));

        decomp::JointTriangularization jt = decomp::jet_shared_left(c1.h, c2.h);
        CHECK(decomp::gtd_feasible(linalg::svd(c1.h).sigma, jt.diag));
        CHECK(decomp::gtd_feasible(linalg::svd(c2.h).sigma, jt.diag));
    }
}

TEST_CASE("time extension: truncation accounting") {
    dmimo::rng::Substream rng(210, 0, 0);
    std::vector<Matrix> chans;
    for (int k = 0; k < 3; ++k) chans.push_back(random_proper(2, 2, 1.0, rng).h);

    decomp::TimeExtension ext = decomp::build_time_extension(chans, 9);
    CHECK(ext.truncated_rows == 8); // N - N_r^(K-2) + 1 = 9 - 2 + 1
    CHECK(ext.extended.size() == 3);
    CHECK(ext.extended[0].rows() == 18);
    CHECK(ext.extended[0].cols() == 18);

    std::vector<Matrix> two = {chans[0], chans[1]};
    CHECK(decomp::build_time_extension(two, 5).truncated_rows == 5); // exponent zero

    std::vector<Matrix> four = {chans[0], chans[1], chans[2], chans[0]};
    CHECK(decomp::build_time_extension(four, 10).truncated_rows == 7); // 10 - 4 + 1

    CHECK_THROWS_AS(decomp::build_time_extension(four, 3), dmimo::Error); // N < N_r^2
}

TEST_CASE("time extension: exact block-diagonal structure and repeated spectra") {
    dmimo::rng::Substream rng(211, 0, 0);
    linalg::ProperChannel ch = random_proper(2, 3, 1.0, rng);
    std::vector<Matrix> chans = {ch.h, ch.h};
    decomp::TimeExtension ext = decomp::build_time_extension(chans, 3);

    const Matrix& big = ext.extended[0];
    for (std::size_t i = 0; i < big.rows(); ++i)
        for (std::size_t j = 0; j < big.cols(); ++j) {
            const std::size_t bi = i / 2, bj = j / 3;
            const double expect = (bi == bj) ? ch.h(i % 2, j % 3) : 0.0;
            CHECK(big(i, j) == expect);
        }

    linalg::SvdResult base = linalg::svd(ch.h);
    linalg::SvdResult lifted = linalg::svd(big);
    REQUIRE(lifted.sigma.size() == 6);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(lifted.sigma[i] == doctest::Approx(base.sigma[i / 3]).epsilon(1e-9));
}

TEST_CASE("extension efficiency: examples and limit behavior") {
    CHECK(decomp::extension_efficiency(2, 3, 9) == doctest::Approx(8.0 / 9.0));
    CHECK(decomp::extension_efficiency(2, 2, 5) == doctest::Approx(1.0));
    CHECK(decomp::extension_efficiency(2, 3, 1000000) >= 0.999998);
    CHECK_THROWS_AS(decomp::extension_efficiency(2, 4, 3), dmimo::Error);

    double prev = 0.0;
    for (std::size_t n = 2; n <= 4000; ++n) {
        const double eff = decomp::extension_efficiency(2, 3, n);
        CHECK(eff >= prev);
        prev = eff;
    }
}

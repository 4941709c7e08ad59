#include "dmimo/twrc.hpp"

#include "dmimo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dmimo::twrc {

namespace {

double clamp_pos(double x) { return x > 0.0 ? x : 0.0; }

bool is_diagonal(const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) != 0.0) return false;
    return m.is_square();
}

} // namespace

double TwrcScenario::total_power(std::size_t terminal) const {
    const std::size_t n_t = terminal == 0 ? h1.n_t() : h2.n_t();
    return power_kind == PowerKind::TotalPower ? power
                                               : power * static_cast<double>(n_t);
}

TwrcScenario TwrcScenario::with_power(double p) const {
    TwrcScenario s = *this;
    s.power = p;
    s.h1.power = s.total_power(0);
    s.h2.power = s.total_power(1);
    return s;
}

TwrcScenario make_scenario(Matrix h1, Matrix h2, double power, PowerKind kind, double c_common,
                           double proper_tol) {
    if (h1.rows() != h2.rows())
        raise(ErrorKind::DimensionMismatch, "terminal channels must share the relay dimension");
    if (!(power > 0.0))
        raise(ErrorKind::DimensionMismatch, "power must be positive");
    if (c_common < 0.0 || std::isnan(c_common))
        raise(ErrorKind::DimensionMismatch, "c_common must be nonnegative");
    TwrcScenario s;
    s.h1 = linalg::make_proper(h1, 0.0, proper_tol);
    s.h2 = linalg::make_proper(h2, 0.0, proper_tol);
    s.power = power;
    s.power_kind = kind;
    s.c_common = c_common;
    s.h1.power = s.total_power(0);
    s.h2.power = s.total_power(1);
    return s;
}

double cut_set_scalar(double p, double c_common) {
    if (!(p > 0.0)) raise(ErrorKind::DimensionMismatch, "power must be positive");
    return std::min(0.5 * std::log2(1.0 + p), c_common);
}

double pnc_scalar(double p, double c_common) {
    if (!(p > 0.0)) raise(ErrorKind::DimensionMismatch, "power must be positive");
    return std::min(clamp_pos(0.5 * std::log2(0.5 + p)), c_common);
}

double cut_set_mimo(const TwrcScenario& s) {
    const double c1 = rates::waterfill_capacity(s.h1).capacity_bits;
    const double c2 = rates::waterfill_capacity(s.h2).capacity_bits;
    return std::min({c1, c2, s.c_common});
}

double pnc_mimo(const TwrcScenario& s) {
    const double nr = static_cast<double>(s.n_r());
    const double p_total = std::min(s.total_power(0), s.total_power(1));
    return std::min(clamp_pos(0.5 * nr * std::log2(p_total / nr)), s.c_common);
}

double df_symmetric_rate(const TwrcScenario& s) {
    // I + H1 K1 H1^T + H2 K2 H2^T with white K_k = (P_k / n_t,k) I.
    const std::size_t n_r = s.n_r();
    Matrix acc = Matrix::identity(n_r);
    const ProperChannel* chans[2] = {&s.h1, &s.h2};
    for (int k = 0; k < 2; ++k) {
        const Matrix& h = chans[k]->h;
        const double w = s.total_power(k) / static_cast<double>(h.cols());
        for (std::size_t i = 0; i < n_r; ++i)
            for (std::size_t j = 0; j < n_r; ++j) {
                double dot = 0.0;
                for (std::size_t l = 0; l < h.cols(); ++l) dot += h(i, l) * h(j, l);
                acc(i, j) += w * dot;
            }
    }
    const double mac_sum = 0.5 * linalg::logdet2_spd(acc);
    return std::min(0.5 * mac_sum, s.c_common);
}

double per_element_pnc(const TwrcScenario& s) {
    if (!is_diagonal(s.h1.h) || !is_diagonal(s.h2.h))
        raise(ErrorKind::NotDiagonal, "per_element_pnc needs diagonal (parallel) channels");
    const std::size_t n = s.n_r();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pa1 = s.total_power(0) / static_cast<double>(s.h1.n_t());
        const double pa2 = s.total_power(1) / static_cast<double>(s.h2.n_t());
        const double g1 = s.h1.h(i, i) * s.h1.h(i, i);
        const double g2 = s.h2.h(i, i) * s.h2.h(i, i);
        const double snr = std::min(pa1 * g1, pa2 * g2);
        sum += clamp_pos(0.5 * std::log2(0.5 + snr));
    }
    return std::min(sum, s.c_common);
}

SweepTable sweep(const TwrcScenario& s, const std::vector<double>& p_grid) {
    if (p_grid.empty()) raise(ErrorKind::DimensionMismatch, "empty power grid");
    for (std::size_t i = 1; i < p_grid.size(); ++i)
        if (!(p_grid[i] > p_grid[i - 1]))
            raise(ErrorKind::DimensionMismatch, "power grid must be strictly ascending");
    if (!(p_grid.front() > 0.0))
        raise(ErrorKind::DimensionMismatch, "power grid must be positive");

    const bool diagonal = is_diagonal(s.h1.h) && is_diagonal(s.h2.h);

    SweepTable table;
    table.columns = {"P", "cut_set_mimo", "pnc_mimo", "df_symmetric_rate"};
    if (diagonal) table.columns.push_back("per_element_pnc");

    std::ostringstream note;
    if (s.power_kind == PowerKind::PerAntenna) {
        note << "power_kind=per_antenna; total budget = P * n_t (n_t1=" << s.h1.n_t()
             << ", n_t2=" << s.h2.n_t() << ")";
    } else {
        note << "power_kind=total";
    }
    table.power_kind_note = note.str();

    for (double p : p_grid) {
        const TwrcScenario sp = s.with_power(p);
        std::vector<double> row = {p, cut_set_mimo(sp), pnc_mimo(sp), df_symmetric_rate(sp)};
        if (diagonal) row.push_back(per_element_pnc(sp));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        raise(ErrorKind::DimensionMismatch, "grid needs 0 < lo < hi and points >= 2");
    std::vector<double> grid(points);
    const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = std::exp(std::log(lo) + step * static_cast<double>(i));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

} // namespace dmimo::twrc

#include "dmimo/rates.hpp"

#include "dmimo/decomp.hpp"
#include "dmimo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dmimo::rates {

namespace {

double clamp_pos(double x) { return x > 0.0 ? x : 0.0; }

double min_of(const std::vector<double>& v) {
    return *std::min_element(v.begin(), v.end());
}

void require_users(std::size_t k) {
    if (k < 2) raise(ErrorKind::DimensionMismatch, "need at least two users");
}

std::size_t common_n_r(const std::vector<ProperChannel>& channels) {
    if (channels.empty()) raise(ErrorKind::DimensionMismatch, "no channels given");
    const std::size_t n_r = channels.front().n_r();
    for (const auto& ch : channels)
        if (ch.n_r() != n_r)
            raise(ErrorKind::DimensionMismatch, "channels must share the receive dimension");
    return n_r;
}

void require_unit_product(std::span<const double> diag) {
    double log_prod = 0.0;
    for (double d : diag) {
        if (d == 0.0) raise(ErrorKind::DiagProductNotUnit, "diagonal contains a zero");
        log_prod += std::log(std::abs(d));
    }
    if (std::abs(log_prod) > 1e-6)
        raise(ErrorKind::DiagProductNotUnit, "diagonal magnitudes must multiply to 1");
}

} // namespace

double PowerSet::total(std::size_t user, std::size_t n_antennas) const {
    if (user >= powers.size()) raise(ErrorKind::DimensionMismatch, "user index out of range");
    const double p = powers[user];
    if (!(p > 0.0) || !std::isfinite(p))
        raise(ErrorKind::DimensionMismatch, "powers must be positive and finite");
    return kind == PowerKind::TotalPower ? p : p * static_cast<double>(n_antennas);
}

std::vector<double> PowerSet::totals(const std::vector<ProperChannel>& channels) const {
    if (channels.size() != powers.size())
        raise(ErrorKind::DimensionMismatch, "power count does not match channel count");
    std::vector<double> out(powers.size());
    for (std::size_t k = 0; k < powers.size(); ++k) out[k] = total(k, channels[k].n_t());
    return out;
}

void RateSummary::add(std::string label, double value) {
    entries_.emplace_back(std::move(label), value);
}

double RateSummary::at(const std::string& label) const {
    for (const auto& [l, v] : entries_)
        if (l == label) return v;
    raise(ErrorKind::DimensionMismatch, "no rate entry named " + label);
}

bool RateSummary::has(const std::string& label) const {
    for (const auto& [l, v] : entries_)
        if (l == label) return true;
    return false;
}

WaterfillResult waterfill_capacity(const ProperChannel& ch) {
    const double p = ch.power;
    if (!(p >= 0.0) || !std::isfinite(p))
        raise(ErrorKind::DimensionMismatch, "power must be nonnegative and finite");

    linalg::SvdResult s = linalg::svd(ch.h);
    const std::size_t r = s.sigma.size();
    std::vector<double> gains(r); // sigma_i^2
    for (std::size_t i = 0; i < r; ++i) gains[i] = s.sigma[i] * s.sigma[i];

    WaterfillResult out;
    out.covariance = Matrix(ch.n_t(), ch.n_t());
    if (p == 0.0) return out;

    // Bisection on the water level mu: sum_i [mu - 1/g_i]^+ = p.
    double lo = 0.0;
    double hi = p + 1.0 / gains[r - 1];
    auto allocated = [&](double mu) {
        double total = 0.0;
        for (double g : gains) total += clamp_pos(mu - 1.0 / g);
        return total;
    };
    const double target_tol = 1e-10 * p;
    double mu = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        mu = 0.5 * (lo + hi);
        const double tr = allocated(mu);
        if (std::abs(tr - p) <= target_tol) break;
        (tr < p ? lo : hi) = mu;
    }
    out.water_level = mu;

    std::vector<double> alloc(r);
    double capacity = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        alloc[i] = clamp_pos(mu - 1.0 / gains[i]);
        capacity += 0.5 * std::log2(1.0 + gains[i] * alloc[i]);
    }
    out.capacity_bits = capacity;

    // K = V diag(alloc) V^T (modes outside the row space get no power).
    for (std::size_t i = 0; i < ch.n_t(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (std::size_t m = 0; m < r; ++m) acc += alloc[m] * s.v(i, m) * s.v(j, m);
            out.covariance(i, j) = acc;
            out.covariance(j, i) = acc;
        }
    }

    // Complementary slackness: active modes sit exactly at the water level.
    double kkt = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (alloc[i] > 0.0)
            kkt = std::max(kkt, std::abs(alloc[i] + 1.0 / gains[i] - mu));
        else
            kkt = std::max(kkt, clamp_pos(mu - 1.0 / gains[i]));
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < ch.n_t(); ++i) trace += out.covariance(i, i);
    kkt = std::max(kkt, std::abs(trace - p) / std::max(p, 1.0));
    out.kkt_residual = kkt;
    return out;
}

double high_snr_rate(std::size_t n_r, double p) {
    if (n_r < 1 || !(p > 0.0))
        raise(ErrorKind::DimensionMismatch, "high_snr_rate needs n_r >= 1 and p > 0");
    const double nr = static_cast<double>(n_r);
    return 0.5 * nr * std::log2(p / nr);
}

double zf_dpc_rate(std::span<const double> diag, std::size_t n_r, double p) {
    if (diag.size() != n_r)
        raise(ErrorKind::LengthMismatch, "diagonal length must equal n_r");
    require_unit_product(diag);
    const double per = p / static_cast<double>(n_r);
    double rate = 0.0;
    for (double d : diag) rate += 0.5 * std::log2(1.0 + per * d * d);
    return rate;
}

RateSummary scalar_dmac_bounds(const PowerSet& powers) {
    require_users(powers.users());
    for (double p : powers.powers)
        if (!(p > 0.0)) raise(ErrorKind::DimensionMismatch, "powers must be positive");
    const double pmin = min_of(powers.powers);
    const double k = static_cast<double>(powers.users());

    RateSummary out;
    out.add("outer", 0.5 * std::log2(1.0 + pmin));
    out.add("inner", clamp_pos(0.5 * std::log2(1.0 / k + pmin)));
    out.add("high_snr", 0.5 * std::log2(pmin));
    out.metadata()["min_power"] = pmin;
    out.metadata()["users"] = k;
    return out;
}

RateSummary qrd_bottleneck_rate(const std::vector<ProperChannel>& channels) {
    require_users(channels.size());
    const std::size_t n_r = common_n_r(channels);
    const double nr = static_cast<double>(n_r);

    std::vector<std::vector<double>> diags;
    for (const auto& ch : channels) {
        linalg::PropernessReport rep = linalg::validate_proper(ch.h, 1e-6);
        if (!rep.accepted) raise(ErrorKind::NotProper, "qrd_bottleneck_rate needs proper channels");
        diags.push_back(linalg::qr_lower(ch.h).t.diagonal_vector());
    }

    RateSummary out;
    double rate = 0.0;
    for (std::size_t i = 0; i < n_r; ++i) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < channels.size(); ++k) {
            const double d = diags[k][i];
            worst = std::min(worst, channels[k].power * d * d);
        }
        rate += 0.5 * std::log2(worst / nr);
        std::ostringstream key;
        key << "min_snr_index_" << i;
        out.metadata()[key.str()] = worst / nr;
    }
    out.add("qrd_bottleneck", rate);
    return out;
}

double dmac_outer(const std::vector<ProperChannel>& channels) {
    require_users(channels.size());
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& ch : channels) {
        linalg::PropernessReport rep = linalg::validate_proper(ch.h, 1e-6);
        if (!rep.accepted) raise(ErrorKind::NotProper, "dmac_outer needs proper channels");
        worst = std::min(worst, waterfill_capacity(ch).capacity_bits);
    }
    return worst;
}

double dmac_inner_high_snr(std::size_t n_r, const std::vector<double>& total_powers,
                           std::size_t k_users, std::optional<std::size_t> n_blocks) {
    require_users(k_users);
    if (total_powers.size() != k_users)
        raise(ErrorKind::DimensionMismatch, "power count does not match user count");
    const double nr = static_cast<double>(n_r);
    const double base = clamp_pos(std::log2(min_of(total_powers) / nr));

    if (k_users == 2 && !n_blocks)
        return 0.5 * nr * base;
    if (!n_blocks)
        raise(ErrorKind::TooFewBlocks,
              "three or more users need a block count N with N >= N_r^(K-2)");
    const double efficiency = decomp::extension_efficiency(n_r, k_users, *n_blocks);
    return 0.5 * nr * efficiency * base;
}

double dmac_inner_finite_snr(std::span<const double> diag, const std::vector<double>& total_powers,
                             std::size_t k_users) {
    require_users(k_users);
    if (total_powers.size() != k_users)
        raise(ErrorKind::DimensionMismatch, "power count does not match user count");
    require_unit_product(diag);
    const double nr = static_cast<double>(diag.size());
    const double pmin = min_of(total_powers);
    const double inv_k = 1.0 / static_cast<double>(k_users);
    double rate = 0.0;
    for (double d : diag) rate += clamp_pos(0.5 * std::log2(inv_k + d * d * pmin / nr));
    return rate;
}

RateSummary gap_report(const std::vector<ProperChannel>& channels,
                       std::optional<std::size_t> n_blocks) {
    require_users(channels.size());
    const std::size_t n_r = common_n_r(channels);

    std::vector<double> totals;
    for (const auto& ch : channels) totals.push_back(ch.power);

    RateSummary out;
    const double outer = dmac_outer(channels);
    const double inner_hsnr = dmac_inner_high_snr(n_r, totals, channels.size(), n_blocks);
    out.add("outer", outer);
    out.add("inner_high_snr", inner_hsnr);
    out.add("gap_high_snr", outer - inner_hsnr);

    if (channels.size() == 2) {
        decomp::JointTriangularization jt =
            decomp::jet_shared_left(channels[0].h, channels[1].h);
        const double inner_finite = dmac_inner_finite_snr(jt.diag, totals, 2);
        out.add("inner_finite_snr", inner_finite);
        out.add("gap_finite_snr", outer - inner_finite);
        for (std::size_t i = 0; i < jt.diag.size(); ++i) {
            std::ostringstream key;
            key << "jet_diag_" << i;
            out.metadata()[key.str()] = jt.diag[i];
        }
    }
    out.metadata()["min_power"] = min_of(totals);
    out.metadata()["n_r"] = static_cast<double>(n_r);
    return out;
}

} // namespace dmimo::rates

#include "dmimo/sim.hpp"

#include "dmimo/decomp.hpp"
#include "dmimo/errors.hpp"
#include "dmimo/kernels.hpp"
#include "dmimo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dmimo::sim {

namespace {

// Substream purposes: each (purpose, user) pair draws independently, so a
// change in the interference spec cannot shift symbol, dither or noise
// draws — interference invariance is checked against bit-identical streams.
constexpr std::uint64_t kStreamSymbols = 0x100;
constexpr std::uint64_t kStreamDither = 0x200;
constexpr std::uint64_t kStreamInterference = 0x300;
constexpr std::uint64_t kStreamNoise = 0x400;

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline void fnv_mix(std::uint64_t& h, std::uint64_t v) {
    h ^= v;
    h *= kFnvPrime;
}

inline double mod_into(double v, double halfwidth) {
    const double width = 2.0 * halfwidth;
    return v - width * std::floor((v + halfwidth) / width);
}

struct Lattice {
    double halfwidth;
    double delta;
    std::size_t points;
    std::int64_t offset; // index of the zero point

    double value(std::size_t index) const {
        return (static_cast<double>(static_cast<std::int64_t>(index) - offset)) * delta;
    }
    std::size_t decode(double r) const {
        const std::int64_t m = static_cast<std::int64_t>(std::llround(r / delta)) + offset;
        const std::int64_t n = static_cast<std::int64_t>(points);
        return static_cast<std::size_t>(((m % n) + n) % n);
    }
    std::size_t mod_sum_index(std::size_t m1, std::size_t m2) const {
        const std::int64_t n = static_cast<std::int64_t>(points);
        const std::int64_t v = static_cast<std::int64_t>(m1) + static_cast<std::int64_t>(m2) - offset;
        return static_cast<std::size_t>(((v % n) + n) % n);
    }
    std::size_t subtract_index(std::size_t sum, std::size_t own) const {
        const std::int64_t n = static_cast<std::int64_t>(points);
        const std::int64_t v = static_cast<std::int64_t>(sum) - static_cast<std::int64_t>(own) + offset;
        return static_cast<std::size_t>(((v % n) + n) % n);
    }
};

std::vector<Lattice> build_lattices(const LatticeConfig& cfg, std::size_t n_r, double budget_total) {
    if (cfg.halfwidths.size() != n_r)
        raise(ErrorKind::DimensionMismatch, "one lattice halfwidth per subchannel required");
    if (cfg.points < 2)
        raise(ErrorKind::DimensionMismatch, "need at least two constellation points");
    std::vector<Lattice> out;
    const double per_sub = budget_total / static_cast<double>(n_r);
    for (double w : cfg.halfwidths) {
        if (!(w > 0.0)) raise(ErrorKind::DimensionMismatch, "lattice halfwidth must be positive");
        if (w * w / 3.0 > per_sub * (1.0 + 1e-9))
            raise(ErrorKind::PowerViolation, "subchannel symbol power exceeds budget P/N_r");
        out.push_back({w, 2.0 * w / static_cast<double>(cfg.points), cfg.points,
                       static_cast<std::int64_t>(cfg.points / 2)});
    }
    return out;
}

void fill_interference(std::vector<double>& s, const InterferenceSpec& spec,
                       rng::Substream& stream, std::uint64_t trial) {
    switch (spec.kind) {
    case InterferenceKind::Zero:
        std::fill(s.begin(), s.end(), 0.0);
        break;
    case InterferenceKind::Constant:
        std::fill(s.begin(), s.end(), spec.amplitude);
        break;
    case InterferenceKind::UniformIid:
        for (double& v : s) v = stream.uniform(-spec.amplitude, spec.amplitude);
        break;
    case InterferenceKind::SignFlip:
        for (std::size_t l = 0; l < s.size(); ++l)
            s[l] = ((trial + l) & 1u) ? -spec.amplitude : spec.amplitude;
        break;
    }
}

struct UserOffline {
    Matrix v1;          // n_t x n_r, first columns of the transmit rotation
    Matrix t_square;    // n_r x n_r lower triangular
    const ProperChannel* channel;
    InterferenceSpec interference;
};

struct PassResult {
    std::uint64_t digest = kFnvOffset;
    std::vector<std::uint64_t> errors;   // per subchannel
    std::vector<double> gain_num, gain_den;
    std::vector<double> resid_sq;        // accumulated e^2
    double max_resid = 0.0;
    std::vector<double> power_acc;       // per user
    std::uint64_t recovery_mismatches = 0;
};

// Core transmission loop shared by the three schemes. `users` holds one
// entry for the single-user scheme and two otherwise; `twrc_recovery`
// enables the terminal-side subtraction check.
PassResult run_pass(const Matrix& shared_u, const std::vector<double>& diag,
                    const std::vector<UserOffline>& users, const std::vector<Lattice>& lattices,
                    DitherMode dither, std::uint64_t trials, std::uint64_t seed,
                    double noise_scale, bool zero_interference, bool twrc_recovery) {
    const std::size_t n_r = shared_u.rows();
    const std::size_t n_users = users.size();

    PassResult res;
    res.errors.assign(n_r, 0);
    res.gain_num.assign(n_r, 0.0);
    res.gain_den.assign(n_r, 0.0);
    res.resid_sq.assign(n_r, 0.0);
    res.power_acc.assign(n_users, 0.0);

    std::vector<std::vector<std::size_t>> symbols(n_users, std::vector<std::size_t>(n_r));
    std::vector<std::vector<double>> dithers(n_users, std::vector<double>(n_r, 0.0));
    std::vector<std::vector<double>> xt(n_users, std::vector<double>(n_r));
    std::vector<double> s_k(n_r), y(n_r), sum_xt(n_r);

    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        std::fill(y.begin(), y.end(), 0.0);
        std::fill(sum_xt.begin(), sum_xt.end(), 0.0);

        rng::Substream noise(seed, kStreamNoise, trial);

        for (std::size_t k = 0; k < n_users; ++k) {
            rng::Substream sym(seed, kStreamSymbols + k, trial);
            rng::Substream dit(seed, kStreamDither + k, trial);
            rng::Substream itf(seed, kStreamInterference + k, trial);

            for (std::size_t i = 0; i < n_r; ++i)
                symbols[k][i] = sym.uniform_int(lattices[i].points);
            if (dither == DitherMode::UniformSeeded)
                for (std::size_t i = 0; i < n_r; ++i)
                    dithers[k][i] = dit.uniform(-lattices[i].halfwidth, lattices[i].halfwidth);

            if (zero_interference)
                std::fill(s_k.begin(), s_k.end(), 0.0);
            else
                fill_interference(s_k, users[k].interference, itf, trial);

            // Known interference after the receiver transform, plus the
            // successive self-interference of the triangular factor.
            const std::vector<double> us = matvec_transposed(shared_u, s_k);
            const Matrix& t = users[k].t_square;
            for (std::size_t i = 0; i < n_r; ++i) {
                double interf = us[i];
                for (std::size_t l = 0; l < i; ++l) interf += t(i, l) * xt[k][l];
                const double c = lattices[i].value(symbols[k][i]);
                xt[k][i] = mod_into(c - interf / diag[i] + dithers[k][i], lattices[i].halfwidth);
                sum_xt[i] += xt[k][i];
            }

            const std::vector<double> x = matvec(users[k].v1, xt[k]);
            res.power_acc[k] += kernels::active().sum_sq(x.data(), x.size());

            const std::vector<double> hx = matvec(users[k].channel->h, x);
            for (std::size_t i = 0; i < n_r; ++i) y[i] += hx[i] + s_k[i];
        }

        for (std::size_t i = 0; i < n_r; ++i) y[i] += noise_scale * noise.normal();

        const std::vector<double> yt = matvec_transposed(shared_u, y);
        for (std::size_t i = 0; i < n_r; ++i) {
            double dither_sum = 0.0;
            for (std::size_t k = 0; k < n_users; ++k) dither_sum += dithers[k][i];
            const double r = mod_into(yt[i] / diag[i] - dither_sum, lattices[i].halfwidth);
            const std::size_t decoded = lattices[i].decode(r);

            std::size_t truth = symbols[0][i];
            if (n_users == 2) truth = lattices[i].mod_sum_index(symbols[0][i], symbols[1][i]);
            if (decoded != truth) ++res.errors[i];
            fnv_mix(res.digest, decoded);

            const double e = mod_into(r - lattices[i].value(truth), lattices[i].halfwidth);
            res.resid_sq[i] += e * e;
            res.max_resid = std::max(res.max_resid, std::abs(e));
            res.gain_num[i] += yt[i] * sum_xt[i];
            res.gain_den[i] += sum_xt[i] * sum_xt[i];

            if (twrc_recovery && decoded == truth) {
                const std::size_t rec2 = lattices[i].subtract_index(decoded, symbols[0][i]);
                const std::size_t rec1 = lattices[i].subtract_index(decoded, symbols[1][i]);
                if (rec2 != symbols[1][i] || rec1 != symbols[0][i]) ++res.recovery_mismatches;
            }
        }
    }
    return res;
}

SimReport assemble(const char* scheme, const PassResult& pass, const PassResult& zero_pass,
                   const std::vector<UserOffline>& users, std::uint64_t trials,
                   std::uint64_t seed, double noise_scale) {
    SimReport rep;
    rep.scheme = scheme;
    rep.seed = seed;
    rep.trials = trials;
    rep.noise_scale = noise_scale;
    rep.interference_invariant = pass.digest == zero_pass.digest;
    rep.decode_digest = pass.digest;
    rep.residual_self_interference = pass.max_resid;
    rep.recovery_mismatches = pass.recovery_mismatches;

    const std::size_t n_r = pass.errors.size();
    rep.subchannels.resize(n_r);
    for (std::size_t i = 0; i < n_r; ++i) {
        rep.subchannels[i].symbol_errors = pass.errors[i];
        rep.subchannels[i].gain_estimate =
            pass.gain_den[i] > 0.0 ? pass.gain_num[i] / pass.gain_den[i] : 0.0;
        rep.subchannels[i].noise_var_estimate =
            trials > 0 ? pass.resid_sq[i] / static_cast<double>(trials) : 0.0;
    }

    for (std::size_t k = 0; k < users.size(); ++k) {
        const double budget = users[k].channel->power;
        const double realized =
            trials > 0 ? pass.power_acc[k] / static_cast<double>(trials) : 0.0;
        rep.realized_power.push_back(realized);
        rep.power_budget.push_back(budget);
        if (realized > budget * (1.0 + 1e-6)) {
            std::ostringstream os;
            os << "user " << k << " realized power " << realized << " exceeds budget " << budget;
            raise(ErrorKind::PowerViolation, os.str());
        }
    }
    return rep;
}

void require_trials(std::uint64_t trials) {
    if (trials < 1) raise(ErrorKind::DimensionMismatch, "need at least one trial");
}

} // namespace

LatticeConfig LatticeConfig::for_power(double total_power, std::size_t n_r, std::size_t points,
                                       DitherMode dither) {
    if (!(total_power > 0.0))
        raise(ErrorKind::DimensionMismatch, "power must be positive");
    LatticeConfig cfg;
    cfg.points = points;
    cfg.dither = dither;
    cfg.halfwidths.assign(n_r, std::sqrt(total_power / static_cast<double>(n_r)));
    return cfg;
}

SimReport run_single_user_zf_dpc(const ProperChannel& h, const InterferenceSpec& interference,
                                 const LatticeConfig& lattice, std::uint64_t trials,
                                 std::uint64_t seed, double noise_scale) {
    require_trials(trials);
    decomp::GtdResult g = decomp::gmd(h.h);
    const std::size_t n_r = h.n_r();

    UserOffline user;
    user.v1 = g.v.block(0, 0, h.n_t(), n_r);
    user.t_square = g.t.block(0, 0, n_r, n_r);
    user.channel = &h;
    user.interference = interference;
    std::vector<UserOffline> users = {std::move(user)};

    const std::vector<Lattice> lattices = build_lattices(lattice, n_r, h.power);
    PassResult pass = run_pass(g.u, g.diag, users, lattices, lattice.dither, trials, seed,
                               noise_scale, false, false);
    PassResult zero = run_pass(g.u, g.diag, users, lattices, lattice.dither, trials, seed,
                               noise_scale, true, false);
    return assemble("single_user_zf_dpc", pass, zero, users, trials, seed, noise_scale);
}

SimReport run_two_user_dmac(const ProperChannel& h1, const ProperChannel& h2,
                            const InterferenceSpec& s1, const InterferenceSpec& s2,
                            const LatticeConfig& lattice, std::uint64_t trials,
                            std::uint64_t seed, double noise_scale) {
    require_trials(trials);
    if (h1.n_r() != h2.n_r())
        raise(ErrorKind::DimensionMismatch, "users must share the receive dimension");
    decomp::JointTriangularization jt = decomp::jet_shared_left(h1.h, h2.h);
    const std::size_t n_r = h1.n_r();

    std::vector<UserOffline> users(2);
    const ProperChannel* chans[2] = {&h1, &h2};
    const InterferenceSpec specs[2] = {s1, s2};
    for (std::size_t k = 0; k < 2; ++k) {
        users[k].v1 = jt.per_matrix[k].u.block(0, 0, chans[k]->n_t(), n_r);
        users[k].t_square = jt.per_matrix[k].t.block(0, 0, n_r, n_r);
        users[k].channel = chans[k];
        users[k].interference = specs[k];
    }

    const double budget = std::min(h1.power, h2.power);
    const std::vector<Lattice> lattices = build_lattices(lattice, n_r, budget);
    PassResult pass = run_pass(jt.shared, jt.diag, users, lattices, lattice.dither, trials, seed,
                               noise_scale, false, false);
    PassResult zero = run_pass(jt.shared, jt.diag, users, lattices, lattice.dither, trials, seed,
                               noise_scale, true, false);
    return assemble("two_user_dmac", pass, zero, users, trials, seed, noise_scale);
}

SimReport run_twrc_pnc_mac_phase(const twrc::TwrcScenario& scenario, const LatticeConfig& lattice,
                                 std::uint64_t trials, std::uint64_t seed, double noise_scale) {
    require_trials(trials);
    decomp::JointTriangularization jt = decomp::jet_shared_left(scenario.h1.h, scenario.h2.h);
    const std::size_t n_r = scenario.n_r();

    std::vector<UserOffline> users(2);
    const ProperChannel* chans[2] = {&scenario.h1, &scenario.h2};
    for (std::size_t k = 0; k < 2; ++k) {
        users[k].v1 = jt.per_matrix[k].u.block(0, 0, chans[k]->n_t(), n_r);
        users[k].t_square = jt.per_matrix[k].t.block(0, 0, n_r, n_r);
        users[k].channel = chans[k];
        users[k].interference = {InterferenceKind::Zero, 0.0};
    }

    const double budget = std::min(scenario.total_power(0), scenario.total_power(1));
    const std::vector<Lattice> lattices = build_lattices(lattice, n_r, budget);
    PassResult pass = run_pass(jt.shared, jt.diag, users, lattices, lattice.dither, trials, seed,
                               noise_scale, false, true);
    // No external interference enters the relay phase; the invariance check
    // is vacuous here and the zero pass equals the configured pass.
    return assemble("twrc_pnc_mac_phase", pass, pass, users, trials, seed, noise_scale);
}

} // namespace dmimo::sim

#pragma once

#include "dmimo/linalg.hpp"
#include "dmimo/rates.hpp"

#include <string>
#include <vector>

namespace dmimo::twrc {

using linalg::ProperChannel;
using rates::PowerKind;

/// Two-way relay setup: both terminals' uplink channels toward the relay,
/// one symmetric power budget, and the downlink characterized only by its
/// common-message capacity (bits per real channel use; may be infinite).
struct TwrcScenario {
    ProperChannel h1;
    ProperChannel h2;
    double power = 0.0; // symmetric per-terminal budget, interpreted per power_kind
    PowerKind power_kind = PowerKind::TotalPower;
    double c_common = 0.0;

    std::size_t n_r() const { return h1.n_r(); }
    double total_power(std::size_t terminal) const;
    TwrcScenario with_power(double p) const;
};

TwrcScenario make_scenario(Matrix h1, Matrix h2, double power, PowerKind kind, double c_common,
                           double proper_tol = 1e-6);

// Symmetric rate R, in bits per real channel use.

/// min{ (1/2)log2(1+p), c_common }.
double cut_set_scalar(double p, double c_common);
/// min{ [(1/2)log2(1/2+p)]^+, c_common }; within half a bit of the cut-set
/// bound whenever the relay link is the bottleneck.
double pnc_scalar(double p, double c_common);
/// min{ C_1, C_2, c_common } with water-filling individual capacities.
double cut_set_mimo(const TwrcScenario& s);
/// min{ (n_r/2)[log2(P_total/n_r)]^+, c_common }.
double pnc_mimo(const TwrcScenario& s);
/// Relay decodes both messages: min{ C_mac_sum / 2, c_common }, with white
/// full-power covariances in the sum-capacity expression.
double df_symmetric_rate(const TwrcScenario& s);
/// Scalar lattice relaying per parallel subchannel without the joint
/// triangularization; exhibits the per-element bottleneck. Diagonal
/// channels only, equal per-antenna power split.
double per_element_pnc(const TwrcScenario& s);

/// One sweep row per grid power, deterministic ordering.
struct SweepTable {
    std::vector<std::string> columns; // "P" first
    std::vector<std::vector<double>> rows;
    std::string power_kind_note;
};

SweepTable sweep(const TwrcScenario& s, const std::vector<double>& p_grid);

/// Geometric grid helper: points log-spaced over [lo, hi], endpoints included.
std::vector<double> geometric_grid(double lo, double hi, std::size_t points);

} // namespace dmimo::twrc

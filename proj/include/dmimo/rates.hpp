#pragma once

#include "dmimo/linalg.hpp"
#include "dmimo/matrix.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dmimo::rates {

using linalg::ProperChannel;

/// Per-user power budgets. TotalPower feeds the formulas as written;
/// PerAntenna is multiplied by the user's transmit-antenna count first.
enum class PowerKind { TotalPower, PerAntenna };

struct PowerSet {
    std::vector<double> powers;
    PowerKind kind = PowerKind::TotalPower;

    std::size_t users() const { return powers.size(); }
    /// Total budget of one user given its antenna count.
    double total(std::size_t user, std::size_t n_antennas) const;
    /// Totals for a matching channel list.
    std::vector<double> totals(const std::vector<ProperChannel>& channels) const;
};

/// Named rate quantities in bits per real channel use, with deterministic
/// ordering for serialization. Achievable-rate entries are clamped at zero
/// exactly where their defining formulas are; pure high-SNR diagnostics may
/// be negative.
class RateSummary {
public:
    void add(std::string label, double value);
    double at(const std::string& label) const;
    bool has(const std::string& label) const;
    const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }
    std::map<std::string, double>& metadata() { return metadata_; }
    const std::map<std::string, double>& metadata() const { return metadata_; }

private:
    std::vector<std::pair<std::string, double>> entries_;
    std::map<std::string, double> metadata_;
};

// ---------------------------------------------------------------------------
// Single-user quantities
// ---------------------------------------------------------------------------

struct WaterfillResult {
    double capacity_bits = 0.0;
    Matrix covariance;       // n_t x n_t, PSD, trace <= power
    double water_level = 0.0;
    double kkt_residual = 0.0;
};

/// Interference-free MIMO capacity (1/2) log2 |I + H K H^T| under a trace
/// constraint, by bisection on the water level with per-mode positivity
/// clipping. Terminates when the trace residual drops below 1e-10 * power.
WaterfillResult waterfill_capacity(const ProperChannel& ch);

/// (n_r / 2) log2(p / n_r); unclamped, callers clamp where their formulas do.
double high_snr_rate(std::size_t n_r, double p);

/// Zero-forcing dirty-paper rate sum_i (1/2) log2(1 + (p/n_r) d_i^2) for a
/// unit-product diagonal.
double zf_dpc_rate(std::span<const double> diag, std::size_t n_r, double p);

// ---------------------------------------------------------------------------
// Multiple-access bounds
// ---------------------------------------------------------------------------

/// Scalar bounds: outer (1/2)log2(1 + min P), inner (1/2)[log2(1/K + min P)]^+,
/// and the unclamped high-SNR expression (1/2)log2(min P).
RateSummary scalar_dmac_bounds(const PowerSet& powers);

/// Per-element bottleneck of the triangular route applied per user:
/// sum_i (1/2) log2( min_k(P_k d_{k;i}^2) / n_r ), with the per-index minima
/// reported in metadata.
RateSummary qrd_bottleneck_rate(const std::vector<ProperChannel>& channels);

/// Minimum of the users' individual water-filling capacities.
double dmac_outer(const std::vector<ProperChannel>& channels);

/// (n_r/2) [log2(min P / n_r)]^+ for two users; for K >= 3 scaled by the
/// truncation ratio of an N-block time extension.
double dmac_inner_high_snr(std::size_t n_r, const std::vector<double>& total_powers,
                           std::size_t k_users, std::optional<std::size_t> n_blocks = {});

/// Per-subchannel sum before the 1/K term is dropped:
/// sum_i (1/2)[log2(1/K + d_i^2 min P / n_r)]^+.
double dmac_inner_finite_snr(std::span<const double> diag, const std::vector<double>& total_powers,
                             std::size_t k_users);

/// Outer-vs-inner gaps for an instance (finite-SNR entry for two users,
/// computed from the joint-triangularization diagonal).
RateSummary gap_report(const std::vector<ProperChannel>& channels,
                       std::optional<std::size_t> n_blocks = {});

} // namespace dmimo::rates

#pragma once

#include "dmimo/linalg.hpp"
#include "dmimo/twrc.hpp"

#include <cstdint>
#include <vector>

namespace dmimo::sim {

using linalg::ProperChannel;

/// One-dimensional modulo lattice per subchannel: symbols are the points of
/// delta*Z inside [-w, w), delta = 2w / points. With the default halfwidth
/// w = sqrt(P/n_r) the transmitted vector respects the power budget on every
/// single trial, not just on average.
enum class DitherMode { None, UniformSeeded };

struct LatticeConfig {
    std::vector<double> halfwidths; // per subchannel
    DitherMode dither = DitherMode::UniformSeeded;
    std::size_t points = 16; // fine-lattice points per modulo interval

    static LatticeConfig for_power(double total_power, std::size_t n_r,
                                   std::size_t points = 16,
                                   DitherMode dither = DitherMode::UniformSeeded);
};

enum class InterferenceKind { Zero, Constant, UniformIid, SignFlip };

/// Arbitrary known-interference generator. UniformIid draws fresh entries in
/// [-amplitude, amplitude] per trial; SignFlip alternates +-amplitude
/// adversarially across trials and dimensions.
struct InterferenceSpec {
    InterferenceKind kind = InterferenceKind::Zero;
    double amplitude = 0.0;
};

struct SubchannelStats {
    double gain_estimate = 0.0;
    double noise_var_estimate = 0.0;
    std::uint64_t symbol_errors = 0;
};

struct SimReport {
    std::string scheme;
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    double noise_scale = 1.0;
    std::vector<SubchannelStats> subchannels;
    /// Decoded-index streams are bit-identical to a zero-interference run
    /// with the same seed.
    bool interference_invariant = false;
    /// Largest wrapped residual between decoder input and the true lattice
    /// point; in noiseless runs this measures self-interference cancellation.
    double residual_self_interference = 0.0;
    std::vector<double> realized_power; // per user, mean ||x||^2 over trials
    std::vector<double> power_budget;   // per user totals
    std::uint64_t decode_digest = 0;    // FNV-1a over decoded indices
    std::uint64_t recovery_mismatches = 0; // relay correct but terminal recovery wrong
};

/// Single-user zero-forcing dirty-paper transmission over h. Symbols are
/// generated successively; the precancelled interference on subchannel i is
/// sum_{l<i} T_{i,l} x~_l + (U^T s)_i, the transmit vector is V x~ with zero
/// padding, and the receiver applies U^T.
SimReport run_single_user_zf_dpc(const ProperChannel& h, const InterferenceSpec& interference,
                                 const LatticeConfig& lattice, std::uint64_t trials,
                                 std::uint64_t seed, double noise_scale = 1.0);

/// Two-user multiple-access run: the joint triangularization is computed
/// once; each user precancels its own self-interference and its own known
/// interference; the relay-side transform is U^T and each subchannel decodes
/// the modulo-sum of the two users' lattice symbols.
SimReport run_two_user_dmac(const ProperChannel& h1, const ProperChannel& h2,
                            const InterferenceSpec& s1, const InterferenceSpec& s2,
                            const LatticeConfig& lattice, std::uint64_t trials,
                            std::uint64_t seed, double noise_scale = 1.0);

/// Two-way-relay MAC phase: both terminals draw from the same per-subchannel
/// lattice, the relay decodes the modulo-sum, and each terminal's recovery
/// (subtracting its own symbol) is checked against the other's symbol
/// whenever the relay decision was correct.
SimReport run_twrc_pnc_mac_phase(const twrc::TwrcScenario& scenario, const LatticeConfig& lattice,
                                 std::uint64_t trials, std::uint64_t seed,
                                 double noise_scale = 1.0);

} // namespace dmimo::sim

#pragma once

#include "dmimo/decomp.hpp"
#include "dmimo/linalg.hpp"
#include "dmimo/matrix.hpp"
#include "dmimo/rates.hpp"
#include "dmimo/sim.hpp"
#include "dmimo/twrc.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace dmimo::serde {

using json = nlohmann::ordered_json;

// Matrix wire format: {"rows": r, "cols": c, "data": [r*c numbers, row-major]}.
// Doubles are emitted in shortest-exact decimal form, so a round trip is
// bit-exact.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

json svd_to_json(const linalg::SvdResult& r);
json gtd_to_json(const decomp::GtdResult& r);
json lq_to_json(const linalg::LqResult& r);

// Joint triangularizations: keys "shared", "per_matrix" ([{"u":..,"t":..}]),
// "diag", "orientation" ("shared_left" | "shared_right").
json jt_to_json(const decomp::JointTriangularization& jt);
decomp::JointTriangularization jt_from_json(const json& j);

json verify_report_to_json(const decomp::VerifyReport& r);
json rate_summary_to_json(const rates::RateSummary& r);
json sim_report_to_json(const sim::SimReport& r);

/// Scenario: {"h1":Matrix, "h2":Matrix, "power":x, "power_kind":"total"|"per_antenna",
/// "c_common": number | "inf"}.
twrc::TwrcScenario scenario_from_json(const json& j, double proper_tol = 1e-6);
json scenario_to_json(const twrc::TwrcScenario& s);

/// Rate instance: {"channels":[{"h":Matrix,"power":x},...],
/// "power_kind":..., "blocks": optional N}.
struct RatesInstance {
    std::vector<linalg::ProperChannel> channels; // powers resolved to totals
    rates::PowerKind power_kind = rates::PowerKind::TotalPower;
    std::optional<std::size_t> blocks;
};
RatesInstance rates_instance_from_json(const json& j, double proper_tol = 1e-6);

/// Simulation configuration; channels as in the rate instance, plus
/// interference specs ({"kind":"zero"|"constant"|"uniform"|"sign_flip",
/// "amplitude":x}) per user, lattice settings, trials, optional seed and
/// noise scale.
struct SimConfig {
    std::string scheme; // "single_user" | "two_user_dmac" | "twrc_pnc"
    std::vector<linalg::ProperChannel> channels;
    rates::PowerKind power_kind = rates::PowerKind::TotalPower;
    std::vector<sim::InterferenceSpec> interference;
    std::optional<double> halfwidth;
    std::size_t points = 16;
    sim::DitherMode dither = sim::DitherMode::UniformSeeded;
    std::uint64_t trials = 0;
    std::optional<std::uint64_t> seed;
    double noise_scale = 1.0;
};
SimConfig sim_config_from_json(const json& j, double proper_tol = 1e-6);

/// Sweep CSV: '#' metadata line, header row, then one row per grid point at
/// 12 significant digits (lossless re-parse at that precision).
std::string sweep_to_csv(const twrc::SweepTable& table);
std::string table_to_csv(const std::vector<std::string>& columns,
                         const std::vector<std::vector<double>>& rows,
                         const std::string& note = {});

std::string format_g12(double v);

json load_json_file(const std::string& path);
json parse_json(const std::string& text);
void write_text_file(const std::string& path, const std::string& text);
std::string dump(const json& j);

} // namespace dmimo::serde

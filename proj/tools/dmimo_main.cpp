// Command-line front end: decompose | rates | twrc | sim subcommands with
// JSON/CSV file I/O. Exit codes: 0 success, 2 parse, 3 validation,
// 4 numerical failure, 5 verifier failure.

#include "dmimo/decomp.hpp"
#include "dmimo/errors.hpp"
#include "dmimo/linalg.hpp"
#include "dmimo/rates.hpp"
#include "dmimo/serde.hpp"
#include "dmimo/sim.hpp"
#include "dmimo/twrc.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

namespace {

using dmimo::Matrix;
using dmimo::serde::json;
namespace linalg = dmimo::linalg;
namespace decomp = dmimo::decomp;
namespace rates = dmimo::rates;
namespace twrc = dmimo::twrc;
namespace sim = dmimo::sim;

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitVerifier = 5;

struct SweepSpec {
    double min = 0.0;
    double max = 0.0;
    std::size_t points = 0;
};

SweepSpec parse_sweep(const std::string& text) {
    SweepSpec s;
    char colon1 = 0, colon2 = 0;
    std::istringstream is(text);
    if (!(is >> s.min >> colon1 >> s.max >> colon2 >> s.points) || colon1 != ':' ||
        colon2 != ':' || !is.eof())
        dmimo::raise(dmimo::ErrorKind::ParseError, "--sweep expects min:max:points");
    if (!(s.min > 0.0) || !(s.max > s.min) || s.points < 2)
        dmimo::raise(dmimo::ErrorKind::DimensionMismatch,
                     "--sweep needs 0 < min < max and points >= 2");
    return s;
}

linalg::Tolerances tolerances_from(double tol) {
    linalg::Tolerances t;
    t.reconstruction = tol;
    t.orthonormality = tol / 10.0;
    t.above_diagonal = tol / 100.0;
    t.diagonal_match = tol;
    return t;
}

void emit(const std::string& text, const std::string& output_path) {
    if (output_path.empty())
        std::cout << text;
    else
        dmimo::serde::write_text_file(output_path, text);
}

// --- decompose ------------------------------------------------------------

int cmd_decompose(const std::string& kind, const std::string& input, const std::string& input2,
                  const std::string& output, double tol) {
    const linalg::Tolerances tols = tolerances_from(tol);
    const double proper_tol = tol * 100.0;
    json out;
    bool pass = true;

    if (kind == "qr" || kind == "svd" || kind == "gmd") {
        Matrix a = dmimo::serde::matrix_from_json(dmimo::serde::load_json_file(input));
        if (kind == "qr") {
            linalg::LqResult r = linalg::qr_lower(a);
            out = dmimo::serde::lq_to_json(r);
            const double recon = relative_residual(r.t * r.q, a);
            const double orth = orthonormality_residual(r.q);
            pass = recon <= tols.reconstruction && orth <= tols.orthonormality;
            out["report"] = {{"reconstruction", recon}, {"orthonormality", orth}, {"pass", pass}};
        } else if (kind == "svd") {
            linalg::SvdResult r = linalg::svd(a);
            out = dmimo::serde::svd_to_json(r);
            Matrix usv = r.u * Matrix::diagonal(r.sigma) * r.v.transposed();
            const double recon = relative_residual(usv, a);
            const double orth =
                std::max(orthonormality_residual(r.u), orthonormality_residual(r.v));
            pass = recon <= tols.reconstruction && orth <= tols.orthonormality;
            out["report"] = {{"reconstruction", recon}, {"orthonormality", orth}, {"pass", pass}};
        } else {
            decomp::GtdResult r = decomp::gmd(a, proper_tol);
            out = dmimo::serde::gtd_to_json(r);
            Matrix utv = r.u * r.t * r.v.transposed();
            const double recon = relative_residual(utv, a);
            double diag_spread = 0.0;
            for (double d : r.diag)
                diag_spread = std::max(diag_spread, std::abs(d - r.diag.front()));
            pass = recon <= tols.reconstruction && diag_spread <= tols.diagonal_match;
            out["report"] = {{"reconstruction", recon}, {"diag_spread", diag_spread}, {"pass", pass}};
        }
    } else if (kind == "jet" || kind == "jet_left") {
        if (input2.empty())
            dmimo::raise(dmimo::ErrorKind::ParseError, "--input2 required for joint kinds");
        Matrix a1 = dmimo::serde::matrix_from_json(dmimo::serde::load_json_file(input));
        Matrix a2 = dmimo::serde::matrix_from_json(dmimo::serde::load_json_file(input2));
        decomp::JointTriangularization jt = kind == "jet"
                                                ? decomp::jet_shared_right(a1, a2, proper_tol)
                                                : decomp::jet_shared_left(a1, a2, proper_tol);
        decomp::VerifyReport rep = decomp::verify_joint_triangularization(jt, {a1, a2}, tols);
        out = dmimo::serde::jt_to_json(jt);
        out["report"] = dmimo::serde::verify_report_to_json(rep);
        pass = rep.pass;
        std::cout << "verifier: " << rep.detail << "\n";
        std::cout << "diag:";
        for (double d : jt.diag) std::cout << " " << dmimo::serde::format_g12(d);
        std::cout << "\n";
    } else if (kind == "verify") {
        json bundle = dmimo::serde::load_json_file(input);
        if (!bundle.contains("originals") || !bundle.contains("decomposition"))
            dmimo::raise(dmimo::ErrorKind::ParseError,
                         "verify bundle needs \"originals\" and \"decomposition\"");
        std::vector<Matrix> originals;
        for (const json& mj : bundle["originals"])
            originals.push_back(dmimo::serde::matrix_from_json(mj));
        decomp::JointTriangularization jt = dmimo::serde::jt_from_json(bundle["decomposition"]);
        decomp::VerifyReport rep = decomp::verify_joint_triangularization(jt, originals, tols);
        out = dmimo::serde::verify_report_to_json(rep);
        pass = rep.pass;
        std::cout << "verifier: " << rep.detail << "\n";
    } else {
        dmimo::raise(dmimo::ErrorKind::ParseError,
                     "--kind must be qr|svd|gmd|jet|jet_left|verify");
    }

    emit(dmimo::serde::dump(out), output);
    return pass ? 0 : kExitVerifier;
}

// --- rates ------------------------------------------------------------------

rates::RateSummary rates_point(const std::vector<linalg::ProperChannel>& channels,
                               std::optional<std::size_t> blocks) {
    const std::size_t k = channels.size();
    const std::size_t n_r = channels.front().n_r();
    std::vector<double> totals;
    for (const auto& ch : channels) totals.push_back(ch.power);

    rates::RateSummary out;
    for (std::size_t i = 0; i < k; ++i) {
        out.add("capacity_user_" + std::to_string(i + 1),
                rates::waterfill_capacity(channels[i]).capacity_bits);
    }
    const double pmin = *std::min_element(totals.begin(), totals.end());
    out.add("high_snr_min", rates::high_snr_rate(n_r, pmin));
    out.add("dmac_outer", rates::dmac_outer(channels));
    out.add("dmac_inner_high_snr", rates::dmac_inner_high_snr(n_r, totals, k, blocks));
    if (k == 2) {
        decomp::JointTriangularization jt = decomp::jet_shared_left(channels[0].h, channels[1].h);
        out.add("dmac_inner_finite_snr", rates::dmac_inner_finite_snr(jt.diag, totals, 2));
    }
    out.add("qrd_bottleneck", rates::qrd_bottleneck_rate(channels).at("qrd_bottleneck"));
    for (std::size_t i = 0; i < k; ++i) {
        decomp::GtdResult g = decomp::gmd(channels[i].h);
        out.add("zf_dpc_user_" + std::to_string(i + 1),
                rates::zf_dpc_rate(g.diag, n_r, channels[i].power));
    }
    out.add("gap_high_snr", out.at("dmac_outer") - out.at("dmac_inner_high_snr"));
    if (k == 2) out.add("gap_finite_snr", out.at("dmac_outer") - out.at("dmac_inner_finite_snr"));

    bool all_scalar = true;
    for (const auto& ch : channels)
        all_scalar = all_scalar && ch.n_r() == 1 && ch.n_t() == 1;
    if (all_scalar) {
        rates::PowerSet ps{totals, rates::PowerKind::TotalPower};
        rates::RateSummary sc = rates::scalar_dmac_bounds(ps);
        out.add("scalar_outer", sc.at("outer"));
        out.add("scalar_inner", sc.at("inner"));
        out.add("scalar_high_snr", sc.at("high_snr"));
    }
    out.metadata()["n_r"] = static_cast<double>(n_r);
    out.metadata()["users"] = static_cast<double>(k);
    out.metadata()["min_power"] = pmin;
    if (blocks) {
        out.metadata()["blocks"] = static_cast<double>(*blocks);
        out.metadata()["efficiency"] =
            decomp::extension_efficiency(n_r, k, *blocks);
    }
    return out;
}

int cmd_rates(const std::string& input, const std::string& output,
              std::optional<double> power_override, const std::string& power_kind,
              std::optional<std::size_t> blocks_flag, const std::string& sweep_text,
              const std::string& format, double tol) {
    dmimo::serde::RatesInstance inst =
        dmimo::serde::rates_instance_from_json(dmimo::serde::load_json_file(input), tol * 100.0);
    if (!power_kind.empty()) {
        inst.power_kind = power_kind == "per_antenna" ? rates::PowerKind::PerAntenna
                                                      : rates::PowerKind::TotalPower;
    }
    if (power_override) {
        for (auto& ch : inst.channels) {
            ch.power = inst.power_kind == rates::PowerKind::TotalPower
                           ? *power_override
                           : *power_override * static_cast<double>(ch.n_t());
        }
    }
    std::optional<std::size_t> blocks = blocks_flag ? blocks_flag : inst.blocks;
    if (inst.channels.size() >= 3 && !blocks)
        dmimo::raise(dmimo::ErrorKind::TooFewBlocks,
                     "three or more users need --blocks N with N >= N_r^(K-2)");

    if (sweep_text.empty()) {
        rates::RateSummary summary = rates_point(inst.channels, blocks);
        if (format == "csv") {
            std::vector<std::string> cols = {"P"};
            std::vector<double> row = {summary.metadata()["min_power"]};
            for (const auto& [l, v] : summary.entries()) {
                cols.push_back(l);
                row.push_back(v);
            }
            emit(dmimo::serde::table_to_csv(cols, {row}), output);
        } else {
            emit(dmimo::serde::dump(dmimo::serde::rate_summary_to_json(summary)), output);
        }
        return 0;
    }

    const SweepSpec spec = parse_sweep(sweep_text);
    const std::vector<double> grid = twrc::geometric_grid(spec.min, spec.max, spec.points);
    std::vector<std::string> cols;
    std::vector<std::vector<double>> rows;
    for (double p : grid) {
        std::vector<linalg::ProperChannel> chans = inst.channels;
        for (auto& ch : chans) {
            ch.power = inst.power_kind == rates::PowerKind::TotalPower
                           ? p
                           : p * static_cast<double>(ch.n_t());
        }
        rates::RateSummary summary = rates_point(chans, blocks);
        if (cols.empty()) {
            cols.push_back("P");
            for (const auto& [l, v] : summary.entries()) cols.push_back(l);
        }
        std::vector<double> row = {p};
        for (const auto& [l, v] : summary.entries()) row.push_back(v);
        rows.push_back(std::move(row));
    }
    emit(dmimo::serde::table_to_csv(cols, rows), output);
    return 0;
}

// --- twrc -------------------------------------------------------------------

int cmd_twrc(const std::string& input, const std::string& output,
             std::optional<double> power_override, const std::string& power_kind,
             const std::string& sweep_text, double tol) {
    twrc::TwrcScenario scenario =
        dmimo::serde::scenario_from_json(dmimo::serde::load_json_file(input), tol * 100.0);
    if (!power_kind.empty()) {
        scenario.power_kind = power_kind == "per_antenna" ? rates::PowerKind::PerAntenna
                                                          : rates::PowerKind::TotalPower;
        scenario = scenario.with_power(scenario.power);
    }
    if (power_override) scenario = scenario.with_power(*power_override);

    std::vector<double> grid;
    if (sweep_text.empty()) {
        grid = {scenario.power};
    } else {
        const SweepSpec spec = parse_sweep(sweep_text);
        grid = twrc::geometric_grid(spec.min, spec.max, spec.points);
    }
    twrc::SweepTable table = twrc::sweep(scenario, grid);
    emit(dmimo::serde::sweep_to_csv(table), output);
    return 0;
}

// --- sim --------------------------------------------------------------------

int cmd_sim(const std::string& input, const std::string& output,
            std::optional<std::uint64_t> seed_flag, std::optional<std::uint64_t> trials_flag,
            double tol) {
    dmimo::serde::SimConfig cfg =
        dmimo::serde::sim_config_from_json(dmimo::serde::load_json_file(input), tol * 100.0);
    if (seed_flag) cfg.seed = seed_flag;
    if (trials_flag) cfg.trials = *trials_flag;
    if (!cfg.seed)
        dmimo::raise(dmimo::ErrorKind::DimensionMismatch,
                     "sim needs an explicit seed (--seed or config field)");

    const std::size_t n_r = cfg.channels.front().n_r();
    double budget = cfg.channels.front().power;
    for (const auto& ch : cfg.channels) budget = std::min(budget, ch.power);

    sim::LatticeConfig lattice =
        sim::LatticeConfig::for_power(budget, n_r, cfg.points, cfg.dither);
    if (cfg.halfwidth) lattice.halfwidths.assign(n_r, *cfg.halfwidth);

    sim::SimReport report;
    if (cfg.scheme == "single_user") {
        report = sim::run_single_user_zf_dpc(cfg.channels[0], cfg.interference[0], lattice,
                                             cfg.trials, *cfg.seed, cfg.noise_scale);
    } else if (cfg.scheme == "two_user_dmac") {
        report = sim::run_two_user_dmac(cfg.channels[0], cfg.channels[1], cfg.interference[0],
                                        cfg.interference[1], lattice, cfg.trials, *cfg.seed,
                                        cfg.noise_scale);
    } else {
        if (cfg.channels[0].power != cfg.channels[1].power)
            dmimo::raise(dmimo::ErrorKind::DimensionMismatch,
                         "twrc_pnc needs symmetric terminal powers");
        twrc::TwrcScenario scenario;
        scenario.h1 = cfg.channels[0];
        scenario.h2 = cfg.channels[1];
        scenario.power = cfg.channels[0].power;
        scenario.power_kind = rates::PowerKind::TotalPower;
        scenario.c_common = std::numeric_limits<double>::infinity();
        report = sim::run_twrc_pnc_mac_phase(scenario, lattice, cfg.trials, *cfg.seed,
                                             cfg.noise_scale);
    }

    std::uint64_t total_errors = 0;
    for (const auto& s : report.subchannels) total_errors += s.symbol_errors;
    std::ostringstream summary;
    summary << "scheme=" << report.scheme << " trials=" << report.trials
            << " errors=" << total_errors << " interference_invariant="
            << (report.interference_invariant ? "true" : "false") << "\n";

    const std::string text = dmimo::serde::dump(dmimo::serde::sim_report_to_json(report));
    if (output.empty()) {
        std::cout << text;
        std::cerr << summary.str();
    } else {
        dmimo::serde::write_text_file(output, text);
        std::cout << summary.str();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint matrix triangularizations, multiple-access rate bounds, "
                 "two-way-relay comparisons and modulo-lattice link simulation"};
    app.require_subcommand(1);

    std::string input, input2, output, kind, power_kind, sweep_text, format = "json";
    std::optional<double> power_override;
    std::optional<std::size_t> blocks;
    std::optional<std::uint64_t> seed, trials;
    double tol = 1e-8;

    CLI::App* dec = app.add_subcommand("decompose", "Matrix factorizations with a verifier");
    dec->add_option("--kind", kind, "qr|svd|gmd|jet|jet_left|verify")->required();
    dec->add_option("--input", input, "input JSON")->required();
    dec->add_option("--input2", input2, "second matrix for joint kinds");
    dec->add_option("--output", output, "output path (stdout when absent)");
    dec->add_option("--tol", tol, "reconstruction tolerance (default 1e-8)");

    CLI::App* rat = app.add_subcommand("rates", "Rate bounds for a channel instance");
    rat->add_option("--input", input, "instance JSON")->required();
    rat->add_option("--output", output, "output path");
    rat->add_option("--power", power_override, "override every user's power");
    rat->add_option("--power-kind", power_kind, "total|per_antenna");
    rat->add_option("--blocks", blocks, "time-extension block count for K >= 3");
    rat->add_option("--sweep", sweep_text, "geometric power sweep min:max:points");
    rat->add_option("--format", format, "json|csv (sweeps always emit csv)");
    rat->add_option("--tol", tol, "tolerance scale");

    CLI::App* twr = app.add_subcommand("twrc", "Two-way-relay strategy comparison sweep");
    twr->add_option("--input", input, "scenario JSON")->required();
    twr->add_option("--output", output, "output path");
    twr->add_option("--power", power_override, "override the symmetric power");
    twr->add_option("--power-kind", power_kind, "total|per_antenna");
    twr->add_option("--sweep", sweep_text, "geometric power sweep min:max:points");
    twr->add_option("--tol", tol, "tolerance scale");

    CLI::App* simc = app.add_subcommand("sim", "Modulo-lattice link simulation");
    simc->add_option("--input", input, "config JSON")->required();
    simc->add_option("--output", output, "report path");
    simc->add_option("--seed", seed, "RNG seed (required unless the config has one)");
    simc->add_option("--trials", trials, "trial count override");
    simc->add_option("--tol", tol, "tolerance scale");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    try {
        if (dec->parsed()) return cmd_decompose(kind, input, input2, output, tol);
        if (rat->parsed())
            return cmd_rates(input, output, power_override, power_kind, blocks, sweep_text,
                             format, tol);
        if (twr->parsed())
            return cmd_twrc(input, output, power_override, power_kind, sweep_text, tol);
        return cmd_sim(input, output, seed, trials, tol);
    } catch (const dmimo::Error& e) {
        std::cerr << e.what() << "\n";
        switch (e.error_class()) {
        case dmimo::ErrorClass::Parse: return kExitParse;
        case dmimo::ErrorClass::Validation: return kExitValidation;
        case dmimo::ErrorClass::Numerical: return kExitNumerical;
        }
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

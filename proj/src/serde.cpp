#include "dmimo/serde.hpp"

#include "dmimo/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace dmimo::serde {

namespace {

[[noreturn]] void parse_fail(const std::string& what) {
    raise(ErrorKind::ParseError, what);
}

double get_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        parse_fail(std::string("missing or non-numeric field \"") + key + "\"");
    return j[key].get<double>();
}

std::uint64_t get_count(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_unsigned())
        parse_fail(std::string("missing or non-integer field \"") + key + "\"");
    return j[key].get<std::uint64_t>();
}

rates::PowerKind power_kind_from(const json& j) {
    const std::string kind = j.value("power_kind", "total");
    if (kind == "total") return rates::PowerKind::TotalPower;
    if (kind == "per_antenna") return rates::PowerKind::PerAntenna;
    parse_fail("power_kind must be \"total\" or \"per_antenna\"");
}

double c_common_from(const json& j) {
    if (!j.contains("c_common")) parse_fail("missing field \"c_common\"");
    const json& v = j["c_common"];
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        parse_fail("c_common string form must be \"inf\"");
    }
    if (!v.is_number()) parse_fail("c_common must be a number or \"inf\"");
    return v.get<double>();
}

std::vector<linalg::ProperChannel> channels_from(const json& j, rates::PowerKind kind,
                                                 double proper_tol) {
    if (!j.contains("channels") || !j["channels"].is_array() || j["channels"].empty())
        parse_fail("missing or empty \"channels\" array");
    std::vector<linalg::ProperChannel> out;
    for (const json& cj : j["channels"]) {
        if (!cj.contains("h")) parse_fail("channel entry missing \"h\"");
        Matrix h = matrix_from_json(cj["h"]);
        const double p = get_number(cj, "power");
        const double total = kind == rates::PowerKind::TotalPower
                                 ? p
                                 : p * static_cast<double>(h.cols());
        out.push_back(linalg::make_proper(std::move(h), total, proper_tol));
    }
    return out;
}

} // namespace

json matrix_to_json(const Matrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = m.data();
    return j;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        parse_fail("matrix needs \"rows\", \"cols\" and \"data\"");
    if (!j["rows"].is_number_unsigned() || !j["cols"].is_number_unsigned())
        parse_fail("matrix dimensions must be positive integers");
    const auto rows = j["rows"].get<std::size_t>();
    const auto cols = j["cols"].get<std::size_t>();
    if (rows == 0 || cols == 0) parse_fail("matrix dimensions must be positive");
    if (!j["data"].is_array() || j["data"].size() != rows * cols)
        parse_fail("matrix \"data\" length must equal rows*cols");
    std::vector<double> data;
    data.reserve(rows * cols);
    for (const json& v : j["data"]) {
        if (!v.is_number()) parse_fail("matrix entries must be numbers");
        data.push_back(v.get<double>());
    }
    Matrix m = Matrix::from_data(rows, cols, std::move(data));
    if (!m.is_finite()) parse_fail("matrix entries must be finite");
    return m;
}

json svd_to_json(const linalg::SvdResult& r) {
    json j;
    j["u"] = matrix_to_json(r.u);
    j["sigma"] = r.sigma;
    j["v"] = matrix_to_json(r.v);
    return j;
}

json gtd_to_json(const decomp::GtdResult& r) {
    json j;
    j["u"] = matrix_to_json(r.u);
    j["t"] = matrix_to_json(r.t);
    j["v"] = matrix_to_json(r.v);
    j["diag"] = r.diag;
    return j;
}

json lq_to_json(const linalg::LqResult& r) {
    json j;
    j["t"] = matrix_to_json(r.t);
    j["q"] = matrix_to_json(r.q);
    j["diag"] = r.t.diagonal_vector();
    return j;
}

json jt_to_json(const decomp::JointTriangularization& jt) {
    json j;
    j["orientation"] =
        jt.orientation == decomp::Orientation::SharedLeft ? "shared_left" : "shared_right";
    j["shared"] = matrix_to_json(jt.shared);
    json per = json::array();
    for (const auto& f : jt.per_matrix) {
        json fj;
        fj["u"] = matrix_to_json(f.u);
        fj["t"] = matrix_to_json(f.t);
        per.push_back(std::move(fj));
    }
    j["per_matrix"] = std::move(per);
    j["diag"] = jt.diag;
    return j;
}

decomp::JointTriangularization jt_from_json(const json& j) {
    decomp::JointTriangularization jt;
    const std::string orient = j.value("orientation", "");
    if (orient == "shared_left")
        jt.orientation = decomp::Orientation::SharedLeft;
    else if (orient == "shared_right")
        jt.orientation = decomp::Orientation::SharedRight;
    else
        parse_fail("orientation must be \"shared_left\" or \"shared_right\"");
    if (!j.contains("shared") || !j.contains("per_matrix") || !j["per_matrix"].is_array())
        parse_fail("joint triangularization needs \"shared\" and \"per_matrix\"");
    jt.shared = matrix_from_json(j["shared"]);
    for (const json& fj : j["per_matrix"]) {
        if (!fj.contains("u") || !fj.contains("t"))
            parse_fail("per_matrix entries need \"u\" and \"t\"");
        jt.per_matrix.push_back({matrix_from_json(fj["u"]), matrix_from_json(fj["t"])});
    }
    if (j.contains("diag")) {
        for (const json& v : j["diag"]) jt.diag.push_back(v.get<double>());
    }
    return jt;
}

json verify_report_to_json(const decomp::VerifyReport& r) {
    json j;
    j["pass"] = r.pass;
    j["reconstruction"] = r.reconstruction;
    j["max_above_diagonal"] = r.max_above_diagonal;
    j["max_diag_disparity"] = r.max_diag_disparity;
    j["max_orthonormality"] = r.max_orthonormality;
    j["detail"] = r.detail;
    return j;
}

json rate_summary_to_json(const rates::RateSummary& r) {
    json j;
    for (const auto& [label, value] : r.entries()) j[label] = value;
    if (!r.metadata().empty()) {
        json meta;
        for (const auto& [k, v] : r.metadata()) meta[k] = v;
        j["metadata"] = std::move(meta);
    }
    return j;
}

json sim_report_to_json(const sim::SimReport& r) {
    json j;
    j["scheme"] = r.scheme;
    j["seed"] = r.seed;
    j["trials"] = r.trials;
    j["noise_scale"] = r.noise_scale;
    j["interference_invariant"] = r.interference_invariant;
    j["decode_digest"] = r.decode_digest;
    j["residual_self_interference"] = r.residual_self_interference;
    j["realized_power"] = r.realized_power;
    j["power_budget"] = r.power_budget;
    json subs = json::array();
    for (const auto& s : r.subchannels) {
        json sj;
        sj["gain_estimate"] = s.gain_estimate;
        sj["noise_var_estimate"] = s.noise_var_estimate;
        sj["symbol_errors"] = s.symbol_errors;
        subs.push_back(std::move(sj));
    }
    j["subchannels"] = std::move(subs);
    j["recovery_mismatches"] = r.recovery_mismatches;
    return j;
}

twrc::TwrcScenario scenario_from_json(const json& j, double proper_tol) {
    if (!j.contains("h1") || !j.contains("h2")) parse_fail("scenario needs \"h1\" and \"h2\"");
    return twrc::make_scenario(matrix_from_json(j["h1"]), matrix_from_json(j["h2"]),
                               get_number(j, "power"), power_kind_from(j), c_common_from(j),
                               proper_tol);
}

json scenario_to_json(const twrc::TwrcScenario& s) {
    json j;
    j["h1"] = matrix_to_json(s.h1.h);
    j["h2"] = matrix_to_json(s.h2.h);
    j["power"] = s.power;
    j["power_kind"] = s.power_kind == rates::PowerKind::TotalPower ? "total" : "per_antenna";
    if (std::isinf(s.c_common))
        j["c_common"] = "inf";
    else
        j["c_common"] = s.c_common;
    return j;
}

RatesInstance rates_instance_from_json(const json& j, double proper_tol) {
    RatesInstance inst;
    inst.power_kind = power_kind_from(j);
    inst.channels = channels_from(j, inst.power_kind, proper_tol);
    if (j.contains("blocks")) {
        if (!j["blocks"].is_number_unsigned()) parse_fail("\"blocks\" must be a positive integer");
        inst.blocks = j["blocks"].get<std::size_t>();
    }
    return inst;
}

SimConfig sim_config_from_json(const json& j, double proper_tol) {
    SimConfig cfg;
    cfg.scheme = j.value("scheme", "");
    if (cfg.scheme != "single_user" && cfg.scheme != "two_user_dmac" && cfg.scheme != "twrc_pnc")
        parse_fail("scheme must be \"single_user\", \"two_user_dmac\" or \"twrc_pnc\"");
    cfg.power_kind = power_kind_from(j);
    cfg.channels = channels_from(j, cfg.power_kind, proper_tol);

    const std::size_t expected_users = cfg.scheme == "single_user" ? 1 : 2;
    if (cfg.channels.size() != expected_users)
        parse_fail("channel count does not match the scheme");

    cfg.interference.assign(expected_users, {sim::InterferenceKind::Zero, 0.0});
    if (j.contains("interference")) {
        if (!j["interference"].is_array() || j["interference"].size() != expected_users)
            parse_fail("\"interference\" must list one spec per user");
        for (std::size_t k = 0; k < expected_users; ++k) {
            const json& sj = j["interference"][k];
            const std::string kind = sj.value("kind", "zero");
            sim::InterferenceSpec spec;
            if (kind == "zero")
                spec.kind = sim::InterferenceKind::Zero;
            else if (kind == "constant")
                spec.kind = sim::InterferenceKind::Constant;
            else if (kind == "uniform")
                spec.kind = sim::InterferenceKind::UniformIid;
            else if (kind == "sign_flip")
                spec.kind = sim::InterferenceKind::SignFlip;
            else
                parse_fail("interference kind must be zero|constant|uniform|sign_flip");
            spec.amplitude = sj.value("amplitude", 0.0);
            cfg.interference[k] = spec;
        }
    }

    if (j.contains("lattice_halfwidth")) cfg.halfwidth = get_number(j, "lattice_halfwidth");
    if (j.contains("constellation_points"))
        cfg.points = static_cast<std::size_t>(get_count(j, "constellation_points"));
    const std::string dither = j.value("dither", "uniform");
    if (dither == "uniform")
        cfg.dither = sim::DitherMode::UniformSeeded;
    else if (dither == "none")
        cfg.dither = sim::DitherMode::None;
    else
        parse_fail("dither must be \"uniform\" or \"none\"");

    cfg.trials = get_count(j, "trials");
    if (j.contains("seed")) cfg.seed = get_count(j, "seed");
    if (j.contains("noise_scale")) cfg.noise_scale = get_number(j, "noise_scale");
    if (cfg.noise_scale < 0.0) parse_fail("noise_scale must be nonnegative");
    return cfg;
}

std::string format_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string table_to_csv(const std::vector<std::string>& columns,
                         const std::vector<std::vector<double>>& rows, const std::string& note) {
    std::ostringstream os;
    if (!note.empty()) os << "# " << note << "\n";
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << "\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_g12(row[c]);
        os << "\n";
    }
    return os.str();
}

std::string sweep_to_csv(const twrc::SweepTable& table) {
    return table_to_csv(table.columns, table.rows, table.power_kind_note);
}

json parse_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) parse_fail("malformed JSON");
    return j;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) parse_fail("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json(buf.str());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) parse_fail("cannot write " + path);
    out << text;
}

std::string dump(const json& j) {
    return j.dump(2) + "\n";
}

} // namespace dmimo::serde

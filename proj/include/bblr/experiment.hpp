#pragma once

// Experiment configuration, validation and file output for the pendulum
// benchmark. The config is a single JSON document; every key has a default
// so `{}` is a valid config.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bblr/classk.hpp"
#include "bblr/dynamics.hpp"
#include "bblr/filter.hpp"
#include "bblr/sim.hpp"

namespace bblr {

using json = nlohmann::json;

// Parse or schema problem in the config file.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Class-K functions as tagged records.

inline json to_json_value(const ClassKFn& fn) {
    json arr = json::array();
    for (const auto& t : fn.terms()) {
        if (t.shape == Shape::Linear)
            arr.push_back({{"kind", "linear"}, {"coeff", t.coeff}});
        else
            arr.push_back({{"kind", "signed_power"}, {"degree", t.degree}, {"coeff", t.coeff}});
    }
    for (const auto& s : fn.shifted())
        arr.push_back({{"kind", "pssf"}, {"coeff", s.coeff}, {"rho", s.rho}, {"inner", to_json_value(*s.inner)}});
    if (arr.size() == 1) return arr.front();
    return arr;
}

inline ClassKFn classk_from_json(const json& j) {
    if (j.is_array()) {
        ClassKFn sum = ClassKFn::zero();
        for (const auto& item : j) sum = add(sum, classk_from_json(item));
        return sum;
    }
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("class-K record needs a 'kind' field");
    const auto kind = j.at("kind").get<std::string>();
    const double coeff = j.value("coeff", 1.0);
    if (!(coeff >= 0.0)) throw ConfigError("class-K coefficient must be nonnegative");
    if (kind == "linear") return ClassKFn::linear(coeff);
    if (kind == "signed_power") {
        const int degree = j.at("degree").get<int>();
        if (degree < 1) throw ConfigError("signed_power degree must be >= 1");
        return ClassKFn::signed_power(degree, coeff);
    }
    if (kind == "pssf") return scale(make_pssf(classk_from_json(j.at("inner")), j.at("rho").get<double>()), coeff);
    throw ConfigError("unknown class-K kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    // plant
    double true_mass = 1.0;
    double nominal_mass = 0.96;
    double length = 1.0;
    double gravity = 9.81;
    double theta_max = std::numbers::pi;
    double thetadot_max = 5.0;

    // learner
    std::vector<int> degrees{1, 2, 3, 4, 5};
    double prior_tau = 0.4;
    double curvature_bound = 6.0;
    double window_seconds = 0.2;
    PredictiveVarianceMode variance_mode = PredictiveVarianceMode::Additive;

    // filter
    double rho = 0.5;
    json gamma = json{{"kind", "linear"}, {"coeff", 1.0}};
    int s = 1;
    BlendSquash q = BlendSquash::Identity;
    double u_lo = -25.0;
    double u_hi = 25.0;
    double warmup_seconds = 0.2;

    // simulation
    double dt_control = 0.002;
    int substeps = 10;
    double duration = 6.0;
    std::vector<double> initial_state{0.0, 0.0};

    std::vector<std::string> modes{"unfiltered", "true_oracle", "nominal", "bblr"};
    std::string output_dir = "out";
};

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["system"] = {{"true_mass", c.true_mass}, {"nominal_mass", c.nominal_mass}, {"length", c.length}, {"gravity", c.gravity}};
    j["barrier"] = {{"theta_max", c.theta_max}, {"thetadot_max", c.thetadot_max}};
    j["learner"] = {{"degrees", c.degrees},
                    {"prior_tau", c.prior_tau},
                    {"curvature_bound", c.curvature_bound},
                    {"window_seconds", c.window_seconds},
                    {"predictive_variance_mode",
                     c.variance_mode == PredictiveVarianceMode::Additive ? "additive" : "inverse_noise"}};
    j["filter"] = {{"rho", c.rho},
                   {"gamma", c.gamma},
                   {"s", c.s},
                   {"q_kind", std::string(to_string(c.q))},
                   {"input_box", {{"lo", c.u_lo}, {"hi", c.u_hi}}},
                   {"warmup_seconds", c.warmup_seconds}};
    j["sim"] = {{"dt_control", c.dt_control}, {"substeps", c.substeps}, {"duration", c.duration}, {"initial_state", c.initial_state}};
    j["modes"] = c.modes;
    j["output_dir"] = c.output_dir;
    return j;
}

namespace detail {

// Line and column of a byte offset, plus the offending line's text.
inline std::string describe_position(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t line_start = 0;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            line_start = i + 1;
        }
    }
    const std::size_t line_end = text.find('\n', line_start);
    const std::string snippet = text.substr(line_start, line_end == std::string::npos ? std::string::npos : line_end - line_start);
    std::ostringstream os;
    os << "line " << line << ", column " << (byte >= line_start ? byte - line_start : 0) << ": " << snippet;
    return os.str();
}

inline void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (const auto& [key, _] : obj.items())
        if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in '" + where + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
    }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    detail::reject_unknown(j, {"system", "barrier", "learner", "filter", "sim", "modes", "output_dir"}, "config");

    if (j.contains("system")) {
        const auto& s = j.at("system");
        detail::reject_unknown(s, {"true_mass", "nominal_mass", "length", "gravity"}, "system");
        detail::read(s, "true_mass", c.true_mass, "system");
        detail::read(s, "nominal_mass", c.nominal_mass, "system");
        detail::read(s, "length", c.length, "system");
        detail::read(s, "gravity", c.gravity, "system");
    }
    if (j.contains("barrier")) {
        const auto& b = j.at("barrier");
        detail::reject_unknown(b, {"theta_max", "thetadot_max"}, "barrier");
        detail::read(b, "theta_max", c.theta_max, "barrier");
        detail::read(b, "thetadot_max", c.thetadot_max, "barrier");
    }
    if (j.contains("learner")) {
        const auto& l = j.at("learner");
        detail::reject_unknown(l, {"degrees", "prior_tau", "curvature_bound", "window_seconds", "predictive_variance_mode"},
                               "learner");
        detail::read(l, "degrees", c.degrees, "learner");
        detail::read(l, "prior_tau", c.prior_tau, "learner");
        detail::read(l, "curvature_bound", c.curvature_bound, "learner");
        detail::read(l, "window_seconds", c.window_seconds, "learner");
        std::string mode = "additive";
        detail::read(l, "predictive_variance_mode", mode, "learner");
        if (mode == "additive")
            c.variance_mode = PredictiveVarianceMode::Additive;
        else if (mode == "inverse_noise")
            c.variance_mode = PredictiveVarianceMode::InverseNoise;
        else
            throw ConfigError("learner.predictive_variance_mode must be 'additive' or 'inverse_noise'");
    }
    if (j.contains("filter")) {
        const auto& f = j.at("filter");
        detail::reject_unknown(f, {"rho", "gamma", "s", "q_kind", "input_box", "warmup_seconds"}, "filter");
        detail::read(f, "rho", c.rho, "filter");
        if (f.contains("gamma")) {
            c.gamma = f.at("gamma");
            (void)classk_from_json(c.gamma);
        }
        detail::read(f, "s", c.s, "filter");
        std::string q = "identity";
        detail::read(f, "q_kind", q, "filter");
        const auto squash = squash_from_string(q);
        if (!squash) throw ConfigError("filter.q_kind must be 'identity' or 'square'");
        c.q = *squash;
        if (f.contains("input_box")) {
            const auto& box = f.at("input_box");
            detail::reject_unknown(box, {"lo", "hi"}, "filter.input_box");
            detail::read(box, "lo", c.u_lo, "filter.input_box");
            detail::read(box, "hi", c.u_hi, "filter.input_box");
        }
        detail::read(f, "warmup_seconds", c.warmup_seconds, "filter");
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        detail::reject_unknown(s, {"dt_control", "substeps", "duration", "initial_state"}, "sim");
        detail::read(s, "dt_control", c.dt_control, "sim");
        detail::read(s, "substeps", c.substeps, "sim");
        detail::read(s, "duration", c.duration, "sim");
        detail::read(s, "initial_state", c.initial_state, "sim");
        if (c.initial_state.size() != 2) throw ConfigError("sim.initial_state must have two entries (theta, thetadot)");
    }
    detail::read(j, "modes", c.modes, "config");
    detail::read(j, "output_dir", c.output_dir, "config");
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error at ") + detail::describe_position(text, e.byte > 0 ? e.byte - 1 : 0) +
                          "\n  " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config schema error: ") + e.what());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

// ---------------------------------------------------------------------------
// Validation

struct ValidationCheck {
    std::string name;
    enum class Level { Ok, Warning, Error } level = Level::Ok;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    RhoCheck rho;

    [[nodiscard]] bool ok() const {
        for (const auto& c : checks)
            if (c.level == ValidationCheck::Level::Error) return false;
        return true;
    }
};

inline ValidationReport validate_config(const ExperimentConfig& c) {
    using Level = ValidationCheck::Level;
    ValidationReport rep;
    auto add = [&](std::string name, Level level, std::string msg) { rep.checks.push_back({std::move(name), level, std::move(msg)}); };
    auto fmt = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };

    if (c.true_mass > 0.0 && c.nominal_mass > 0.0 && c.length > 0.0)
        add("physical_parameters", Level::Ok, "masses and length positive");
    else
        add("physical_parameters", Level::Error, "masses and length must be positive");

    if (c.theta_max > 0.0 && c.thetadot_max > 0.0)
        add("barrier_bounds", Level::Ok, "theta_max and thetadot_max positive");
    else
        add("barrier_bounds", Level::Error, "theta_max and thetadot_max must be positive");

    bool degrees_ok = !c.degrees.empty();
    for (int d : c.degrees) degrees_ok = degrees_ok && d >= 1;
    if (degrees_ok)
        add("basis_degrees", Level::Ok, "all degrees >= 1, so every basis function vanishes at h = 0");
    else
        add("basis_degrees", Level::Error, "basis degrees must be >= 1 (phi(0) = 0 is required)");

    if (c.window_seconds >= 2.0 * c.dt_control)
        add("window_length", Level::Ok, "window spans " + fmt(c.window_seconds / c.dt_control) + " control steps");
    else
        add("window_length", Level::Error, "window_seconds must be at least 2 * dt_control");

    if (!(c.rho > 0.0)) {
        add("rho_condition", Level::Error, "rho must be positive");
    } else {
        try {
            const ClassKFn gamma = classk_from_json(c.gamma);
            if (!gamma.well_formed()) {
                add("rho_condition", Level::Error, "gamma is degenerate");
            } else {
                rep.rho = check_rho_condition(gamma, c.rho);
                const double margin = -gamma(-c.rho);
                if (rep.rho.holds)
                    add("rho_condition", Level::Ok,
                        std::string(margin == c.rho ? "holds with equality" : "holds") + ": rho = " + fmt(c.rho) +
                            " <= -gamma(-rho) = " + fmt(margin));
                else
                    add("rho_condition", Level::Warning,
                        "fails: rho = " + fmt(c.rho) + " > -gamma(-rho) = " + fmt(margin) +
                            "; certified set shrinks to h + h0 >= 0 with h0 = " + fmt(rep.rho.h0));
            }
        } catch (const Error& e) {
            add("rho_condition", Level::Error, e.what());
        }
    }

    if (c.s >= 1 && c.prior_tau > 0.0 && c.curvature_bound > 0.0 && c.u_lo < c.u_hi && c.warmup_seconds >= 0.0)
        add("learner_filter_parameters", Level::Ok, "s, prior_tau, curvature_bound, input box and warmup valid");
    else
        add("learner_filter_parameters", Level::Error,
            "need s >= 1, prior_tau > 0, curvature_bound > 0, input_box lo < hi, warmup_seconds >= 0");

    if (c.dt_control > 0.0 && c.substeps >= 1 && c.duration >= c.dt_control)
        add("sim_parameters", Level::Ok, "dt_control, substeps and duration valid");
    else
        add("sim_parameters", Level::Error, "need dt_control > 0, substeps >= 1, duration >= dt_control");

    std::set<std::string> seen;
    bool modes_ok = !c.modes.empty();
    for (const auto& m : c.modes) {
        const auto mode = mode_from_string(m);
        modes_ok = modes_ok && mode && *mode != Mode::Blended && seen.insert(m).second;
    }
    if (modes_ok)
        add("modes", Level::Ok, "mode list nonempty, known and duplicate-free");
    else
        add("modes", Level::Error, "modes must be a nonempty duplicate-free subset of unfiltered, true_oracle, nominal, bblr");

    return rep;
}

// ---------------------------------------------------------------------------
// Assembly

inline Plant make_plant(const ExperimentConfig& c) {
    return Plant{pendulum_system(c.length, c.true_mass, c.gravity), pendulum_system(c.length, c.nominal_mass, c.gravity),
                 ellipsoid_barrier(c.theta_max, c.thetadot_max)};
}

inline FilterConfig make_filter_config(const ExperimentConfig& c) {
    FilterConfig f;
    f.rho = c.rho;
    f.gamma = classk_from_json(c.gamma);
    f.s = c.s;
    f.q = c.q;
    f.input_box = InputBox(Vec::Constant(1, c.u_lo), Vec::Constant(1, c.u_hi));
    f.warmup_seconds = c.warmup_seconds;
    f.variance_mode = c.variance_mode;
    return make_filter_config(std::move(f));
}

inline LearnerConfig make_learner_config(const ExperimentConfig& c) {
    LearnerConfig l;
    l.degrees = c.degrees;
    l.prior_tau = c.prior_tau;
    l.curvature_bound = c.curvature_bound;
    l.window_seconds = c.window_seconds;
    return l;
}

inline SimConfig make_sim_config(const ExperimentConfig& c, Mode mode) {
    SimConfig s;
    s.dt_control = c.dt_control;
    s.substeps = c.substeps;
    s.duration = c.duration;
    s.initial_state = Vec(2);
    s.initial_state << c.initial_state[0], c.initial_state[1];
    s.mode = mode;
    return s;
}

inline Trajectory run_mode(const ExperimentConfig& c, Mode mode) {
    return run_closed_loop(make_sim_config(c, mode), make_filter_config(c), make_learner_config(c), make_plant(c));
}

// Runs every configured mode as an independent job.
inline std::map<std::string, Trajectory> run_modes(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, std::future<Trajectory>>> jobs;
    for (const auto& name : c.modes) {
        const auto mode = mode_from_string(name);
        if (!mode) throw ConfigError("unknown mode '" + name + "'");
        jobs.emplace_back(name, std::async(std::launch::async, [&c, m = *mode] { return run_mode(c, m); }));
    }
    std::map<std::string, Trajectory> out;
    for (auto& [name, fut] : jobs) out.emplace(name, fut.get());
    return out;
}

// ---------------------------------------------------------------------------
// Output

inline constexpr double kBoundaryBand = 0.05;
inline constexpr int kEllipsePoints = 360;

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "t,theta,thetadot,u_ref,u_applied,h,lie_true,blend_r,sigma_k,feasible,mode\n";
    for (const auto& r : tr.records) {
        os << format_double(r.t) << ',' << format_double(r.x(0)) << ',' << format_double(r.x(1)) << ','
           << format_double(r.u_ref(0)) << ',' << format_double(r.u_applied(0)) << ',' << format_double(r.h) << ','
           << format_double(r.lie_true) << ',' << format_double(r.blend_r) << ',' << format_double(r.sigma_k) << ','
           << (r.feasible ? 1 : 0) << ',' << to_string(r.mode) << '\n';
    }
}

inline json trajectory_json(const Trajectory& tr) {
    json cols = {{"t", json::array()},       {"theta", json::array()},    {"thetadot", json::array()},
                 {"u_ref", json::array()},   {"u_applied", json::array()}, {"h", json::array()},
                 {"lie_true", json::array()}, {"blend_r", json::array()},  {"sigma_k", json::array()},
                 {"feasible", json::array()}, {"mode", json::array()}};
    for (const auto& r : tr.records) {
        cols["t"].push_back(r.t);
        cols["theta"].push_back(r.x(0));
        cols["thetadot"].push_back(r.x(1));
        cols["u_ref"].push_back(r.u_ref(0));
        cols["u_applied"].push_back(r.u_applied(0));
        cols["h"].push_back(r.h);
        cols["lie_true"].push_back(r.lie_true);
        cols["blend_r"].push_back(r.blend_r);
        cols["sigma_k"].push_back(r.sigma_k);
        cols["feasible"].push_back(r.feasible);
        cols["mode"].push_back(std::string(to_string(r.mode)));
    }
    return {{"run_mode", std::string(to_string(tr.run_mode))}, {"records", cols}};
}

inline json mode_summary(const Trajectory& tr) {
    json s;
    s["min_h"] = tr.min_h();
    const auto lie = tr.min_boundary_lie(kBoundaryBand);
    s["min_boundary_lie"] = lie ? json(*lie) : json(nullptr);
    s["boundary_h_threshold"] = kBoundaryBand;
    s["infeasible_count"] = tr.infeasible_count;
    s["fallback_count"] = tr.fallback_count;
    s["clamped_h_count"] = tr.clamped_h_count;
    const Vec xf = tr.final_state();
    s["final_state"] = {xf(0), xf(1)};
    s["records"] = tr.records.size();
    return s;
}

inline json summary_json(const ExperimentConfig& c, const std::map<std::string, Trajectory>& runs) {
    json j;
    const RhoCheck rho = check_rho_condition(classk_from_json(c.gamma), c.rho);
    j["rho_condition"] = {{"holds", rho.holds}, {"h0", rho.h0}};
    j["modes"] = json::object();
    for (const auto& [name, tr] : runs) j["modes"][name] = mode_summary(tr);
    return j;
}

inline void write_phase_plot_csv(std::ostream& os, const ExperimentConfig& c, const std::map<std::string, Trajectory>& runs) {
    os << "series,index,theta,thetadot\n";
    for (const auto& [name, tr] : runs)
        for (std::size_t i = 0; i < tr.records.size(); ++i)
            os << name << ',' << i << ',' << format_double(tr.records[i].x(0)) << ',' << format_double(tr.records[i].x(1)) << '\n';
    for (int i = 0; i < kEllipsePoints; ++i) {
        const double a = 2.0 * std::numbers::pi * i / kEllipsePoints;
        os << "safe_set," << i << ',' << format_double(c.theta_max * std::cos(a)) << ','
           << format_double(c.thetadot_max * std::sin(a)) << '\n';
    }
}

namespace detail {

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    writer(out);
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail

// Writes trajectory_<mode>.{csv,json}, summary.json and phase_plot.csv.
inline json write_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                          const std::map<std::string, Trajectory>& runs) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

    for (const auto& [name, tr] : runs) {
        detail::write_file(dir / ("trajectory_" + name + ".csv"), [&](std::ostream& os) { write_trajectory_csv(os, tr); });
        detail::write_file(dir / ("trajectory_" + name + ".json"), [&](std::ostream& os) { os << trajectory_json(tr).dump() << '\n'; });
    }
    const json summary = summary_json(c, runs);
    detail::write_file(dir / "summary.json", [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
    detail::write_file(dir / "phase_plot.csv", [&](std::ostream& os) { write_phase_plot_csv(os, c, runs); });
    return summary;
}

}  // namespace bblr

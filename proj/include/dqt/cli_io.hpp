#pragma once

// Run configuration (JSON document) and columnar results files.
//
// Config layout, all blocks optional except "bath":
//
//   {
//     "system":   {"epsilon": 1.0, "drive_amplitude": 0.1, "drive_frequency": 1.0,
//                  "initial_state": "ground" | "excited" | [[re, im], [re, im]]},
//     "bath":     {"kind": "semicircle_chain", "eps0": 1.0, "h": 0.05, "N": 20,
//                  "weights": "midpoint" | "uniform" | "chain"}
//              or {"kind": "tabulated", "omega": [...], "coupling": [...], "N": 20},
//     "method":   {"name": "dressed" | "linear" | "ed", "truncation": 2, "dt": 0.05,
//                  "t_max": 180.0, "record_stride": 1, "projection_floor": 1e-12,
//                  "norm_tolerance": 1e-8},
//     "ensemble": {"trajectories": 1000, "seed": 1, "batches": 10, "workers": 1},
//     "output":   {"path": "results.dat", "format": "text"}
//   }
//
// "truncation" is the virtual-quanta cutoff n for dressed/linear runs and the
// bath excitation cutoff K for ed runs.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dqt/bath_model.hpp"
#include "dqt/ed_oracle.hpp"
#include "dqt/ensemble_driver.hpp"
#include "dqt/types.hpp"

namespace dqt {

using json = nlohmann::json;

struct RunConfig {
    struct System {
        double epsilon = 1.0;
        double drive_amplitude = 0.1;
        double drive_frequency = 1.0;
        json initial_state = "ground";
    } system;

    struct Bath {
        std::string kind = "semicircle_chain";
        double eps0 = 1.0;
        double h = 0.05;
        int num_modes = 20;
        WeightRule weights = WeightRule::midpoint;
        std::vector<double> omega;
        std::vector<cplx> coupling;
    } bath;

    struct MethodBlock {
        std::string name = "dressed";
        int truncation = 2;
        double dt = 0.05;
        double t_max = 180.0;
        int record_stride = 1;
        double projection_floor = 1e-12;
        double norm_tolerance = 1e-8;
    } method;

    struct Ensemble {
        std::uint64_t trajectories = 1000;
        std::uint64_t seed = 1;
        int batches = 10;
        int workers = 1;
    } ensemble;

    struct Output {
        std::string path = "results.dat";
        std::string format = "text";
    } output;
};

namespace detail {

class ConfigReader {
public:
    ConfigReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail(path_, "expected an object");
    }

    template <class T>
    void get(const std::string& key, T& out, bool required = false) {
        seen_.insert(key);
        const std::string where = path_.empty() ? key : path_ + "." + key;
        if (!obj_.contains(key)) {
            if (required) fail(where, "required key missing");
            return;
        }
        const json& v = obj_.at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) fail(where, "expected a number");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) fail(where, "expected an integer");
                if constexpr (std::is_unsigned_v<T>) {
                    if (v.get<std::int64_t>() < 0) fail(where, "must be non-negative");
                }
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) fail(where, "expected a string");
            }
            out = v.get<T>();
        } catch (const json::exception& e) {
            fail(where, e.what());
        }
    }

    void raw(const std::string& key, json& out) {
        seen_.insert(key);
        if (obj_.contains(key)) out = obj_.at(key);
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    void reject_unknown() const {
        for (const auto& [k, _] : obj_.items()) {
            if (!seen_.count(k)) fail(path_.empty() ? k : path_ + "." + k, "unknown key");
        }
    }

    [[noreturn]] static void fail(const std::string& where, const std::string& what) {
        throw ConfigError(where + ": " + what);
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

inline json complex_to_json(cplx c) { return json::array({c.real(), c.imag()}); }

inline cplx complex_from_json(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    ConfigReader::fail(where, "expected a number or [re, im]");
}

} // namespace detail

inline void validate(const RunConfig& c) {
    using detail::ConfigReader;
    if (c.method.name != "dressed" && c.method.name != "linear" && c.method.name != "ed") {
        ConfigReader::fail("method.name", "expected dressed, linear or ed");
    }
    if (c.method.truncation < 0) ConfigReader::fail("method.truncation", "must be non-negative");
    if (!(c.method.dt > 0.0)) ConfigReader::fail("method.dt", "must be positive");
    if (!(c.method.t_max >= 0.0)) ConfigReader::fail("method.t_max", "must be non-negative");
    if (c.method.record_stride < 1) ConfigReader::fail("method.record_stride", "must be >= 1");
    if (!(c.method.projection_floor > 0.0 && c.method.projection_floor < 1.0)) {
        ConfigReader::fail("method.projection_floor", "must lie in (0, 1)");
    }
    if (!(c.method.norm_tolerance > 0.0)) ConfigReader::fail("method.norm_tolerance", "must be positive");
    if (c.bath.kind == "semicircle_chain") {
        if (!(c.bath.h > 0.0)) ConfigReader::fail("bath.h", "must be positive");
    } else if (c.bath.kind == "tabulated") {
        if (c.bath.omega.size() < 2 || c.bath.omega.size() != c.bath.coupling.size()) {
            ConfigReader::fail("bath.omega", "need >= 2 frequencies matching bath.coupling in length");
        }
    } else {
        ConfigReader::fail("bath.kind", "expected semicircle_chain or tabulated");
    }
    if (c.bath.num_modes < 1) ConfigReader::fail("bath.N", "must be >= 1");
    if (c.ensemble.trajectories < 1) ConfigReader::fail("ensemble.trajectories", "must be >= 1");
    if (c.ensemble.batches < 1) ConfigReader::fail("ensemble.batches", "must be >= 1");
    if (c.ensemble.workers < 1) ConfigReader::fail("ensemble.workers", "must be >= 1");
    if (c.output.format != "text") ConfigReader::fail("output.format", "only \"text\" is supported");
    const auto& s = c.system.initial_state;
    if (s.is_string()) {
        if (s != "ground" && s != "excited") ConfigReader::fail("system.initial_state", "expected ground or excited");
    } else if (!(s.is_array() && s.size() == 2)) {
        ConfigReader::fail("system.initial_state", "expected ground, excited or two [re, im] amplitudes");
    }
}

inline RunConfig parse_config(const std::string& text) {
    using detail::ConfigReader;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    RunConfig c;
    ConfigReader top(doc, "");
    json sys = json::object(), bath, method = json::object(), ens = json::object(), out = json::object();
    top.raw("system", sys);
    if (!top.has("bath")) ConfigReader::fail("bath", "required key missing");
    top.raw("bath", bath);
    top.raw("method", method);
    top.raw("ensemble", ens);
    top.raw("output", out);
    top.reject_unknown();

    ConfigReader rs(sys, "system");
    rs.get("epsilon", c.system.epsilon);
    rs.get("drive_amplitude", c.system.drive_amplitude);
    rs.get("drive_frequency", c.system.drive_frequency);
    rs.raw("initial_state", c.system.initial_state);
    rs.reject_unknown();

    ConfigReader rb(bath, "bath");
    rb.get("kind", c.bath.kind, true);
    if (c.bath.kind == "semicircle_chain") {
        rb.get("eps0", c.bath.eps0, true);
        rb.get("h", c.bath.h, true);
        rb.get("N", c.bath.num_modes, true);
        std::string rule = to_string(c.bath.weights);
        rb.get("weights", rule);
        try {
            c.bath.weights = weight_rule_from_string(rule);
        } catch (const InvalidInput& e) {
            ConfigReader::fail("bath.weights", e.what());
        }
    } else if (c.bath.kind == "tabulated") {
        json omega, coupling;
        if (!rb.has("omega")) ConfigReader::fail("bath.omega", "required key missing");
        if (!rb.has("coupling")) ConfigReader::fail("bath.coupling", "required key missing");
        rb.raw("omega", omega);
        rb.raw("coupling", coupling);
        rb.get("N", c.bath.num_modes, true);
        if (!omega.is_array() || !coupling.is_array()) ConfigReader::fail("bath.omega", "expected arrays");
        for (const auto& w : omega) {
            if (!w.is_number()) ConfigReader::fail("bath.omega", "expected numbers");
            c.bath.omega.push_back(w.get<double>());
        }
        for (const auto& g : coupling) c.bath.coupling.push_back(detail::complex_from_json(g, "bath.coupling"));
    }
    rb.reject_unknown();

    ConfigReader rm(method, "method");
    rm.get("name", c.method.name);
    rm.get("truncation", c.method.truncation);
    rm.get("dt", c.method.dt);
    rm.get("t_max", c.method.t_max);
    rm.get("record_stride", c.method.record_stride);
    rm.get("projection_floor", c.method.projection_floor);
    rm.get("norm_tolerance", c.method.norm_tolerance);
    rm.reject_unknown();

    ConfigReader re(ens, "ensemble");
    re.get("trajectories", c.ensemble.trajectories);
    re.get("seed", c.ensemble.seed);
    re.get("batches", c.ensemble.batches);
    re.get("workers", c.ensemble.workers);
    re.reject_unknown();

    ConfigReader ro(out, "output");
    ro.get("path", c.output.path);
    ro.get("format", c.output.format);
    ro.reject_unknown();

    validate(c);
    return c;
}

/// Fully resolved config, defaults included. Keys are emitted in sorted order.
inline json to_json(const RunConfig& c) {
    json j;
    j["system"] = {{"epsilon", c.system.epsilon},
                   {"drive_amplitude", c.system.drive_amplitude},
                   {"drive_frequency", c.system.drive_frequency},
                   {"initial_state", c.system.initial_state}};
    if (c.bath.kind == "semicircle_chain") {
        j["bath"] = {{"kind", c.bath.kind}, {"eps0", c.bath.eps0}, {"h", c.bath.h},
                     {"N", c.bath.num_modes}, {"weights", to_string(c.bath.weights)}};
    } else {
        json cs = json::array();
        for (auto g : c.bath.coupling) cs.push_back(detail::complex_to_json(g));
        j["bath"] = {{"kind", c.bath.kind}, {"omega", c.bath.omega}, {"coupling", cs}, {"N", c.bath.num_modes}};
    }
    j["method"] = {{"name", c.method.name},
                   {"truncation", c.method.truncation},
                   {"dt", c.method.dt},
                   {"t_max", c.method.t_max},
                   {"record_stride", c.method.record_stride},
                   {"projection_floor", c.method.projection_floor},
                   {"norm_tolerance", c.method.norm_tolerance}};
    j["ensemble"] = {{"trajectories", c.ensemble.trajectories},
                     {"seed", c.ensemble.seed},
                     {"batches", c.ensemble.batches},
                     {"workers", c.ensemble.workers}};
    j["output"] = {{"path", c.output.path}, {"format", c.output.format}};
    return j;
}

inline Vector initial_state(const RunConfig& c) {
    const auto& s = c.system.initial_state;
    if (s.is_string()) {
        return qubit::basis_state(s == "excited" ? qubit::excited : qubit::ground);
    }
    Vector v(2);
    v(0) = detail::complex_from_json(s[0], "system.initial_state");
    v(1) = detail::complex_from_json(s[1], "system.initial_state");
    const double n = v.norm();
    if (!(n > 0.0)) detail::ConfigReader::fail("system.initial_state", "zero vector");
    return v / n;
}

inline SystemModel build_system(const RunConfig& c) {
    return make_spin_boson(c.system.epsilon, c.system.drive_amplitude, c.system.drive_frequency, initial_state(c));
}

inline DiscretizedBath build_bath(const RunConfig& c) {
    if (c.bath.kind == "semicircle_chain") {
        return discretize_semicircle_chain(c.bath.eps0, c.bath.h, c.bath.num_modes, c.bath.weights);
    }
    return discretize_uniform(ContinuumBath::tabulated(c.bath.omega, c.bath.coupling), c.bath.num_modes);
}

inline PropagatorConfig propagator_config(const RunConfig& c) {
    PropagatorConfig p;
    p.dt = c.method.dt;
    p.t_max = c.method.t_max;
    p.truncation = c.method.truncation;
    p.method = c.method.name == "linear" ? Method::linear_dressed : Method::nonlinear_dressed;
    p.projection_floor = c.method.projection_floor;
    p.record_stride = c.method.record_stride;
    return p;
}

inline EDConfig ed_config(const RunConfig& c) {
    EDConfig e;
    e.excitation_cutoff = c.method.truncation;
    e.dt = c.method.dt;
    e.t_max = c.method.t_max;
    e.record_stride = c.method.record_stride;
    e.norm_tolerance = c.method.norm_tolerance;
    return e;
}

/// Output-ready time series shared by the ensemble and ED paths.
struct ResultSeries {
    std::vector<double> times;
    std::vector<double> occupation;
    std::vector<double> occupation_stderr;
    std::vector<Matrix> rho;
    std::size_t num_trajectories = 0;
    std::size_t num_degenerate = 0;
};

inline ResultSeries to_series(const EnsembleResult& r) {
    return {r.times, r.occupation, r.occupation_stderr, r.rho_mean, r.num_trajectories, r.num_degenerate};
}

inline ResultSeries to_series(const EDResult& r) {
    return {r.times, r.occupation, std::vector<double>(r.times.size(), 0.0), r.rho, 0, 0};
}

inline constexpr const char* results_magic = "# dqt-results 1";

inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string render_results(const ResultSeries& r, const json& resolved_config) {
    std::ostringstream out;
    const auto d = r.rho.empty() ? 0 : r.rho[0].rows();
    out << results_magic << '\n';
    out << "# config " << resolved_config.dump() << '\n';
    out << "# num_trajectories " << r.num_trajectories << '\n';
    out << "# num_degenerate " << r.num_degenerate << '\n';
    out << "# columns t occupation occupation_stderr";
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) out << " rho_" << i << '_' << j << "_re rho_" << i << '_' << j << "_im";
    }
    out << " num_degenerate\n";
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        out << format_number(r.times[k]) << ' ' << format_number(r.occupation[k]) << ' '
            << format_number(r.occupation_stderr[k]);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                out << ' ' << format_number(r.rho[k](i, j).real()) << ' ' << format_number(r.rho[k](i, j).imag());
            }
        }
        out << ' ' << r.num_degenerate << '\n';
    }
    return out.str();
}

inline void write_results(const ResultSeries& r, const json& resolved_config, const std::string& path,
                          const std::string& format = "text") {
    if (format != "text") throw InvalidInput("write_results: unsupported format '" + format + "'");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw RuntimeFailure("cannot open output file '" + path + "' for writing");
    f << render_results(r, resolved_config);
    if (!f) throw RuntimeFailure("write to '" + path + "' failed");
}

struct ResultTable {
    json config;
    std::map<std::string, std::string> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c] == name) {
                std::vector<double> v;
                for (const auto& row : rows) v.push_back(row[c]);
                return v;
            }
        }
        throw InvalidInput("results: no column '" + name + "'");
    }
};

inline ResultTable parse_results(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != results_magic) throw InvalidInput("results: missing header line");
    ResultTable t;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key;
            ls >> key;
            std::string rest;
            std::getline(ls, rest);
            if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
            if (key == "config") {
                t.config = json::parse(rest);
            } else if (key == "columns") {
                std::istringstream cs(rest);
                std::string c;
                while (cs >> c) t.columns.push_back(c);
            } else {
                t.meta[key] = rest;
            }
            continue;
        }
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) row.push_back(std::strtod(tok.c_str(), nullptr));
        if (row.size() != t.columns.size()) throw InvalidInput("results: row width does not match columns");
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline ResultTable read_results(const std::string& path) { return parse_results(read_file(path)); }

/// Config text from a config file, or the embedded config of a results file.
inline RunConfig load_config(const std::string& path) {
    const std::string text = read_file(path);
    if (text.rfind(results_magic, 0) == 0) {
        return parse_config(parse_results(text).config.dump());
    }
    return parse_config(text);
}

} // namespace dqt

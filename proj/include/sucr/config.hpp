#pragma once

// JSON form of ExperimentConfig. Keys missing from a file keep the values
// of the preset being overridden; unknown keys are errors.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sucr/experiment.hpp"

namespace sucr {

using Json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

inline double read_real(const Json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
    return v.get<double>();
}

inline std::int64_t read_int(const Json& obj, const char* key, std::int64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    return v.get<std::int64_t>();
}

inline int read_int32(const Json& obj, const char* key, int fallback) {
    const auto v = read_int(obj, key, fallback);
    if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(std::string(key) + " is out of range");
    return static_cast<int>(v);
}

inline std::string read_string(const Json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(std::string(key) + " must be a string");
    return v.get<std::string>();
}

inline std::vector<double> read_reals(const Json& obj, const char* key, const std::vector<double>& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_array()) throw ConfigError(std::string(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(std::string(key) + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline SystemParams params_from_json(const Json& j, SystemParams p) {
    reject_unknown_keys(j, {"M", "rho", "q", "sigma2", "tau_p", "K", "P_a"}, "params");
    p.M = read_int32(j, "M", p.M);
    p.rho = read_real(j, "rho", p.rho);
    p.q = read_real(j, "q", p.q);
    p.sigma2 = read_real(j, "sigma2", p.sigma2);
    p.tau_p = read_int32(j, "tau_p", p.tau_p);
    p.K = read_int32(j, "K", p.K);
    p.P_a = read_real(j, "P_a", p.P_a);
    return p;
}

inline CellConfig cell_from_json(const Json& j, CellConfig c) {
    reject_unknown_keys(j,
                        {"radius", "min_distance_factor", "pathloss_exponent", "shadowing_std_db",
                         "cell_edge_snr_db"},
                        "cell");
    c.radius = read_real(j, "radius", c.radius);
    c.min_distance_factor = read_real(j, "min_distance_factor", c.min_distance_factor);
    c.pathloss_exponent = read_real(j, "pathloss_exponent", c.pathloss_exponent);
    c.shadowing_std_db = read_real(j, "shadowing_std_db", c.shadowing_std_db);
    c.cell_edge_snr_db = read_real(j, "cell_edge_snr_db", c.cell_edge_snr_db);
    return c;
}

}  // namespace detail

inline Json to_json(const SystemParams& p) {
    return {{"M", p.M}, {"rho", p.rho}, {"q", p.q}, {"sigma2", p.sigma2},
            {"tau_p", p.tau_p}, {"K", p.K}, {"P_a", p.P_a}};
}

inline Json to_json(const CellConfig& c) {
    return {{"radius", c.radius},
            {"min_distance_factor", c.min_distance_factor},
            {"pathloss_exponent", c.pathloss_exponent},
            {"shadowing_std_db", c.shadowing_std_db},
            {"cell_edge_snr_db", c.cell_edge_snr_db}};
}

inline Json to_json(const ExperimentConfig& cfg) {
    Json j;
    j["preset"] = to_string(cfg.preset);
    j["params"] = to_json(cfg.params);
    j["cell"] = cfg.cell ? to_json(*cfg.cell) : Json(nullptr);
    j["estimator"] = to_string(cfg.estimator);
    j["bias_grid"] = cfg.bias_grid;
    j["sweep_grid"] = cfg.sweep_grid;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["pa_grid"] = cfg.pa_grid;
    j["beta1_db"] = cfg.beta1_db;
    j["aggregation"] = to_string(cfg.aggregation);
    j["detection_beta_min"] = cfg.detection_beta_min ? Json(*cfg.detection_beta_min) : Json(nullptr);
    return j;
}

// Overlays j on base. A "preset" key must agree with base.preset; use
// config_from_json(j) to take the preset from the document itself.
inline ExperimentConfig config_from_json(const Json& j, const ExperimentConfig& base) {
    detail::reject_unknown_keys(j,
                                {"preset", "params", "cell", "estimator", "bias_grid", "sweep_grid", "trials",
                                 "seed", "pa_grid", "beta1_db", "aggregation", "detection_beta_min"},
                                "config");
    ExperimentConfig cfg = base;
    if (j.contains("preset")) {
        const auto p = parse_preset(detail::read_string(j, "preset", ""));
        if (!p) throw ConfigError("unknown preset '" + j.at("preset").dump() + "'");
        if (*p != base.preset)
            throw ConfigError("config preset " + to_string(*p) + " conflicts with requested " + to_string(base.preset));
    }
    if (j.contains("params")) cfg.params = detail::params_from_json(j.at("params"), cfg.params);
    if (j.contains("cell")) {
        if (j.at("cell").is_null()) cfg.cell.reset();
        else cfg.cell = detail::cell_from_json(j.at("cell"), cfg.cell.value_or(CellConfig{}));
    }
    if (j.contains("estimator")) {
        const auto k = parse_estimator_kind(detail::read_string(j, "estimator", ""));
        if (!k) throw ConfigError("unknown estimator " + j.at("estimator").dump());
        cfg.estimator = *k;
    }
    cfg.bias_grid = detail::read_reals(j, "bias_grid", cfg.bias_grid);
    cfg.sweep_grid = detail::read_reals(j, "sweep_grid", cfg.sweep_grid);
    cfg.trials = detail::read_int(j, "trials", cfg.trials);
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            throw ConfigError("seed must be a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    cfg.pa_grid = detail::read_reals(j, "pa_grid", cfg.pa_grid);
    cfg.beta1_db = detail::read_real(j, "beta1_db", cfg.beta1_db);
    if (j.contains("aggregation")) {
        const auto a = parse_aggregation(detail::read_string(j, "aggregation", ""));
        if (!a) throw ConfigError("unknown aggregation " + j.at("aggregation").dump());
        cfg.aggregation = *a;
    }
    if (j.contains("detection_beta_min")) {
        if (j.at("detection_beta_min").is_null()) cfg.detection_beta_min.reset();
        else cfg.detection_beta_min = detail::read_real(j, "detection_beta_min", 0.0);
    }
    return cfg;
}

inline ExperimentConfig config_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("preset")) throw ConfigError("config needs a preset");
    const auto p = parse_preset(detail::read_string(j, "preset", ""));
    if (!p) throw ConfigError("unknown preset " + j.at("preset").dump());
    return config_from_json(j, preset_config(*p));
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Loads and validates a config file. With a base, the file overrides it.
inline ExperimentConfig load_config(const std::string& path, std::optional<ExperimentConfig> base = std::nullopt) {
    const auto j = parse_json_text(read_text_file(path), path);
    auto cfg = base ? config_from_json(j, *base) : config_from_json(j);
    cfg.validate();
    return cfg;
}

}  // namespace sucr

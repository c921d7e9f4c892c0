#pragma once

// CSV and JSON serialisation of experiment results.

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sucr/config.hpp"
#include "sucr/experiment.hpp"

namespace sucr {

enum class OutputFormat { csv, json };

inline std::optional<OutputFormat> parse_output_format(std::string_view s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    return std::nullopt;
}

inline constexpr std::string_view kCsvHeader =
    "sweep_value,pa_used,p_resolved,p_false_positive,p_false_negative,ci_halfwidth,trials_effective";

// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_csv(const ExperimentResult& result) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : result.rows) {
        out += format_double(r.sweep_value);
        out += ',';
        if (r.pa_used) out += format_double(*r.pa_used);
        out += ',' + format_double(r.p_resolved);
        out += ',' + format_double(r.p_false_positive);
        out += ',' + format_double(r.p_false_negative);
        out += ',' + format_double(r.ci_halfwidth);
        out += ',' + std::to_string(r.trials_effective);
        out += '\n';
    }
    return out;
}

inline Json to_json(const ResultRow& r) {
    return {{"sweep_value", r.sweep_value},
            {"pa_used", r.pa_used ? Json(*r.pa_used) : Json(nullptr)},
            {"p_resolved", r.p_resolved},
            {"p_false_positive", r.p_false_positive},
            {"p_false_negative", r.p_false_negative},
            {"ci_halfwidth", r.ci_halfwidth},
            {"trials_effective", r.trials_effective},
            {"estimation_failures", r.estimation_failures},
            {"p_missed_detection", r.p_missed_detection ? Json(*r.p_missed_detection) : Json(nullptr)},
            {"resolved_per_pilot", r.resolved_per_pilot ? Json(*r.resolved_per_pilot) : Json(nullptr)}};
}

inline Json to_json(const ExperimentResult& result) {
    Json rows = Json::array();
    for (const auto& r : result.rows) rows.push_back(to_json(r));
    return {{"config", to_json(result.config)}, {"seed", result.config.seed}, {"rows", rows}};
}

inline ResultRow row_from_json(const Json& j) {
    detail::reject_unknown_keys(j,
                                {"sweep_value", "pa_used", "p_resolved", "p_false_positive", "p_false_negative",
                                 "ci_halfwidth", "trials_effective", "estimation_failures", "p_missed_detection",
                                 "resolved_per_pilot"},
                                "row");
    ResultRow r;
    r.sweep_value = j.at("sweep_value").get<double>();
    if (!j.at("pa_used").is_null()) r.pa_used = j.at("pa_used").get<double>();
    r.p_resolved = j.at("p_resolved").get<double>();
    r.p_false_positive = j.at("p_false_positive").get<double>();
    r.p_false_negative = j.at("p_false_negative").get<double>();
    r.ci_halfwidth = j.at("ci_halfwidth").get<double>();
    r.trials_effective = j.at("trials_effective").get<std::int64_t>();
    r.estimation_failures = j.at("estimation_failures").get<std::int64_t>();
    if (!j.at("p_missed_detection").is_null()) r.p_missed_detection = j.at("p_missed_detection").get<double>();
    if (!j.at("resolved_per_pilot").is_null()) r.resolved_per_pilot = j.at("resolved_per_pilot").get<double>();
    return r;
}

inline ExperimentResult result_from_json(const Json& j) {
    detail::reject_unknown_keys(j, {"config", "seed", "rows"}, "result");
    try {
        ExperimentResult result{config_from_json(j.at("config")), {}};
        for (const auto& r : j.at("rows")) result.rows.push_back(row_from_json(r));
        return result;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed result document: ") + e.what());
    }
}

inline std::string format_json(const ExperimentResult& result) { return to_json(result).dump(2) + "\n"; }

inline void emit_results(const ExperimentResult& result, const std::string& path, OutputFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << (format == OutputFormat::csv ? format_csv(result) : format_json(result));
    out.flush();
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace sucr

#pragma once

// JSON spec parsing (strict: unknown keys are rejected), the measure CSV
// format, and report serialization.
//
// Measure CSV: first line is a '#'-prefixed JSON header {alpha, lambda,
// source, trunc_error_hint, offspring_spec, measure_spec}, second line the
// column header "k,nu_k", then one row per retained coefficient with 17
// significant digits (lossless double round-trip). Whether k starts at 0 or
// 1 encodes includes_zero.

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "branching.hpp"
#include "construct.hpp"
#include "errors.hpp"
#include "montecarlo.hpp"
#include "selfsimilar.hpp"
#include "verify.hpp"

namespace bgw {

using nlohmann::json;

namespace detail {

inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& what) {
    if (!j.is_object()) throw invalid_config(what + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw invalid_config(what + ": unknown key \"" + key + "\"");
    }
}

inline double require_number(const json& j, const char* key, const std::string& what) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw invalid_config(what + ": missing numeric \"" + std::string(key) + "\"");
    return j.at(key).get<double>();
}

inline json parse_text(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw invalid_config(what + ": malformed JSON");
    return j;
}

inline std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

// ---------------------------------------------------------------------------
// offspring / measure specs
// ---------------------------------------------------------------------------

inline offspring_distribution parse_offspring_spec(const json& j) {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw invalid_config("offspring spec: expected {\"type\": ...}");
    const std::string type = j.at("type").get<std::string>();
    if (type == "pmf") {
        detail::require_keys(j, {"type", "p"}, "offspring spec");
        if (!j.contains("p") || !j.at("p").is_array())
            throw invalid_config("offspring spec: \"pmf\" needs an array \"p\"");
        std::vector<double> p;
        for (const auto& v : j.at("p")) {
            if (!v.is_number()) throw invalid_config("offspring spec: non-numeric pmf entry");
            p.push_back(v.get<double>());
        }
        return offspring_distribution(std::move(p));
    }
    if (type == "pure_death") {
        detail::require_keys(j, {"type", "m"}, "offspring spec");
        return offspring_distribution::pure_death(
            detail::require_number(j, "m", "offspring spec"));
    }
    if (type == "geometric") {
        detail::require_keys(j, {"type", "b"}, "offspring spec");
        return offspring_distribution::geometric(
            detail::require_number(j, "b", "offspring spec"));
    }
    throw invalid_config("offspring spec: unknown type \"" + type + "\"");
}

inline offspring_distribution parse_offspring_spec(const std::string& text) {
    return parse_offspring_spec(detail::parse_text(text, "offspring spec"));
}

// The ratio m is not part of the measure spec; it is inherited from the
// offspring law.
inline self_similar_measure parse_measure_spec(const json& j, double m) {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw invalid_config("measure spec: expected {\"type\": ...}");
    const std::string type = j.at("type").get<std::string>();
    if (type == "log_uniform") {
        detail::require_keys(j, {"type", "c"}, "measure spec");
        return self_similar_measure::log_uniform(m,
                                                 detail::require_number(j, "c", "measure spec"));
    }
    if (type == "atoms") {
        detail::require_keys(j, {"type", "atoms"}, "measure spec");
        if (!j.contains("atoms") || !j.at("atoms").is_array())
            throw invalid_config("measure spec: \"atoms\" needs an array of [x, w] pairs");
        std::vector<std::pair<double, double>> atoms;
        for (const auto& a : j.at("atoms")) {
            if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
                throw invalid_config("measure spec: each atom must be [position, weight]");
            atoms.emplace_back(a[0].get<double>(), a[1].get<double>());
        }
        return self_similar_measure::from_atoms(m, std::move(atoms));
    }
    if (type == "log_density") {
        detail::require_keys(j, {"type", "cells"}, "measure spec");
        if (!j.contains("cells") || !j.at("cells").is_array())
            throw invalid_config("measure spec: \"log_density\" needs an array \"cells\"");
        std::vector<double> cells;
        for (const auto& v : j.at("cells")) {
            if (!v.is_number()) throw invalid_config("measure spec: non-numeric cell");
            cells.push_back(v.get<double>());
        }
        return self_similar_measure::from_log_density(m, std::move(cells));
    }
    throw invalid_config("measure spec: unknown type \"" + type + "\"");
}

inline self_similar_measure parse_measure_spec(const std::string& text, double m) {
    return parse_measure_spec(detail::parse_text(text, "measure spec"), m);
}

// ---------------------------------------------------------------------------
// measure CSV
// ---------------------------------------------------------------------------

inline void write_measure_csv(std::ostream& os, const invariant_measure& nu,
                              const json& offspring_spec, const json& measure_spec) {
    json header;
    header["alpha"] = nu.alpha;
    header["lambda"] = nu.lambda;
    header["source"] = nu.source.to_string();
    header["trunc_error_hint"] = nu.trunc_error_hint;
    header["offspring_spec"] = offspring_spec;
    header["measure_spec"] = measure_spec;
    os << "# " << header.dump() << "\n";
    os << "k,nu_k\n";
    const std::size_t k_min = nu.includes_zero ? 0 : 1;
    for (std::size_t k = k_min; k < nu.nu.size(); ++k)
        os << k << "," << detail::format17(nu.nu[k]) << "\n";
}

struct measure_csv {
    invariant_measure nu;
    json header;
};

inline measure_source parse_source_string(const std::string& s) {
    measure_source src;
    if (s.rfind("closed_form", 0) == 0) {
        src.kind = measure_kind::closed_form;
        if (s.find("qsd_power") != std::string::npos)
            src.form = closed_form_kind::qsd_power;
        else if (s.find("negative_power") != std::string::npos)
            src.form = closed_form_kind::negative_power;
        else
            src.form = closed_form_kind::log;
    } else if (s.rfind("extremal", 0) == 0) {
        src.kind = measure_kind::extremal;
        const auto eq = s.find("t=");
        if (eq != std::string::npos) src.t = std::strtod(s.c_str() + eq + 2, nullptr);
    } else {
        src.kind = measure_kind::integral;
    }
    return src;
}

inline measure_csv read_measure_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
        throw invalid_config("measure csv: missing '# {json}' header line");
    measure_csv out;
    out.header = detail::parse_text(line.substr(2), "measure csv header");
    if (!std::getline(is, line) || line.rfind("k,nu_k", 0) != 0)
        throw invalid_config("measure csv: missing 'k,nu_k' column header");

    std::vector<std::pair<std::size_t, double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t k = 0;
        double v = 0.0;
        char* end = nullptr;
        k = std::strtoull(line.c_str(), &end, 10);
        if (end == nullptr || *end != ',')
            throw invalid_config("measure csv: malformed row \"" + line + "\"");
        v = std::strtod(end + 1, nullptr);
        rows.emplace_back(k, v);
    }
    if (rows.empty()) throw invalid_config("measure csv: no data rows");

    std::size_t k_max = 0;
    for (const auto& [k, v] : rows) k_max = std::max(k_max, k);
    out.nu.nu.assign(k_max + 1, 0.0);
    for (const auto& [k, v] : rows) out.nu.nu[k] = v;
    out.nu.includes_zero = rows.front().first == 0;
    out.nu.alpha = detail::require_number(out.header, "alpha", "measure csv header");
    out.nu.lambda = detail::require_number(out.header, "lambda", "measure csv header");
    if (out.header.contains("trunc_error_hint") && out.header["trunc_error_hint"].is_number())
        out.nu.trunc_error_hint = out.header["trunc_error_hint"].get<double>();
    if (out.header.contains("source") && out.header["source"].is_string())
        out.nu.source = parse_source_string(out.header["source"].get<std::string>());
    return out;
}

// ---------------------------------------------------------------------------
// report JSON
// ---------------------------------------------------------------------------

inline json report_to_json(const verification_report& rep) {
    json j;
    j["check_name"] = rep.check_name;
    j["residual"] = rep.residual;
    j["tolerance"] = rep.tolerance;
    j["passed"] = rep.passed;
    j["details"] = rep.details;
    json ex = json::object();
    for (const auto& [k, v] : rep.extras) ex[k] = v;
    j["extras"] = ex;
    return j;
}

inline json mc_report_to_json(const mc_report& rep) {
    json j;
    j["n_samples"] = rep.n_samples;
    j["seed"] = rep.seed;
    j["tv_distance"] = rep.tv_distance;
    j["chi2_stat"] = rep.chi2_stat;
    j["empirical_pmf"] = rep.empirical_pmf;
    j["empirical_overflow"] = rep.empirical_overflow;
    j["reference_pmf"] = rep.reference_pmf;
    j["reference_overflow"] = rep.reference_overflow;
    json ex = json::object();
    for (const auto& [k, v] : rep.extras) ex[k] = v;
    j["extras"] = ex;
    return j;
}

} // namespace bgw

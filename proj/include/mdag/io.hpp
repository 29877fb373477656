#ifndef MDAG_IO_HPP
#define MDAG_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "data.hpp"
#include "engine.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "model.hpp"

namespace mdag {

using json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    if (line.empty()) out.emplace_back();
    return out;
}

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Header row of variable names, one case per row, empty cell = missing.
/// Rows with no observed value are dropped.
inline Dataset read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    Dataset out;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (detail::trim(line).empty()) continue;
            for (auto& name : detail::split(line, ',')) out.names.push_back(detail::trim(name));
            have_header = true;
            continue;
        }
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split(line, ',');
        if (cells.size() != out.names.size())
            throw Error(ErrorCode::RaggedRow, "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                                  " cells, header has " + std::to_string(out.names.size()));
        std::vector<double> row;
        bool any = false;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const auto cell = detail::trim(cells[j]);
            if (cell.empty()) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            double v = 0.0;
            const char* first = cell.data();
            if (*first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw Error(ErrorCode::NonNumericCell,
                            "line " + std::to_string(line_no) + ", column " + std::to_string(j + 1) + ": '" + cell + "'");
            row.push_back(v);
            any = true;
        }
        if (any) rows.push_back(std::move(row));
    }
    if (!have_header) throw Error(ErrorCode::EmptyFile, "no header row");
    out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < rows[r].size(); ++j) out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
    return out;
}

inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    return read_csv(in);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t j = 0; j < data.names.size(); ++j) out << (j ? "," : "") << data.names[j];
    out << '\n';
    for (Eigen::Index r = 0; r < data.cases(); ++r) {
        for (Eigen::Index j = 0; j < data.dims(); ++j) {
            if (j) out << ',';
            if (data.observed(r, j)) out << detail::format_real(data.values(r, j));
        }
        out << '\n';
    }
}

inline void save_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    write_csv(out, data);
}

inline json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) out[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
    return out;
}

inline json to_json(const DagStructure& s) { return json(s.parent_lists()); }

inline json to_json(const MdagModel& model) {
    json comps = json::array();
    for (const auto& g : model.components()) {
        json coef = json::array();
        for (const auto& b : g.coefficients()) coef.push_back(to_json(b));
        comps.push_back({{"parents", to_json(g.structure())},
                         {"intercept", to_json(g.intercept())},
                         {"coefficients", coef},
                         {"variance", to_json(g.variance())}});
    }
    json out = {{"weights", to_json(model.weights())}, {"components", comps}};
    out["noise"] = model.noise() ? json{{"lower", to_json(model.noise()->lower)}, {"upper", to_json(model.noise()->upper)}} : json(nullptr);
    return out;
}

inline MdagModel model_from_json(const json& j) {
    std::vector<GaussianDag> comps;
    for (const auto& c : j.at("components")) {
        const auto parents = c.at("parents").get<std::vector<std::vector<int>>>();
        std::vector<Eigen::VectorXd> coef;
        for (const auto& b : c.at("coefficients")) coef.push_back(vector_from_json(b));
        comps.emplace_back(DagStructure(static_cast<int>(parents.size()), parents), vector_from_json(c.at("intercept")),
                           std::move(coef), vector_from_json(c.at("variance")));
    }
    std::optional<NoiseComponent> noise;
    if (j.contains("noise") && !j.at("noise").is_null())
        noise = NoiseComponent(vector_from_json(j.at("noise").at("lower")), vector_from_json(j.at("noise").at("upper")));
    return MdagModel(vector_from_json(j.at("weights")), std::move(comps), std::move(noise));
}

/// Serialized model plus free-form fit metadata.
struct ModelFile {
    MdagModel model;
    std::vector<std::string> variables;
    json metadata = json::object();
};

inline json to_json(const ModelFile& file) {
    json out = {{"format", "mdag-model"}, {"format_version", kModelFormatVersion}, {"variables", file.variables}};
    out["model"] = to_json(file.model);
    out["metadata"] = file.metadata;
    return out;
}

inline void write_model(std::ostream& out, const ModelFile& file) { out << to_json(file).dump(2) << '\n'; }

inline void save_model(const std::string& path, const ModelFile& file) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    write_model(out, file);
}

inline ModelFile read_model(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "mdag-model") throw Error(ErrorCode::CorruptFile, "not an mdag model file");
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw Error(ErrorCode::VersionMismatch,
                        "model format version " + std::to_string(version) + ", expected " + std::to_string(kModelFormatVersion));
        ModelFile out{model_from_json(j.at("model")), j.at("variables").get<std::vector<std::string>>(), j.value("metadata", json::object())};
        if (static_cast<int>(out.variables.size()) != out.model.dims()) throw Error(ErrorCode::CorruptFile, "variable names do not match the model");
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, std::string("model file is malformed: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::CorruptFile) throw;
        throw Error(ErrorCode::CorruptFile, std::string("model file holds an invalid model: ") + e.what());
    }
}

inline ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    return read_model(in);
}

/// "lo:hi" applied to every variable, or one "lo:hi" per variable separated by commas.
inline NoiseComponent parse_noise_bounds(const std::string& text, int n) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& part : detail::split(text, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::InvalidConfig, "noise bounds need lo:hi, got '" + part + "'");
        try {
            pairs.emplace_back(std::stod(part.substr(0, colon)), std::stod(part.substr(colon + 1)));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidConfig, "noise bound is not a number: '" + part + "'");
        }
    }
    if (pairs.size() != 1 && static_cast<int>(pairs.size()) != n)
        throw Error(ErrorCode::InvalidConfig, "expected 1 or " + std::to_string(n) + " noise bound pairs");
    Eigen::VectorXd lo(n), hi(n);
    for (int j = 0; j < n; ++j) {
        const auto& p = pairs.size() == 1 ? pairs[0] : pairs[static_cast<std::size_t>(j)];
        lo[j] = p.first;
        hi[j] = p.second;
    }
    try {
        return NoiseComponent(lo, hi);
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
}

inline json to_json(const FitConfig& c) {
    json prior = {{"nu", c.prior.nu}, {"tau_scale", c.prior.tau_scale}, {"noise_alpha", c.prior.noise_alpha}};
    if (c.prior.mu0) prior["mu0"] = to_json(*c.prior.mu0);
    if (c.prior.alpha) prior["alpha"] = *c.prior.alpha;
    if (c.prior.gaussian_alpha_total) prior["gaussian_alpha_total"] = *c.prior.gaussian_alpha_total;
    json out = {{"k", c.k},
                {"prior", prior},
                {"ess", c.ess},
                {"convergence_ratio", c.convergence_ratio},
                {"seed", c.seed},
                {"schedule", c.schedule.to_string()},
                {"weight_init", to_string(c.weight_init)},
                {"max_outer_iterations", c.max_outer_iterations},
                {"max_em_steps", c.max_em_steps},
                {"family", to_string(c.family)},
                {"trace_search_scores", c.trace_search_scores}};
    out["noise"] = c.noise ? json{{"lower", to_json(c.noise->lower)}, {"upper", to_json(c.noise->upper)}} : json(nullptr);
    out["max_parents"] = c.max_parents ? json(*c.max_parents) : json(nullptr);
    return out;
}

/// Config keys mirror FitConfig fields; unknown keys are rejected.
inline FitConfig config_from_json(const json& j, int n) {
    static const std::set<std::string> known{"k", "noise", "prior", "ess", "convergence_ratio", "seed", "schedule", "weight_init",
                                             "max_outer_iterations", "max_em_steps", "family", "max_parents", "trace_search_scores"};
    static const std::set<std::string> known_prior{"nu", "mu0", "alpha", "tau_scale", "noise_alpha", "gaussian_alpha_total"};
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    FitConfig c;
    try {
        if (j.contains("k")) c.k = j.at("k").get<int>();
        if (j.contains("noise") && !j.at("noise").is_null()) {
            const auto& nb = j.at("noise");
            if (nb.is_string())
                c.noise = parse_noise_bounds(nb.get<std::string>(), n);
            else
                c.noise = NoiseComponent(vector_from_json(nb.at("lower")), vector_from_json(nb.at("upper")));
        }
        if (j.contains("prior")) {
            const auto& p = j.at("prior");
            for (const auto& [key, _] : p.items())
                if (!known_prior.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown prior key '" + key + "'");
            if (p.contains("nu")) c.prior.nu = p.at("nu").get<double>();
            if (p.contains("mu0")) c.prior.mu0 = vector_from_json(p.at("mu0"));
            if (p.contains("alpha")) c.prior.alpha = p.at("alpha").get<double>();
            if (p.contains("tau_scale")) c.prior.tau_scale = p.at("tau_scale").get<double>();
            if (p.contains("noise_alpha")) c.prior.noise_alpha = p.at("noise_alpha").get<double>();
            if (p.contains("gaussian_alpha_total")) c.prior.gaussian_alpha_total = p.at("gaussian_alpha_total").get<double>();
        }
        if (j.contains("ess")) c.ess = j.at("ess").get<double>();
        if (j.contains("convergence_ratio")) c.convergence_ratio = j.at("convergence_ratio").get<double>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("schedule")) c.schedule = Schedule::parse(j.at("schedule").get<std::string>());
        if (j.contains("weight_init")) c.weight_init = parse_weight_init(j.at("weight_init").get<std::string>());
        if (j.contains("max_outer_iterations")) c.max_outer_iterations = j.at("max_outer_iterations").get<int>();
        if (j.contains("max_em_steps")) c.max_em_steps = j.at("max_em_steps").get<int>();
        if (j.contains("family")) c.family = parse_family(j.at("family").get<std::string>());
        if (j.contains("max_parents") && !j.at("max_parents").is_null()) c.max_parents = j.at("max_parents").get<int>();
        if (j.contains("trace_search_scores")) c.trace_search_scores = j.at("trace_search_scores").get<bool>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("bad config value: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidConfig) throw;
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
    c.validate();
    return c;
}

inline FitConfig load_config(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j, n);
}

inline json to_json(const FitResult& r) {
    json trace = json::array();
    for (const auto& it : r.trace) {
        json structs = json::array();
        for (const auto& s : it.structures) structs.push_back(to_json(s));
        trace.push_back({{"em_steps", it.em_steps},
                         {"forced_convergence", it.forced_convergence},
                         {"observed_loglik", it.observed_loglik},
                         {"complete_score", it.complete_score},
                         {"cheeseman_stutz", it.cheeseman_stutz},
                         {"structure_changed", it.structure_changed},
                         {"structures", structs}});
    }
    return {{"termination", to_string(r.termination)},
            {"best_iteration", r.best_iteration},
            {"cheeseman_stutz", r.cheeseman_stutz},
            {"ecmss_computations", r.ecmss_computations},
            {"warnings", r.warnings},
            {"trace", trace}};
}

inline json to_json(const RecoveryReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows)
        rows.push_back({{"sample_size", row.sample_size},
                        {"k", row.k},
                        {"top3_weight", row.top3_weight},
                        {"arc_differences", row.match.differences},
                        {"matched_gold", row.match.gold},
                        {"total_arc_difference", row.match.total},
                        {"cheeseman_stutz", row.cheeseman_stutz}});
    return {{"format", "mdag-recovery-report"}, {"format_version", kModelFormatVersion}, {"rows", rows}};
}

inline json to_json(const ComparisonReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows)
        rows.push_back({{"family", to_string(row.family)},
                        {"k", row.k},
                        {"predictive_score", row.predictive},
                        {"cheeseman_stutz", row.cheeseman_stutz},
                        {"parameters", row.parameters}});
    return {{"format", "mdag-comparison-report"}, {"format_version", kModelFormatVersion}, {"rows", rows}};
}

}  // namespace mdag

#endif  // MDAG_IO_HPP

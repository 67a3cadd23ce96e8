#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "independence.hpp"
#include "kernel_operator.hpp"
#include "lemma_battery.hpp"
#include "mixed_distribution.hpp"

// Text formats: distribution literals, experiment configs and reports.
//
// A distribution literal is a JSON object
//     {"atoms": [[loc, mass], ...], "pieces": [[lower, upper, mass], ...]}
// (either key may be omitted) or one of the shorthands
//     uniform01       uniform on (0, 1)
//     bern07          atoms {(0, 0.3), (1, 0.7)}
//     degenerate@<x>  point mass at x
// Configs and reports are JSON objects carrying "schema_version".

namespace brockwell::io {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

// Malformed text, with a 1-based position when one is known.
class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : error(line ? what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")" : what),
          line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

inline json parse_json(std::string_view text, const std::string& what = "input") {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character
        std::size_t line = 1, column = 1;
        const std::size_t stop = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw parse_error("cannot parse " + what + ": " + e.what(), line, column);
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline double parse_number(std::string_view s, const std::string& context) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw parse_error("not a number in " + context + ": '" + std::string(s) + "'");
    return v;
}

inline double number_at(const json& arr, std::size_t i, const std::string& context) {
    if (!arr.is_array() || i >= arr.size() || !arr[i].is_number())
        throw parse_error(context + ": expected a number at position " + std::to_string(i));
    return arr[i].get<double>();
}

} // namespace detail

inline mixed_distribution distribution_from_json(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "uniform01") return mixed_distribution::uniform();
        if (s == "bern07") return {{{0.0, 0.3}, {1.0, 0.7}}, {}};
        if (s.rfind("degenerate@", 0) == 0)
            return mixed_distribution::point_mass(detail::parse_number(std::string_view(s).substr(11), s));
        throw parse_error("unknown distribution shorthand '" + s + "'");
    }
    if (!j.is_object()) throw parse_error("distribution literal must be an object or a shorthand name");
    for (const auto& [key, value] : j.items())
        if (key != "atoms" && key != "pieces") throw parse_error("unknown key '" + key + "' in distribution literal");
    std::vector<atom> atoms;
    std::vector<piece> pieces;
    if (j.contains("atoms")) {
        if (!j["atoms"].is_array()) throw parse_error("'atoms' must be an array");
        for (const auto& a : j["atoms"]) {
            if (!a.is_array() || a.size() != 2) throw parse_error("each atom must be [location, mass]");
            atoms.push_back({detail::number_at(a, 0, "atom"), detail::number_at(a, 1, "atom")});
        }
    }
    if (j.contains("pieces")) {
        if (!j["pieces"].is_array()) throw parse_error("'pieces' must be an array");
        for (const auto& p : j["pieces"]) {
            if (!p.is_array() || p.size() != 3) throw parse_error("each piece must be [lower, upper, mass]");
            pieces.push_back({detail::number_at(p, 0, "piece"), detail::number_at(p, 1, "piece"),
                              detail::number_at(p, 2, "piece")});
        }
    }
    return {std::move(atoms), std::move(pieces)};
}

inline json to_json(const mixed_distribution& d) {
    json atoms = json::array(), pieces = json::array();
    for (const auto& a : d.atoms()) atoms.push_back({a.location, a.mass});
    for (const auto& p : d.pieces()) pieces.push_back({p.lower, p.upper, p.mass});
    return {{"atoms", atoms}, {"pieces", pieces}};
}

inline std::string to_literal(const mixed_distribution& d) { return to_json(d).dump(); }

// A literal, a shorthand, or the path of a file holding a literal.
inline mixed_distribution parse_distribution(std::string_view text) {
    const auto t = detail::trim(text);
    if (t.empty()) throw parse_error("empty distribution literal");
    if (t.front() == '{' || t.front() == '[') return distribution_from_json(parse_json(t, "distribution literal"));
    if (t == "uniform01" || t == "bern07" || t.rfind("degenerate@", 0) == 0)
        return distribution_from_json(json(std::string(t)));
    std::ifstream probe{std::string(t)};
    if (probe) return distribution_from_json(parse_json(read_file(std::string(t)), std::string(t)));
    throw parse_error("'" + std::string(t) + "' is neither a distribution literal, a shorthand, nor a readable file");
}

inline conditional_family family_from_json(const json& j) {
    if (!j.is_array()) throw parse_error("conditional family must be an array of [x3, distribution] pairs");
    std::vector<std::pair<double, mixed_distribution>> laws;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number())
            throw parse_error("conditional family entries must be [x3, distribution]");
        laws.emplace_back(e[0].get<double>(), distribution_from_json(e[1]));
    }
    return conditional_family(std::move(laws));
}

inline json to_json(const conditional_family& fam) {
    json out = json::array();
    for (const auto& [x3, law] : fam.entries()) out.push_back({x3, to_json(law)});
    return out;
}

namespace detail {

inline dependence dependence_from_string(const std::string& s, const char* field) {
    if (s == "none") return dependence::none;
    if (s == "comonotone") return dependence::comonotone;
    if (s == "gaussian" || s == "custom-copula") return dependence::gaussian;
    throw parse_error(std::string("invalid config field ") + field + ": unknown dependence '" + s + "'");
}

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw parse_error("invalid config field " + key + ": unknown key");
    }
}

template <typename T>
T field(const json& j, const char* name, T fallback) {
    if (!j.contains(name)) return fallback;
    try {
        return j[name].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw parse_error(std::string("invalid config field ") + name + ": wrong type");
    }
}

inline mixed_distribution dist_field(const json& j, const char* name, mixed_distribution fallback) {
    if (!j.contains(name)) return fallback;
    try {
        return distribution_from_json(j[name]);
    } catch (const error& e) {
        throw parse_error(std::string("invalid config field ") + name + ": " + e.what());
    }
}

inline void check_schema(const json& j) {
    if (!j.is_object()) throw parse_error("config must be a JSON object");
    if (j.contains("schema_version") && j["schema_version"] != schema_version)
        throw parse_error("unsupported schema_version " + j["schema_version"].dump());
}

} // namespace detail

inline corollary1_config corollary1_from_json(const json& j) {
    detail::check_schema(j);
    detail::check_keys(j, {"schema_version", "experiment", "dist_x", "dist_y", "dist_hx", "dist_hy", "dependence",
                           "copula_rho", "n_samples", "n_replicates", "n_perm", "alpha", "seed", "threads"});
    corollary1_config c;
    c.dist_x = detail::dist_field(j, "dist_x", c.dist_x);
    c.dist_y = detail::dist_field(j, "dist_y", c.dist_y);
    c.dist_hx = detail::dist_field(j, "dist_hx", c.dist_hx);
    c.dist_hy = detail::dist_field(j, "dist_hy", c.dist_hy);
    c.mode = detail::dependence_from_string(detail::field<std::string>(j, "dependence", "none"), "dependence");
    c.copula_rho = detail::field(j, "copula_rho", c.copula_rho);
    c.n_samples = detail::field(j, "n_samples", c.n_samples);
    c.n_replicates = detail::field(j, "n_replicates", c.n_replicates);
    c.n_perm = detail::field(j, "n_perm", c.n_perm);
    c.alpha = detail::field(j, "alpha", c.alpha);
    c.seed = detail::field(j, "seed", c.seed);
    c.threads = detail::field(j, "threads", c.threads);
    return c;
}

inline corollary2_config corollary2_from_json(const json& j) {
    detail::check_schema(j);
    detail::check_keys(j, {"schema_version", "experiment", "family_1", "family_2", "dist_x3",
                           "conditional_dependence", "n_samples", "n_replicates", "n_perm", "alpha", "seed",
                           "threads"});
    corollary2_config c;
    try {
        if (j.contains("family_1")) c.family_1 = family_from_json(j["family_1"]);
        if (j.contains("family_2")) c.family_2 = family_from_json(j["family_2"]);
    } catch (const error& e) {
        throw parse_error(std::string("invalid config field family: ") + e.what());
    }
    c.dist_x3 = detail::dist_field(j, "dist_x3", c.dist_x3);
    c.mode = detail::dependence_from_string(detail::field<std::string>(j, "conditional_dependence", "none"),
                                            "conditional_dependence");
    c.n_samples = detail::field(j, "n_samples", c.n_samples);
    c.n_replicates = detail::field(j, "n_replicates", c.n_replicates);
    c.n_perm = detail::field(j, "n_perm", c.n_perm);
    c.alpha = detail::field(j, "alpha", c.alpha);
    c.seed = detail::field(j, "seed", c.seed);
    c.threads = detail::field(j, "threads", c.threads);
    return c;
}

inline json to_json(const test_report& t) {
    return {{"statistic", t.statistic},
            {"p_value", t.p_value},
            {"n_permutations", t.n_permutations},
            {"seed", t.seed},
            {"n_samples", t.n_samples}};
}

inline json to_json(const uniqueness_report& r) {
    json j = {{"schema_version", schema_version},
              {"rank", r.rank},
              {"null_space_dim", r.null_space_dim},
              {"kappa0_residual", r.kappa0_residual},
              {"grid_size", r.grid_size}};
    if (r.refined_null_space_dim) {
        j["refined_grid_size"] = r.refined_grid_size;
        j["refined_null_space_dim"] = *r.refined_null_space_dim;
    }
    j["verdict"] = r.verdict;
    return j;
}

inline json to_json(const battery_report& r) {
    json claims = json::array();
    for (const auto& c : r.claims) claims.push_back({{"claim", c.name}, {"checks", c.checks}, {"failures", c.failures}});
    json failing = json::array();
    for (const auto& d : r.failing) failing.push_back(to_literal(d));
    return {{"schema_version", schema_version},
            {"n_distributions", r.n_distributions},
            {"passed", r.passed()},
            {"claims", claims},
            {"failing_literals", failing}};
}

// Summary record. Per-replicate p-values are kept out of the summary; see
// p_value_csv.
inline json summary_json(const std::string& experiment, const json& config_echo, const experiment_summary& s,
                         double alpha) {
    json rates = json::object();
    for (std::size_t t = 0; t < s.test_names.size(); ++t) rates[s.test_names[t]] = s.rejection_rates[t];
    json mean_stat = json::object();
    for (std::size_t t = 0; t < s.test_names.size(); ++t) {
        double acc = 0.0;
        for (const auto& r : s.replicates) acc += r.tests[t].statistic;
        mean_stat[s.test_names[t]] = acc / static_cast<double>(std::max<std::size_t>(1, s.replicates.size()));
    }
    return {{"schema_version", schema_version}, {"experiment", experiment},  {"config", config_echo},
            {"alpha", alpha},                   {"rejection_rates", rates}, {"mean_statistic", mean_stat}};
}

inline json echo(const corollary1_config& c) {
    return {{"dist_x", to_json(c.dist_x)},   {"dist_y", to_json(c.dist_y)},
            {"dist_hx", to_json(c.dist_hx)}, {"dist_hy", to_json(c.dist_hy)},
            {"dependence", to_string(c.mode)}, {"copula_rho", c.copula_rho},
            {"n_samples", c.n_samples},      {"n_replicates", c.n_replicates},
            {"n_perm", c.n_perm},            {"seed", c.seed}};
}

inline json echo(const corollary2_config& c) {
    return {{"family_1", to_json(c.family_1)},
            {"family_2", to_json(c.family_2)},
            {"dist_x3", to_json(c.dist_x3)},
            {"conditional_dependence", to_string(c.mode)},
            {"n_samples", c.n_samples},
            {"n_replicates", c.n_replicates},
            {"n_perm", c.n_perm},
            {"seed", c.seed}};
}

// One row per replicate: replicate index, sub-seed and p-value of each test.
inline std::string p_value_csv(const experiment_summary& s) {
    std::ostringstream out;
    out << "replicate";
    for (const auto& n : s.test_names) out << ',' << n << "_seed," << n << "_p";
    out << '\n';
    for (std::size_t r = 0; r < s.replicates.size(); ++r) {
        out << r;
        for (const auto& t : s.replicates[r].tests) {
            char buf[64];
            const auto res = std::to_chars(buf, buf + sizeof buf, t.p_value);
            out << ',' << t.seed << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
    return out.str();
}

// One numeric column from CSV text. `column` is a header name or a 0-based
// index; a first row that does not parse as numbers is taken as the header.
inline std::vector<double> read_csv_column(std::string_view text, const std::string& column = "0") {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = detail::trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t c = 0;
        while (true) {
            const auto comma = line.find(',', c);
            cells.emplace_back(detail::trim(line.substr(c, comma == std::string_view::npos ? line.npos : comma - c)));
            if (comma == std::string_view::npos) break;
            c = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw parse_error("CSV input has no rows");

    auto numeric = [](const std::string& s) {
        double v;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
    };
    bool header = false;
    for (const auto& cell : rows.front()) header = header || !numeric(cell);

    std::size_t index = 0;
    bool by_index = !column.empty() && std::all_of(column.begin(), column.end(), [](char ch) {
        return std::isdigit(static_cast<unsigned char>(ch));
    });
    if (by_index) {
        index = std::stoul(column);
    } else {
        if (!header) throw parse_error("CSV has no header; select the column by index");
        const auto& h = rows.front();
        const auto it = std::find(h.begin(), h.end(), column);
        if (it == h.end()) throw parse_error("CSV has no column named '" + column + "'");
        index = static_cast<std::size_t>(it - h.begin());
    }

    std::vector<double> out;
    for (std::size_t r = header ? 1 : 0; r < rows.size(); ++r) {
        if (index >= rows[r].size())
            throw parse_error("CSV row has no column " + std::to_string(index), r + 1, 1);
        if (!numeric(rows[r][index]))
            throw parse_error("CSV value '" + rows[r][index] + "' is not a number", r + 1, index + 1);
        out.push_back(detail::parse_number(rows[r][index], "CSV"));
    }
    return out;
}

} // namespace brockwell::io

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <brockwell/brockwell.hpp>
#include <brockwell/io.hpp>

namespace {

using namespace brockwell;
using io::json;

constexpr int exit_ok = 0;
constexpr int exit_verdict = 1;
constexpr int exit_usage = 2;

const char* shorthand_help =
    "Distributions are JSON literals {\"atoms\": [[x, p], ...], \"pieces\": [[lo, hi, p], ...]},\n"
    "a path to a file holding one, or a shorthand:\n"
    "  uniform01       {\"pieces\": [[0, 1, 1]]}\n"
    "  bern07          {\"atoms\": [[0, 0.3], [1, 0.7]]}\n"
    "  degenerate@<x>  {\"atoms\": [[x, 1]]}\n"
    "Set BROCKWELL_LOG to error, info (default) or debug.";

enum class log_level { error = 0, info = 1, debug = 2 };

log_level current_level() {
    static const log_level level = [] {
        const char* env = std::getenv("BROCKWELL_LOG");
        const std::string v = env ? env : "info";
        if (v == "error") return log_level::error;
        if (v == "debug") return log_level::debug;
        if (v != "info") std::cerr << "[error] BROCKWELL_LOG='" << v << "' not recognized, using info\n";
        return log_level::info;
    }();
    return level;
}

void log(log_level level, const std::string& msg) {
    if (level > current_level()) return;
    static const char* names[] = {"error", "info", "debug"};
    std::cerr << '[' << names[static_cast<int>(level)] << "] " << msg << '\n';
}

class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Destination of report records. Files are only ever appended to; an
// existing file must be acknowledged with --force.
struct sink {
    std::string path;
    bool force = false;

    void check() const { check_path(path); }

    void check_path(const std::string& p) const {
        if (!p.empty() && std::filesystem::exists(p) && !force)
            throw usage_error(p + " already exists; pass --force to append to it");
    }

    void write(const std::string& text) const { write_to(path, text); }

    void write_to(const std::string& p, const std::string& text) const {
        if (p.empty()) {
            std::cout << text << std::flush;
            return;
        }
        std::ofstream out(p, std::ios::binary | std::ios::app);
        if (!out) throw usage_error("cannot write " + p);
        out << text;
        log(log_level::info, "wrote " + p);
    }
};

void add_sink_options(CLI::App* cmd, sink& s) {
    cmd->add_option("--out", s.path, "Append the report to this file instead of stdout");
    cmd->add_flag("--force", s.force, "Allow --out (and --csv) to name an existing file");
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::optional<std::uint64_t> config = {}) {
    if (flag) return *flag;
    if (config) return *config;
    log(log_level::info, "no seed given; using default seed 0");
    return 0;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto cell = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (io::detail::trim(cell.substr(used)).size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw io::parse_error("--grid: '" + cell + "' is not a number", 1, start + 1);
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// Dirichlet(1, ..., 1) draw.
std::vector<double> random_nu(std::size_t k, rng_type& rng) {
    std::vector<double> nu(k);
    double total = 0.0;
    for (auto& v : nu) total += v = -std::log(uniform_open01(rng));
    for (auto& v : nu) v /= total;
    return nu;
}

struct transform_args {
    std::string dist_f, dist_h = "uniform01", input, column = "0", csv;
    std::vector<double> x, u;
    std::optional<std::uint64_t> seed;
    sink out;
};

int run_transform(const transform_args& a) {
    const transform_spec spec(io::parse_distribution(a.dist_f), io::parse_distribution(a.dist_h));
    std::vector<double> xs = a.x;
    if (!a.input.empty()) {
        if (!xs.empty()) throw usage_error("give either --x or --input, not both");
        xs = io::read_csv_column(io::read_file(a.input), a.column);
    }
    if (xs.empty()) throw usage_error("transform needs --x or --input");
    a.out.check();
    a.out.check_path(a.csv);

    std::vector<double> us = a.u;
    json rec = {{"schema_version", io::schema_version}};
    if (us.empty()) {
        const auto seed = resolve_seed(a.seed);
        auto rng = make_rng(seed, 0, stream::aux_1);
        us = sample_n(spec.h(), xs.size(), rng);
        rec["seed"] = seed;
    }
    const auto zs = transform_samples(spec, xs, us);
    rec["x"] = xs;
    rec["u"] = us;
    rec["z"] = zs;
    a.out.write(rec.dump() + "\n");
    if (!a.csv.empty()) {
        std::string text = "x,u,z\n";
        for (std::size_t i = 0; i < xs.size(); ++i)
            text += json(xs[i]).dump() + "," + json(us[i]).dump() + "," + json(zs[i]).dump() + "\n";
        a.out.write_to(a.csv, text);
    }
    return exit_ok;
}

struct law_args {
    std::string dist_f, dist_h = "uniform01";
    bool jumps = false;
    sink out;
};

int run_law(const law_args& a) {
    const transform_spec spec(io::parse_distribution(a.dist_f), io::parse_distribution(a.dist_h));
    a.out.check();
    const auto law = transform_law(spec);
    if (!a.jumps) {
        a.out.write(io::to_literal(law) + "\n");
        return exit_ok;
    }
    const json rec = {{"schema_version", io::schema_version},
                      {"law", io::to_json(law)},
                      {"discontinuities", z_discontinuities(spec)}};
    a.out.write(rec.dump() + "\n");
    return exit_ok;
}

struct quantile_args {
    std::string dist_f;
    std::vector<double> y;
    bool flats = false;
    sink out;
};

int run_quantile(const quantile_args& a) {
    const auto d = io::parse_distribution(a.dist_f);
    a.out.check();
    json levels = json::array();
    for (double y : a.y) {
        try {
            levels.push_back({{"y", y}, {"q_left", q_left(d, y)}, {"q_right", q_right(d, y)}});
        } catch (const domain_error& e) {
            throw usage_error(std::string("--y: ") + e.what());
        }
    }
    json rec = {{"schema_version", io::schema_version}, {"levels", levels}};
    if (a.flats) {
        json fl = json::array();
        for (const auto& f : flat_set(d)) fl.push_back({{"level", f.level}, {"lo", f.lo}, {"hi", f.hi}});
        rec["flats"] = fl;
    }
    a.out.write(rec.dump() + "\n");
    return exit_ok;
}

struct kernel_args {
    std::string dist_f, dist_h = "uniform01", grid = "auto";
    std::size_t states = 2;
    std::size_t seeds = 0;
    std::optional<std::uint64_t> seed;
    double rank_tol = rank_tolerance;
    sink out;
};

int run_kernel_check(const kernel_args& a) {
    const transform_spec spec(io::parse_distribution(a.dist_f), io::parse_distribution(a.dist_h));
    if (a.states == 0) throw usage_error("--states must be at least 1");
    if (!(a.rank_tol > 0.0 && a.rank_tol < 1.0)) throw usage_error("--rank-tol must lie in (0, 1)");
    std::optional<std::vector<double>> grid;
    if (a.grid != "auto") grid = parse_grid(a.grid);
    a.out.check();

    std::vector<std::vector<double>> nus;
    std::optional<std::uint64_t> seed;
    if (a.seeds == 0) {
        nus.emplace_back(a.states, 1.0 / static_cast<double>(a.states));
    } else {
        seed = resolve_seed(a.seed);
        for (std::size_t i = 0; i < a.seeds; ++i) {
            auto rng = make_rng(*seed, i, 0);
            nus.push_back(random_nu(a.states, rng));
        }
    }

    bool all = true;
    std::string text;
    for (std::size_t i = 0; i < nus.size(); ++i) {
        const auto rep = uniqueness_check(spec, std::span<const double>(nus[i]), grid, a.rank_tol);
        all = all && rep.verdict;
        auto rec = io::to_json(rep);
        rec["dist_f"] = io::to_json(spec.f());
        rec["dist_h"] = io::to_json(spec.h());
        rec["states"] = a.states;
        rec["nu"] = nus[i];
        if (seed) {
            rec["seed"] = *seed;
            rec["replicate"] = i;
        }
        log(log_level::debug, "kernel-check record " + std::to_string(i) + ": rank " + std::to_string(rep.rank));
        text += rec.dump() + "\n";
    }
    a.out.write(text);
    return all ? exit_ok : exit_verdict;
}

struct experiment_args {
    std::string config, csv;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<double> alpha;
    sink out;
};

template <typename Config>
void apply_overrides(Config& c, const experiment_args& a, const json& j) {
    std::optional<std::uint64_t> from_config;
    if (j.contains("seed")) from_config = c.seed;
    c.seed = resolve_seed(a.seed, from_config);
    if (a.threads) c.threads = *a.threads;
    if (a.alpha) c.alpha = *a.alpha;
}

void write_experiment(const experiment_args& a, const std::string& name, const json& echo,
                      const experiment_summary& s, double alpha) {
    a.out.write(io::summary_json(name, echo, s, alpha).dump() + "\n");
    if (!a.csv.empty()) a.out.write_to(a.csv, io::p_value_csv(s));
}

int run_test_independence(const experiment_args& a) {
    const auto j = io::parse_json(io::read_file(a.config), a.config);
    auto cfg = io::corollary1_from_json(j);
    apply_overrides(cfg, a, j);
    a.out.check();
    a.out.check_path(a.csv);
    log(log_level::info, "pairwise experiment: " + std::to_string(cfg.n_replicates) + " replicates, seed " +
                             std::to_string(cfg.seed));
    const auto s = corollary1_experiment(cfg);
    write_experiment(a, "corollary1", io::echo(cfg), s, cfg.alpha);
    return exit_ok;
}

int run_verify_corollary2(const experiment_args& a) {
    const auto j = io::parse_json(io::read_file(a.config), a.config);
    auto cfg = io::corollary2_from_json(j);
    apply_overrides(cfg, a, j);
    a.out.check();
    a.out.check_path(a.csv);
    log(log_level::info, "conditional experiment: " + std::to_string(cfg.n_replicates) + " replicates, seed " +
                             std::to_string(cfg.seed));
    const auto s = corollary2_experiment(cfg);
    write_experiment(a, "corollary2", io::echo(cfg), s, cfg.alpha);
    return exit_ok;
}

struct lemma_args {
    std::size_t n = 100;
    std::size_t probes = 10'000;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> inject;
    sink out;
};

int run_verify_lemmas(const lemma_args& a) {
    std::vector<mixed_distribution> injected;
    for (const auto& lit : a.inject) injected.push_back(io::parse_distribution(lit));
    if (a.n == 0) throw usage_error("--n must be at least 1");
    a.out.check();
    const auto seed = resolve_seed(a.seed);
    const auto rep = verify_lemmas(a.n, seed, a.probes, injected);
    auto rec = io::to_json(rep);
    rec["seed"] = seed;
    rec["probes"] = a.probes;
    a.out.write(rec.dump() + "\n");
    if (!rep.passed())
        for (const auto& d : rep.failing) log(log_level::error, "failing distribution: " + io::to_literal(d));
    return rep.passed() ? exit_ok : exit_verdict;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Brockwell transform toolkit: transforms, laws, quantiles, kernel uniqueness checks and "
                 "independence experiments.",
                 "brockwell"};
    app.footer(shorthand_help);
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    transform_args ta;
    auto* t = app.add_subcommand("transform", "Brockwell transform of values x with randomizers u");
    t->add_option("--dist-f", ta.dist_f, "Law of X")->required();
    t->add_option("--dist-h", ta.dist_h, "Law of the randomizer U (used when --u is absent)")
        ->capture_default_str();
    t->add_option("--x", ta.x, "Values of X");
    t->add_option("--u", ta.u, "Randomizer values, one per x");
    t->add_option("--input", ta.input, "CSV file holding the x values");
    t->add_option("--column", ta.column, "CSV column (name or 0-based index)")->capture_default_str();
    t->add_option("--seed", ta.seed, "Seed for drawing u from --dist-h");
    t->add_option("--csv", ta.csv, "Also write x,u,z rows to this CSV file");
    add_sink_options(t, ta.out);

    law_args la;
    auto* l = app.add_subcommand("law", "Exact law of Z as a distribution literal");
    l->add_option("--dist-f", la.dist_f, "Law of X")->required();
    l->add_option("--dist-h", la.dist_h, "Law of the randomizer U")->capture_default_str();
    l->add_flag("--jumps", la.jumps, "Emit a record with the law and its jump points");
    add_sink_options(l, la.out);

    quantile_args qa;
    auto* q = app.add_subcommand("quantile", "Left- and right-continuous generalized inverses");
    q->add_option("--dist-f", qa.dist_f, "Distribution")->required();
    q->add_option("--y", qa.y, "Levels in (0, 1)")->required();
    q->add_flag("--flats", qa.flats, "Also list the flat intervals of the CDF");
    add_sink_options(q, qa.out);

    kernel_args ka;
    auto* k = app.add_subcommand("kernel-check", "Null-space uniqueness check of the discretized operator");
    k->add_option("--dist-f", ka.dist_f, "Purely atomic law of X")->required();
    k->add_option("--dist-h", ka.dist_h, "Law of the randomizer U")->capture_default_str();
    k->add_option("--states", ka.states, "Number of states k")->capture_default_str();
    k->add_option("--grid", ka.grid, "auto, or a comma-separated list of z values in (0, 1]")
        ->capture_default_str();
    k->add_option("--seeds", ka.seeds, "Number of random state distributions nu (0: uniform nu)")
        ->capture_default_str();
    k->add_option("--seed", ka.seed, "Base seed for the random nu draws");
    k->add_option("--rank-tol", ka.rank_tol, "Relative singular-value threshold")->capture_default_str();
    add_sink_options(k, ka.out);

    experiment_args ia;
    auto* ti = app.add_subcommand("test-independence", "Transform-then-test experiment for two variables");
    ti->add_option("--config", ia.config, "JSON config file")->required()->check(CLI::ExistingFile);
    ti->add_option("--seed", ia.seed, "Override the config seed");
    ti->add_option("--threads", ia.threads, "Worker threads for replicates");
    ti->add_option("--alpha", ia.alpha, "Override the test level");
    ti->add_option("--csv", ia.csv, "Write per-replicate p-values to this CSV file");
    add_sink_options(ti, ia.out);

    experiment_args ca;
    auto* vc = app.add_subcommand("verify-corollary2", "Conditional transform experiment given a discrete X3");
    vc->add_option("--config", ca.config, "JSON config file")->required()->check(CLI::ExistingFile);
    vc->add_option("--seed", ca.seed, "Override the config seed");
    vc->add_option("--threads", ca.threads, "Worker threads for replicates");
    vc->add_option("--alpha", ca.alpha, "Override the test level");
    vc->add_option("--csv", ca.csv, "Write per-replicate p-values to this CSV file");
    add_sink_options(vc, ca.out);

    lemma_args va;
    auto* vl = app.add_subcommand("verify-lemmas", "Property battery for quantiles and the transform law");
    vl->add_option("--n", va.n, "Number of random distributions")->capture_default_str();
    vl->add_option("--seed", va.seed, "Seed");
    vl->add_option("--probes", va.probes, "Random (x, y) probes per distribution")->capture_default_str();
    vl->add_option("--inject", va.inject, "Distribution literal to test first (repeatable)");
    add_sink_options(vl, va.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*t) return run_transform(ta);
        if (*l) return run_law(la);
        if (*q) return run_quantile(qa);
        if (*k) return run_kernel_check(ka);
        if (*ti) return run_test_independence(ia);
        if (*vc) return run_verify_corollary2(ca);
        if (*vl) return run_verify_lemmas(va);
    } catch (const io::parse_error& e) {
        log(log_level::error, e.what());
        return exit_usage;
    } catch (const usage_error& e) {
        log(log_level::error, e.what());
        return exit_usage;
    } catch (const brockwell::error& e) {
        log(log_level::error, e.what());
        return exit_usage;
    }
    return exit_usage;
}

#pragma once

// Command-line driver: simulate, complexity, lowerbound, sweep.
// Exit codes: 0 ok, 2 usage/validation, 3 enumeration budget, 4 internal.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hetvar/harness.hpp"
#include "hetvar/io.hpp"
#include "hetvar/lowerbound.hpp"

namespace hetvar::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kBudget = 3, kInternal = 4 };

inline constexpr const char* kBuiltinHelp = R"(Builtin sources are written builtin:NAME,key=value,...

  hardM,n=N[,m=M,l=L,eps_ratio=R,lo=A,hi=B,seed=S]
      Three-level instance: arms 0..m-1 at +eps', arm l (default n-1) at 0,
      the rest at -eps', with eps' = R * epsilon (default R = 1.05).
      Variances log-uniform in [A, B] (default [0.25, 4], seed 1).
  hardF,n=N[,m=M,l=L,eps_ratio=R,lo=A,hi=B,seed=S]
      As hardM with arms 0..m-2 at +eps'.
  random,n=N[,seed=S,mean_low=a,mean_high=b,lo=A,hi=B]
      Means uniform in [a, b] (default [-1, 1]), variances log-uniform.
  homogeneous,n=N[,value=V]       n arms of variance V (default 1)
  powers2,n=N                      variances 1, 2, 4, ..., 2^(n-1)
  loguniform,n=N[,lo=A,hi=B,seed=S]
  illustrative,k=K                 m = 2^K, n = 2^(K^2), run-length encoded

simulate needs means (hardM, hardF, random or an instance JSON file);
the other commands accept any source. Files hold either an instance
{"n", "means", "sigma2", "kind"}, {"sigma2": [...]} or
{"sigma2_rle": [[value, count], ...]}.
)";

// -----------------------------------------------------------------------------
// Builtin sources.
// -----------------------------------------------------------------------------

struct BuiltinSpec {
    std::string name;
    std::map<std::string, std::string> params;
};

inline BuiltinSpec parse_builtin(std::string_view text) {
    BuiltinSpec b;
    std::size_t start = 0;
    bool first = true;
    while (start <= text.size()) {
        const std::size_t comma = std::min(text.find(',', start), text.size());
        const std::string_view tok = text.substr(start, comma - start);
        if (first) {
            if (tok.empty()) throw DomainError("builtin name is empty");
            b.name = std::string(tok);
            first = false;
        } else {
            const std::size_t eq = tok.find('=');
            if (eq == std::string_view::npos || eq == 0)
                throw DomainError("builtin parameter '" + std::string(tok) + "' must be key=value");
            if (!b.params.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1))).second)
                throw DomainError("builtin parameter '" + std::string(tok.substr(0, eq)) + "' given twice");
        }
        start = comma + 1;
    }
    return b;
}

class ParamReader {
public:
    explicit ParamReader(const BuiltinSpec& spec) : spec_(spec) {}

    std::optional<std::string> raw(const std::string& key) {
        used_.push_back(key);
        const auto it = spec_.params.find(key);
        if (it == spec_.params.end()) return std::nullopt;
        return it->second;
    }

    double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const auto v = raw(key);
        if (!v) return required(key, fallback);
        double out = 0.0;
        const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
        if (res.ec != std::errc{} || res.ptr != v->data() + v->size())
            throw DomainError(where(key) + " must be a number, got '" + *v + "'");
        return out;
    }

    std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
        const auto v = raw(key);
        if (!v) return required(key, fallback);
        std::uint64_t out = 0;
        const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
        if (res.ec != std::errc{} || res.ptr != v->data() + v->size())
            throw DomainError(where(key) + " must be a nonnegative integer, got '" + *v + "'");
        return out;
    }

    /// Every given key must have been read.
    void finish() const {
        for (const auto& [key, value] : spec_.params) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end())
                throw DomainError("builtin '" + spec_.name + "' has no parameter '" + key + "'");
        }
    }

private:
    template <class T>
    T required(const std::string& key, std::optional<T> fallback) const {
        if (!fallback) throw DomainError(where(key) + " is required");
        return *fallback;
    }
    std::string where(const std::string& key) const { return "builtin '" + spec_.name + "' parameter '" + key + "'"; }

    const BuiltinSpec& spec_;
    std::vector<std::string> used_;
};

/// A resolved --instance / --sigma2 source.
struct Source {
    std::string id;
    std::optional<BanditInstance> instance;  ///< present when means are known
    VarianceProfile profile;
    std::optional<std::size_t> natural_m;    ///< m implied by the source, if any
    std::vector<std::string> warnings;
};

struct SourceContext {
    std::optional<std::size_t> m;        ///< --m when given
    std::optional<double> epsilon;       ///< --epsilon when given
};

inline Source from_instance(std::string id, BanditInstance inst) {
    Source s;
    s.id = std::move(id);
    s.profile = VarianceProfile::from_vector(inst.sigma2);
    s.warnings = inst.warnings;
    s.instance = std::move(inst);
    return s;
}

inline Source resolve_builtin(const std::string& id, std::string_view body, const SourceContext& ctx) {
    const BuiltinSpec spec = parse_builtin(body);
    ParamReader p(spec);
    Source out;
    if (spec.name == "hardM" || spec.name == "hardF") {
        const std::size_t n = p.integer("n");
        std::size_t m = 0;
        if (spec.params.count("m")) {
            m = p.integer("m");
            if (ctx.m && *ctx.m != m) throw DomainError("builtin m=" + std::to_string(m) + " disagrees with --m");
        } else if (ctx.m) {
            m = *ctx.m;
        } else {
            throw DomainError("builtin '" + spec.name + "' needs m=, or pass --m");
        }
        if (n < 1 || m < 1 || m >= n) throw DomainError("builtin '" + spec.name + "' needs 1 <= m < n");
        const std::size_t l = p.integer("l", n - 1);
        const double ratio = p.real("eps_ratio", kDefaultEpsPrimeRatio);
        const double lo = p.real("lo", 0.25), hi = p.real("hi", 4.0);
        const std::uint64_t seed = p.integer("seed", 1);
        p.finish();
        if (!ctx.epsilon) throw DomainError("builtin '" + spec.name + "' needs --epsilon to place eps'");
        const auto sigma2 = log_uniform_variances(seed, n, lo, hi);
        const std::size_t high = spec.name == "hardM" ? m : m - 1;
        ArmSet top;
        for (std::size_t i = 0; i < n && top.size() < high; ++i) {
            if (i != l) top.push_back(i);
        }
        const double eps_prime = ratio * *ctx.epsilon;
        BanditInstance inst = spec.name == "hardM" ? hard_instance_M(n, m, l, top, eps_prime, sigma2, ctx.epsilon)
                                                   : hard_instance_F(n, m, l, top, eps_prime, sigma2, ctx.epsilon);
        out = from_instance(id, std::move(inst));
        out.natural_m = m;
    } else if (spec.name == "random") {
        const std::size_t n = p.integer("n");
        const std::uint64_t seed = p.integer("seed", 1);
        const double a = p.real("mean_low", -1.0), b = p.real("mean_high", 1.0);
        const double lo = p.real("lo", 0.25), hi = p.real("hi", 4.0);
        p.finish();
        out = from_instance(id, random_instance(seed, n, a, b, LogUniform{lo, hi}));
    } else if (spec.name == "homogeneous") {
        const std::uint64_t n = p.integer("n");
        const double value = p.real("value", 1.0);
        p.finish();
        if (n < 1) throw DomainError("builtin 'homogeneous' needs n >= 1");
        out.id = id;
        out.profile = VarianceProfile({{value, n}});
    } else if (spec.name == "powers2") {
        const std::size_t n = p.integer("n");
        p.finish();
        if (n < 1 || n > 1000) throw DomainError("builtin 'powers2' needs 1 <= n <= 1000");
        std::vector<double> s2;
        for (std::size_t i = 0; i < n; ++i) s2.push_back(std::ldexp(1.0, int(i)));
        out.id = id;
        out.profile = VarianceProfile::from_vector(s2);
    } else if (spec.name == "loguniform") {
        const std::size_t n = p.integer("n");
        const double lo = p.real("lo", 0.25), hi = p.real("hi", 4.0);
        const std::uint64_t seed = p.integer("seed", 1);
        p.finish();
        if (n < 1) throw DomainError("builtin 'loguniform' needs n >= 1");
        out.id = id;
        out.profile = VarianceProfile::from_vector(log_uniform_variances(seed, n, lo, hi));
    } else if (spec.name == "illustrative") {
        const std::uint64_t k = p.integer("k");
        p.finish();
        if (k > std::uint64_t(kIllustrativeMaxK)) throw DomainError("builtin 'illustrative' supports k <= 8");
        const IllustrativeFamily f = illustrative_family(int(k));
        out.id = id;
        out.profile = f.profile;
        out.natural_m = std::size_t(f.m);
    } else {
        throw DomainError("unknown builtin '" + spec.name + "'");
    }
    return out;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline Source resolve_source(const std::string& text, const SourceContext& ctx) {
    constexpr std::string_view prefix = "builtin:";
    if (text.rfind(prefix, 0) == 0) return resolve_builtin(text, std::string_view(text).substr(prefix.size()), ctx);
    const nlohmann::json doc = read_json_file(text);
    try {
        if (doc.is_object() && doc.contains("means")) return from_instance(text, instance_from_json(doc));
        Source s;
        s.id = text;
        s.profile = profile_from_json(doc);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("'" + text + "': " + e.what());
    }
}

// -----------------------------------------------------------------------------
// JSON config files: keys mirror long flag names; explicit flags win.
// -----------------------------------------------------------------------------

inline bool flag_given(const std::vector<std::string>& args, const std::string& name) {
    const std::string flag = "--" + name;
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

inline std::string json_scalar_text(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return io::format_double(v.get<double>());
    throw DomainError("config key '" + key + "' must hold a string or number");
}

/// Arguments derived from the config file of the subcommand `sub`.
inline std::vector<std::string> config_arguments(const CLI::App& sub, const std::string& path,
                                                 const std::vector<std::string>& explicit_args) {
    const nlohmann::json doc = read_json_file(path);
    if (!doc.is_object()) throw DomainError("config file must hold a JSON object");
    std::vector<std::string> out;
    for (const auto& [key, value] : doc.items()) {
        const CLI::Option* opt = nullptr;
        try {
            opt = sub.get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
        }
        if (opt == nullptr || key == "config" || key == "help")
            throw DomainError("unknown config key '" + key + "' for command '" + sub.get_name() + "'");
        if (flag_given(explicit_args, key)) continue;
        if (value.is_array()) {
            for (const auto& item : value) {
                out.push_back("--" + key);
                out.push_back(json_scalar_text(item, key));
            }
        } else {
            out.push_back("--" + key);
            out.push_back(json_scalar_text(value, key));
        }
    }
    return out;
}

// -----------------------------------------------------------------------------
// Commands.
// -----------------------------------------------------------------------------

struct CommonOptions {
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::optional<std::size_t> m;
    unsigned threads = 0;
    std::string config;
};

inline void add_common(CLI::App& cmd, CommonOptions& o) {
    cmd.add_option("--epsilon", o.epsilon, "accuracy epsilon > 0");
    cmd.add_option("--delta", o.delta, "confidence delta in (0, 1)");
    cmd.add_option("--m", o.m, "number of arms to identify");
    cmd.add_option("--threads", o.threads, "worker threads, 0 = all cores (never changes output)");
    cmd.add_option("--config", o.config, "JSON file whose keys mirror these flags; flags win");
}

inline double need(const std::optional<double>& v, const char* flag) {
    if (!v) throw DomainError(std::string("--") + flag + " is required");
    return *v;
}

inline std::size_t resolve_m(const CommonOptions& o, const Source& src) {
    if (o.m) return *o.m;
    if (src.natural_m) return *src.natural_m;
    throw DomainError("--m is required");
}

struct SimulateOptions {
    CommonOptions common;
    std::vector<std::string> algos;
    std::vector<std::string> instances;
    std::uint64_t trials = 0;
    std::uint64_t seed = 1;
    std::string sampling = "aggregate";
};

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
    const double epsilon = need(o.common.epsilon, "epsilon");
    const double delta = need(o.common.delta, "delta");
    if (o.trials < 1) throw DomainError("--trials: trials must be >= 1");
    if (o.algos.empty()) throw DomainError("--algo is required");
    if (o.instances.empty()) throw DomainError("--instance is required");
    std::vector<AlgorithmKind> algos;
    for (const auto& a : o.algos) algos.push_back(parse_algorithm(a));
    const SamplingMode mode = parse_sampling_mode(o.sampling);

    // Validate every source before running anything.
    std::vector<std::pair<Source, ProblemSpec>> jobs;
    for (const auto& text : o.instances) {
        Source src = resolve_source(text, {o.common.m, epsilon});
        if (!src.instance) throw DomainError("--instance '" + text + "' has no means; simulate needs an instance");
        for (const auto& w : src.warnings) err << "warning: " << text << ": " << w << '\n';
        ProblemSpec spec(epsilon, delta, resolve_m(o.common, src), src.instance->sigma2);
        jobs.emplace_back(std::move(src), std::move(spec));
    }

    io::CsvWriter csv(out);
    csv.row(io::trial_summary_header());
    for (AlgorithmKind a : algos) {
        for (const auto& [src, spec] : jobs) {
            const TrialOptions topt{o.common.threads, mode, src.id};
            csv.row(io::trial_summary_row(run_trials(a, *src.instance, spec, o.trials, o.seed, topt)));
        }
    }
    return kOk;
}

struct ComplexityOptions {
    CommonOptions common;
    std::string sigma2;
    std::string gr_mode = "heuristic";
};

inline int cmd_complexity(const ComplexityOptions& o, std::ostream& out) {
    const double epsilon = need(o.common.epsilon, "epsilon");
    const double delta = need(o.common.delta, "delta");
    if (o.sigma2.empty()) throw DomainError("--sigma2 is required");
    const GrMode mode = parse_gr_mode(o.gr_mode);
    const Source src = resolve_source(o.sigma2, {o.common.m, epsilon});
    const std::size_t m = resolve_m(o.common, src);
    const ComplexityReport r = complexity_report(src.profile, epsilon, delta, m, mode);

    io::CsvWriter csv(out);
    csv.row({"source", "n", "m", "epsilon", "delta", "term_I", "term_II", "term_III", "total", "gr_mode", "k",
             "gm_size", "gl_size", "ent_gr", "ent_gl"});
    csv.row({src.id, io::format_double(src.profile.total_arms()), io::format_uint(m), io::format_double(epsilon),
             io::format_double(delta), io::format_double(r.terms.term_confidence),
             io::format_double(r.terms.term_homog), io::format_double(r.terms.term_heterog),
             io::format_double(r.terms.total), std::string(to_string(r.mode)), io::format_uint(r.bands),
             io::format_double(r.gm_size), io::format_double(r.gl_size), io::format_double(r.ent_gr),
             io::format_double(r.ent_gl)});
    return kOk;
}

struct LowerboundOptions {
    CommonOptions common;
    std::string sigma2;
    std::vector<std::string> etas;
};

inline int cmd_lowerbound(const LowerboundOptions& o, std::ostream& out) {
    const double epsilon = need(o.common.epsilon, "epsilon");
    const double delta = need(o.common.delta, "delta");
    if (o.sigma2.empty()) throw DomainError("--sigma2 is required");
    if (o.etas.empty()) throw DomainError("--eta is required");
    const Source src = resolve_source(o.sigma2, {o.common.m, epsilon});
    const std::size_t m = resolve_m(o.common, src);
    require_enumeration_budget(src.profile.total_arms(), "lower bound over materialized arms",
                               "use the complexity command for large profiles");
    const ProblemSpec spec(epsilon, delta, m, src.profile.materialize(kEnumerationBudget));
    const double b = b_delta(delta);
    const VarianceGrouping grouping = make_grouping(spec.sigma2(), m);

    struct Row {
        std::string kind;
        std::optional<DualAssignment> eta;
    };
    std::vector<Row> rows;
    for (const auto& e : o.etas) {
        if (e == "uniform") {
            rows.push_back({e, eta_uniform(spec)});
        } else if (e == "gm") {
            rows.push_back({e, eta_gm(spec, grouping)});
        } else if (e == "uniformL") {
            rows.push_back({e, eta_uniform_L(spec, grouping)});
        } else if (e.rfind("file:", 0) == 0) {
            const std::string path = e.substr(5);
            rows.push_back({e, eta_from_json(read_json_file(path), spec.n(), m)});
        } else {
            throw DomainError("--eta '" + e + "' (expected uniform|gm|uniformL|file:<path>)");
        }
    }

    io::CsvWriter csv(out);
    csv.row({"source", "n", "m", "epsilon", "delta", "eta_kind", "status", "objective", "sc_bound", "B_delta",
             "delta_prime"});
    for (const auto& row : rows) {
        std::vector<std::string> fields{src.id, io::format_uint(spec.n()), io::format_uint(m),
                                        io::format_double(epsilon), io::format_double(delta), row.kind};
        if (!row.eta) {
            fields.insert(fields.end(), {"inapplicable", "", "", io::format_double(b), io::format_double(delta / b)});
        } else {
            const BoundReport r = bound_report(*row.eta, spec);
            fields.insert(fields.end(), {"ok", io::format_double(r.objective), io::format_double(r.sc_bound),
                                         io::format_double(r.b_delta), io::format_double(r.delta_prime)});
        }
        csv.row(fields);
    }
    return kOk;
}

struct SweepOptions {
    CommonOptions common;
    std::string family = "illustrative";
    std::string k_range;
    std::string mode = "rle";
};

struct SweepPoint {
    int k = 0;
    double n = 0;
    std::uint64_t m = 0;
    int ell = 0;
    double budget_vmedelim = 0;         ///< three-term complexity total
    double budget_wnelim_formula = 0;   ///< sum sigma^2 / eps^2 (ln(1/delta) + Ent(sigma^2))
    double budget_medelim_formula = 0;  ///< sum sigma^2 / eps^2 (ln(1/delta) + ln m)
    double ratio = 0;                   ///< min(baselines) / budget_vmedelim
    double samples_vmedelim = 0;        ///< realisation-free V-MedElim sample bound, fractional budgets
};

inline SweepPoint sweep_point(int k, bool materialized, double epsilon, double delta) {
    const IllustrativeFamily f = illustrative_family(k);
    const VarianceProfile profile =
        materialized ? VarianceProfile::from_vector(f.profile.materialize()) : f.profile;
    const std::size_t m = std::size_t(f.m);
    SweepPoint p;
    p.k = k;
    p.n = profile.total_arms();
    p.m = f.m;
    p.ell = f.ell;
    const double scale = run_sum(profile.runs()) / (epsilon * epsilon);
    const double conf = std::log(1.0 / delta);
    p.budget_vmedelim = complexity_report(profile, epsilon, delta, m).terms.total;
    p.budget_wnelim_formula = scale * (conf + entropy(profile.runs()));
    p.budget_medelim_formula = scale * (conf + std::log(double(m)));
    p.ratio = std::min(p.budget_wnelim_formula, p.budget_medelim_formula) / p.budget_vmedelim;
    p.samples_vmedelim = vmedelim_sample_bound(profile, epsilon, delta, m, Rounding::none);
    return p;
}

inline std::pair<int, int> parse_k_range(const std::string& text) {
    const std::size_t dots = text.find("..");
    if (dots == std::string::npos) throw DomainError("--k-range must look like a..b");
    auto parse = [&](std::string_view s) {
        int v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw DomainError("--k-range must look like a..b with integers, got '" + text + "'");
        return v;
    };
    const std::string_view all(text);
    return {parse(all.substr(0, dots)), parse(all.substr(dots + 2))};
}

inline int cmd_sweep(const SweepOptions& o, std::ostream& out) {
    const double epsilon = need(o.common.epsilon, "epsilon");
    const double delta = need(o.common.delta, "delta");
    [[maybe_unused]] const ProblemSpec validated(epsilon, delta, 1, {1.0});
    if (o.family != "illustrative") throw DomainError("--family must be 'illustrative'");
    if (o.common.m) throw DomainError("--m is fixed by the family (m = 2^k); do not pass it to sweep");
    if (o.mode != "rle" && o.mode != "materialized") throw DomainError("--mode must be rle|materialized");
    const bool materialized = o.mode == "materialized";
    const auto [a, b] = parse_k_range(o.k_range);
    const int cap = materialized ? kIllustrativeMaxMaterializedK : kIllustrativeMaxK;
    if (a <= b && (a < 2 || b > cap))
        throw DomainError("--k-range " + o.k_range + " outside 2.." + std::to_string(cap) + " for mode " + o.mode);

    io::CsvWriter csv(out);
    csv.row({"k", "n", "m", "ell", "budget_vmedelim", "budget_wnelim_formula", "budget_medelim_formula", "ratio",
             "samples_vmedelim"});
    for (int k = a; k <= b; ++k) {
        const SweepPoint p = sweep_point(k, materialized, epsilon, delta);
        csv.row({std::to_string(p.k), io::format_double(p.n), io::format_uint(p.m), std::to_string(p.ell),
                 io::format_double(p.budget_vmedelim), io::format_double(p.budget_wnelim_formula),
                 io::format_double(p.budget_medelim_formula), io::format_double(p.ratio),
                 io::format_double(p.samples_vmedelim)});
    }
    return kOk;
}

// -----------------------------------------------------------------------------
// Entry point.
// -----------------------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& argv_in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Top-m arm identification with known heterogeneous variances", "hetvar"};
    app.require_subcommand(1);
    app.footer(kBuiltinHelp);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo trials; one CSV row per (algorithm, instance)");
    add_common(*simulate, sim.common);
    simulate->add_option("--algo", sim.algos, "wnelim|medelim|vmedelim|adapted (repeatable, comma list)")
        ->delimiter(',');
    simulate->add_option("--instance", sim.instances, "instance JSON path or builtin:NAME,... (repeatable)");
    simulate->add_option("--trials", sim.trials, "number of seeded trials (>= 1)");
    simulate->add_option("--seed", sim.seed, "seed base; trial t uses stream (seed, t)");
    simulate->add_option("--sampling", sim.sampling,
                         "aggregate (one draw per arm per round) or per-pull; same distribution");

    ComplexityOptions cx;
    auto* complexity = app.add_subcommand("complexity", "Three-term worst-case complexity and grouping summary");
    add_common(*complexity, cx.common);
    complexity->add_option("--sigma2", cx.sigma2, "variance source: path or builtin:NAME,...");
    complexity->add_option("--gr-mode", cx.gr_mode, "heuristic|exact reduced-set selection");

    LowerboundOptions lb;
    auto* lowerbound = app.add_subcommand("lowerbound", "Dual lower bound for explicit eta assignments");
    add_common(*lowerbound, lb.common);
    lowerbound->add_option("--sigma2", lb.sigma2, "variance source: path or builtin:NAME,...");
    lowerbound->add_option("--eta", lb.etas, "uniform|gm|uniformL|file:<path> (repeatable)");

    for (CLI::App* sub : {simulate, complexity, lowerbound}) sub->footer(kBuiltinHelp);

    SweepOptions sw;
    auto* sweep = app.add_subcommand("sweep", "Budget comparison across the illustrative family");
    add_common(*sweep, sw.common);
    sweep->add_option("--family", sw.family, "instance family (illustrative)");
    sweep->add_option("--k-range", sw.k_range, "inclusive range a..b; empty when a > b");
    sweep->add_option("--mode", sw.mode, "rle (k <= 8) or materialized (k <= 3)");

    try {
        std::vector<std::string> args(argv_in.begin() + (argv_in.empty() ? 0 : 1), argv_in.end());
        // Config expansion: find the subcommand and its --config value first.
        if (!args.empty()) {
            CLI::App* sub = nullptr;
            for (CLI::App* s : app.get_subcommands({})) {
                if (s->get_name() == args.front()) sub = s;
            }
            std::optional<std::string> config_path;
            for (std::size_t i = 1; i < args.size(); ++i) {
                if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
                if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
            }
            if (sub && config_path) {
                const std::vector<std::string> extra = config_arguments(*sub, *config_path, args);
                args.insert(args.begin() + 1, extra.begin(), extra.end());
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim, out, err);
        if (complexity->parsed()) return cmd_complexity(cx, out);
        if (lowerbound->parsed()) return cmd_lowerbound(lb, out);
        if (sweep->parsed()) return cmd_sweep(sw, out);
        return kUsage;
    } catch (const EnumerationTooLarge& e) {
        err << "error: " << e.what() << '\n';
        return kBudget;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace hetvar::cli

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "hetvar/core.hpp"
#include "hetvar/profile.hpp"
#include "hetvar/rng.hpp"

namespace hetvar {

enum class ArmKind { gaussian, scripted };

inline std::string_view to_string(ArmKind kind) {
    return kind == ArmKind::gaussian ? "gaussian" : "scripted";
}

inline ArmKind parse_arm_kind(std::string_view s) {
    if (s == "gaussian") return ArmKind::gaussian;
    if (s == "scripted") return ArmKind::scripted;
    throw DomainError("unknown arm kind '" + std::string(s) + "'");
}

/// Ground truth of a bandit problem: per-arm means, variance proxies and
/// reward family. Gaussian arm i draws N(means[i], sigma2[i]).
struct BanditInstance {
    std::vector<double> means;
    std::vector<double> sigma2;
    std::vector<ArmKind> kind;
    /// Non-fatal remarks from the generator (e.g. a degenerate gap).
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t n() const noexcept { return means.size(); }

    void validate() const {
        if (means.empty()) throw DomainError("instance has no arms");
        if (sigma2.size() != means.size() || kind.size() != means.size())
            throw DomainError("instance arrays differ in length");
        for (double mu : means) {
            if (!std::isfinite(mu)) throw DomainError("means must be finite");
        }
        for (double s : sigma2) {
            if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("variances must be positive and finite");
        }
    }
};

inline BanditInstance make_gaussian_instance(std::vector<double> means, std::vector<double> sigma2) {
    BanditInstance inst;
    inst.kind.assign(means.size(), ArmKind::gaussian);
    inst.means = std::move(means);
    inst.sigma2 = std::move(sigma2);
    inst.validate();
    return inst;
}

// -----------------------------------------------------------------------------
// Three-level hard instances (eps', 0, -eps').
// -----------------------------------------------------------------------------

namespace detail {

inline BanditInstance three_level_instance(std::size_t n, std::size_t l, std::span<const ArmIndex> high,
                                           std::size_t expected_high, double eps_prime,
                                           std::span<const double> sigma2, std::optional<double> epsilon,
                                           const char* what) {
    if (sigma2.size() != n) throw ContractError(std::string(what) + ": sigma2 must have n entries");
    if (l >= n) throw ContractError(std::string(what) + ": arm l out of range");
    if (!(eps_prime > 0.0) || !std::isfinite(eps_prime))
        throw DomainError(std::string(what) + ": eps' must be positive");
    const std::set<ArmIndex> unique(high.begin(), high.end());
    if (unique.size() != high.size() || high.size() != expected_high)
        throw ContractError(std::string(what) + ": index set has the wrong size or repeats");
    for (ArmIndex i : unique) {
        if (i >= n) throw ContractError(std::string(what) + ": index out of range");
        if (i == l) throw ContractError(std::string(what) + ": arm l must not belong to the index set");
    }
    std::vector<double> means(n, -eps_prime);
    means[l] = 0.0;
    for (ArmIndex i : unique) means[i] = eps_prime;
    BanditInstance inst = make_gaussian_instance(std::move(means), {sigma2.begin(), sigma2.end()});
    if (epsilon && eps_prime <= *epsilon) {
        inst.warnings.push_back("eps' <= epsilon: arm " + std::to_string(l) +
                                " is also epsilon-approximate, the valid answer is not unique");
    }
    return inst;
}

}  // namespace detail

/// I_{l,M}: arm l at 0, arms of M at eps', all others at -eps'. For
/// epsilon < eps' the only valid answer is M.
inline BanditInstance hard_instance_M(std::size_t n, std::size_t m, std::size_t l, std::span<const ArmIndex> M,
                                      double eps_prime, std::span<const double> sigma2,
                                      std::optional<double> epsilon = std::nullopt) {
    if (m < 1) throw ContractError("hard_instance_M: m must be at least 1");
    return detail::three_level_instance(n, l, M, m, eps_prime, sigma2, epsilon, "hard_instance_M");
}

/// I_{l,F}: like I_{l,M} with |F| = m - 1; the only valid answer is F + {l}.
inline BanditInstance hard_instance_F(std::size_t n, std::size_t m, std::size_t l, std::span<const ArmIndex> F,
                                      double eps_prime, std::span<const double> sigma2,
                                      std::optional<double> epsilon = std::nullopt) {
    if (m < 1) throw ContractError("hard_instance_F: m must be at least 1");
    return detail::three_level_instance(n, l, F, m - 1, eps_prime, sigma2, epsilon, "hard_instance_F");
}

/// Default gap of the hard instances relative to the accuracy target.
inline constexpr double kDefaultEpsPrimeRatio = 1.05;

// -----------------------------------------------------------------------------
// Illustrative family: m = 2^k, n = 2^(k^2).
// -----------------------------------------------------------------------------

struct IllustrativeFamily {
    int k = 0;
    int ell = 0;              ///< ceil(log2 k)
    std::uint64_t m = 0;      ///< 2^k
    int n_log2 = 0;           ///< k^2
    VarianceProfile profile;  ///< 2^i arms at 2^-i for i < ell, the rest at 2^-(k^2) ell / k
    std::map<std::string, double> expected;
};

inline constexpr int kIllustrativeMaxK = 8;
inline constexpr int kIllustrativeMaxMaterializedK = 3;

inline IllustrativeFamily illustrative_family(int k) {
    if (k < 2) throw DomainError("illustrative family needs k >= 2");
    if (k > kIllustrativeMaxK) throw DomainError("illustrative family supports k <= 8 (n = 2^(k^2) arms)");
    IllustrativeFamily f;
    f.k = k;
    f.ell = 0;
    while ((1 << f.ell) < k) ++f.ell;
    f.m = std::uint64_t{1} << k;
    f.n_log2 = k * k;

    std::vector<VarianceRun> runs;
    for (int i = 0; i < f.ell; ++i) runs.push_back({std::ldexp(1.0, -i), std::uint64_t{1} << i});
    const double bulk_value = std::ldexp(double(f.ell) / double(k), -f.n_log2);
    // 2^(k^2) - 2^ell + 1 without forming 2^64.
    const std::uint64_t all_but_one = f.n_log2 == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << f.n_log2) - 1;
    const std::uint64_t bulk_count = all_but_one - (std::uint64_t{1} << f.ell) + 2;
    runs.push_back({bulk_value, bulk_count});
    f.profile = VarianceProfile(std::move(runs));

    const double ell = f.ell;
    // Each band i < ell carries mass 1 spread evenly over 2^i arms.
    f.expected["ent_gl"] = std::log(ell) + std::log(2.0) / 2.0 * (ell - 1.0);
    f.expected["sum_gl"] = ell;
    f.expected["sum_gm"] = (1.0 - std::ldexp(1.0, f.ell - f.n_log2) + std::ldexp(1.0, -f.n_log2)) * ell / k;
    f.expected["m"] = double(f.m);
    f.expected["n"] = std::ldexp(1.0, f.n_log2);
    return f;
}

// -----------------------------------------------------------------------------
// Seeded random instances.
// -----------------------------------------------------------------------------

struct LogUniform {
    double lo = 0.0;
    double hi = 0.0;
};

using Sigma2Spec = std::variant<std::vector<double>, LogUniform>;

namespace detail {

inline double seeded_uniform(std::uint64_t seed, std::uint32_t stream, std::uint64_t index) {
    return rng::uniform_pair({std::uint32_t(index), std::uint32_t(index >> 32), stream, 0x5eed0000u},
                             rng::key_from_seed(seed))[0];
}

}  // namespace detail

/// n variances drawn log-uniformly in [lo, hi], a pure function of the seed.
inline std::vector<double> log_uniform_variances(std::uint64_t seed, std::size_t n, double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
        throw DomainError("log-uniform range needs 0 < lo <= hi");
    std::vector<double> out(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = detail::seeded_uniform(seed, 1, i);
        out[i] = std::clamp(std::exp(a + (b - a) * u), lo, hi);
    }
    return out;
}

inline BanditInstance random_instance(std::uint64_t seed, std::size_t n, double mean_low, double mean_high,
                                      const Sigma2Spec& sigma2_spec) {
    if (n < 1) throw DomainError("random instance needs n >= 1");
    if (!(mean_low <= mean_high) || !std::isfinite(mean_low) || !std::isfinite(mean_high))
        throw DomainError("random instance needs mean_low <= mean_high");
    std::vector<double> means(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = detail::seeded_uniform(seed, 0, i);
        means[i] = mean_low + (mean_high - mean_low) * u;
    }
    std::vector<double> sigma2;
    if (const auto* explicit_values = std::get_if<std::vector<double>>(&sigma2_spec)) {
        if (explicit_values->size() != n) throw DomainError("explicit sigma2 must have n entries");
        sigma2 = *explicit_values;
    } else {
        const auto& lu = std::get<LogUniform>(sigma2_spec);
        sigma2 = log_uniform_variances(seed, n, lu.lo, lu.hi);
    }
    return make_gaussian_instance(std::move(means), std::move(sigma2));
}

// -----------------------------------------------------------------------------
// JSON documents.
//   instance: {"n": 3, "means": [...], "sigma2": [...], "kind": "gaussian"}
//   variance-only, run-length encoded: {"sigma2_rle": [[value, count], ...]}
// -----------------------------------------------------------------------------

inline nlohmann::json instance_to_json(const BanditInstance& inst) {
    nlohmann::json doc;
    doc["n"] = inst.n();
    doc["means"] = inst.means;
    doc["sigma2"] = inst.sigma2;
    const bool uniform = std::all_of(inst.kind.begin(), inst.kind.end(),
                                     [&](ArmKind k) { return k == inst.kind.front(); });
    if (uniform) {
        doc["kind"] = to_string(inst.kind.front());
    } else {
        nlohmann::json kinds = nlohmann::json::array();
        for (ArmKind k : inst.kind) kinds.push_back(to_string(k));
        doc["kind"] = kinds;
    }
    return doc;
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& doc, std::initializer_list<std::string_view> allowed) {
    if (!doc.is_object()) throw DomainError("expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw DomainError("unknown key '" + key + "'");
    }
}

inline std::vector<double> number_array(const nlohmann::json& doc, const char* key) {
    const auto& arr = doc.at(key);
    if (!arr.is_array()) throw DomainError(std::string(key) + " must be an array");
    std::vector<double> out;
    for (const auto& v : arr) {
        if (!v.is_number()) throw DomainError(std::string(key) + " must contain numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace detail

inline BanditInstance instance_from_json(const nlohmann::json& doc) {
    detail::reject_unknown_keys(doc, {"n", "means", "sigma2", "kind"});
    if (!doc.contains("means") || !doc.contains("sigma2"))
        throw DomainError("instance document needs 'means' and 'sigma2'");
    BanditInstance inst;
    inst.means = detail::number_array(doc, "means");
    inst.sigma2 = detail::number_array(doc, "sigma2");
    if (doc.contains("n") && doc.at("n").get<std::size_t>() != inst.means.size())
        throw DomainError("'n' does not match the number of means");
    if (!doc.contains("kind")) {
        inst.kind.assign(inst.means.size(), ArmKind::gaussian);
    } else if (doc.at("kind").is_string()) {
        inst.kind.assign(inst.means.size(), parse_arm_kind(doc.at("kind").get<std::string>()));
    } else {
        for (const auto& k : doc.at("kind")) inst.kind.push_back(parse_arm_kind(k.get<std::string>()));
    }
    inst.validate();
    return inst;
}

inline nlohmann::json profile_to_json(const VarianceProfile& profile) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : profile.runs()) runs.push_back(nlohmann::json::array({r.value, r.count}));
    return nlohmann::json{{"sigma2_rle", runs}};
}

/// Accepts an instance document, {"sigma2": [...]} or {"sigma2_rle": [...]}.
inline VarianceProfile profile_from_json(const nlohmann::json& doc) {
    if (doc.contains("sigma2_rle")) {
        detail::reject_unknown_keys(doc, {"n", "sigma2_rle"});
        std::vector<VarianceRun> runs;
        for (const auto& pair : doc.at("sigma2_rle")) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number_unsigned())
                throw DomainError("sigma2_rle entries must be [value, count] pairs");
            runs.push_back({pair[0].get<double>(), pair[1].get<std::uint64_t>()});
        }
        return VarianceProfile(std::move(runs));
    }
    if (doc.contains("means")) return VarianceProfile::from_vector(instance_from_json(doc).sigma2);
    detail::reject_unknown_keys(doc, {"n", "sigma2"});
    if (!doc.contains("sigma2")) throw DomainError("variance document needs 'sigma2' or 'sigma2_rle'");
    return VarianceProfile::from_vector(detail::number_array(doc, "sigma2"));
}

}  // namespace hetvar

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hetvar/numeric.hpp"

namespace hetvar {

using ArmIndex = std::size_t;
using ArmSet = std::vector<ArmIndex>;

/// Inputs shared by every algorithm and complexity evaluator: accuracy epsilon,
/// confidence delta, output size m and the known variance proxies of the n arms.
class ProblemSpec {
public:
    ProblemSpec(double epsilon, double delta, std::size_t m, std::vector<double> sigma2)
        : epsilon_(epsilon), delta_(delta), m_(m), sigma2_(std::move(sigma2)) {
        if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_))
            throw DomainError("epsilon must be a positive finite number");
        if (!(delta_ > 0.0 && delta_ < 1.0)) throw DomainError("delta must lie in (0, 1)");
        if (m_ < 1) throw DomainError("m must be at least 1");
        if (sigma2_.empty()) throw DomainError("at least one arm is required");
        for (double s : sigma2_) {
            if (!(s > 0.0) || !std::isfinite(s))
                throw DomainError("every variance proxy must be positive and finite");
        }
    }

    [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] std::size_t m() const noexcept { return m_; }
    [[nodiscard]] std::size_t n() const noexcept { return sigma2_.size(); }
    [[nodiscard]] std::span<const double> sigma2() const noexcept { return sigma2_; }

    /// n > 2m and delta < 0.1: the regime in which the complexity
    /// characterization is stated. Algorithms run regardless.
    [[nodiscard]] bool theorem_regime() const noexcept { return n() > 2 * m_ && delta_ < 0.1; }

private:
    double epsilon_;
    double delta_;
    std::size_t m_;
    std::vector<double> sigma2_;
};

// -----------------------------------------------------------------------------
// Entropy of a positive vector after normalisation.
// -----------------------------------------------------------------------------

namespace detail {

inline double entropy_impl(std::span<const double> a, bool allow_zero) {
    CompensatedSum total;
    std::size_t support = 0;
    for (double x : a) {
        if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0))
            throw DomainError("entropy requires positive finite entries");
        if (x > 0.0) {
            total.add(x);
            ++support;
        }
    }
    if (support <= 1) return 0.0;
    const double s = total.value();
    CompensatedSum h;
    for (double x : a) {
        if (x > 0.0) {
            const double p = x / s;
            h.add(-p * std::log(p));
        }
    }
    return std::clamp(h.value(), 0.0, std::log(static_cast<double>(support)));
}

}  // namespace detail

/// Ent(a) = -sum p_i ln p_i with p = a / sum(a). Entries must be positive.
inline double entropy(std::span<const double> a) {
    if (a.empty()) throw DomainError("entropy of an empty vector is undefined");
    return detail::entropy_impl(a, false);
}

/// Same as entropy() but zero entries are allowed and contribute nothing
/// (x ln x -> 0). An empty or all-zero vector has entropy 0.
inline double entropy_nonneg(std::span<const double> a) { return detail::entropy_impl(a, true); }

inline std::vector<double> gather(std::span<const double> values, std::span<const ArmIndex> idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (ArmIndex i : idx) out.push_back(values[i]);
    return out;
}

inline double sum_over(std::span<const double> values, std::span<const ArmIndex> idx) {
    CompensatedSum acc;
    for (ArmIndex i : idx) acc.add(values[i]);
    return acc.value();
}

// -----------------------------------------------------------------------------
// Dyadic variance grouping.
// -----------------------------------------------------------------------------

enum class GrMode { heuristic, exact };

inline std::string_view to_string(GrMode mode) {
    return mode == GrMode::exact ? "exact" : "heuristic";
}

inline GrMode parse_gr_mode(std::string_view s) {
    if (s == "exact") return GrMode::exact;
    if (s == "heuristic") return GrMode::heuristic;
    throw DomainError("unknown G^r mode '" + std::string(s) + "' (expected exact|heuristic)");
}

/// Band j (1-based) with 2^(j-1) <= sigma2 / sigma_min2 < 2^j.
inline std::size_t band_index(double sigma2, double sigma_min2) {
    int exponent = 0;
    std::frexp(sigma2 / sigma_min2, &exponent);  // ratio = f * 2^exponent, f in [0.5, 1)
    return static_cast<std::size_t>(std::max(exponent, 1));
}

struct VarianceGrouping {
    /// groups[j - 1] holds G_j. Empty bands are kept so indices line up.
    std::vector<ArmSet> groups;
    double sigma_min2 = 0.0;
    ArmSet g_more;
    ArmSet g_less;
    ArmSet g_reduced;
    /// L: the 2m largest-variance arms of g_reduced; empty when |g_reduced| < 2m.
    ArmSet top_reduced;

    [[nodiscard]] std::size_t band_count() const noexcept { return groups.size(); }
    [[nodiscard]] bool has_top_reduced() const noexcept { return !top_reduced.empty(); }
};

inline VarianceGrouping partition_groups(std::span<const double> sigma2) {
    if (sigma2.empty()) throw DomainError("cannot group an empty variance vector");
    for (double s : sigma2) {
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("variances must be positive and finite");
    }
    VarianceGrouping g;
    g.sigma_min2 = *std::min_element(sigma2.begin(), sigma2.end());
    for (ArmIndex i = 0; i < sigma2.size(); ++i) {
        const std::size_t j = band_index(sigma2[i], g.sigma_min2);
        if (g.groups.size() < j) g.groups.resize(j);
        g.groups[j - 1].push_back(i);
    }
    return g;
}

/// (G^m, G^l): bands with more than 2m arms versus the rest.
inline std::pair<ArmSet, ArmSet> split_gm_gl(const VarianceGrouping& grouping, std::size_t m) {
    ArmSet more, less;
    for (const auto& group : grouping.groups) {
        auto& dst = group.size() > 2 * m ? more : less;
        dst.insert(dst.end(), group.begin(), group.end());
    }
    std::sort(more.begin(), more.end());
    std::sort(less.begin(), less.end());
    return {std::move(more), std::move(less)};
}

/// The `count` largest-variance members of `arms`, ties to the lower index.
/// Result is sorted by index.
inline ArmSet largest_variance_arms(std::span<const ArmIndex> arms, std::span<const double> sigma2,
                                    std::size_t count) {
    ArmSet order(arms.begin(), arms.end());
    std::stable_sort(order.begin(), order.end(), [&](ArmIndex a, ArmIndex b) {
        if (sigma2[a] != sigma2[b]) return sigma2[a] > sigma2[b];
        return a < b;
    });
    order.resize(std::min(count, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

/// Number of candidate reduced sets the exact search would visit.
inline double exact_gr_candidates(const VarianceGrouping& grouping, std::size_t m) {
    double count = 1.0;
    for (const auto& group : grouping.groups) {
        if (group.size() > 2 * m) count *= binomial(double(group.size()), double(2 * m));
    }
    return count;
}

namespace detail {

inline void check_reduced_entropy(double ent, std::size_t m) {
    // Upper bound 8 ln m holds for any reduced set once m >= 2.
    if (m >= 2 && ent > 8.0 * std::log(double(m)) + 1e-12)
        throw std::logic_error("internal: entropy of reduced arm set exceeds 8 ln m");
}

inline ArmSet select_gr_exact(const VarianceGrouping& grouping, std::span<const double> sigma2,
                              std::size_t m) {
    require_enumeration_budget(exact_gr_candidates(grouping, m), "exact G^r selection",
                               "use --gr-mode heuristic");
    ArmSet fixed;
    std::vector<const ArmSet*> oversized;
    for (const auto& group : grouping.groups) {
        if (group.size() > 2 * m) {
            oversized.push_back(&group);
        } else {
            fixed.insert(fixed.end(), group.begin(), group.end());
        }
    }
    constexpr double kTieTolerance = 1e-12;
    ArmSet best;
    double best_ent = -1.0;
    ArmSet current = fixed;

    auto consider = [&]() {
        ArmSet cand = current;
        std::sort(cand.begin(), cand.end());
        const double ent = entropy(gather(sigma2, cand));
        if (ent > best_ent + kTieTolerance ||
            (std::fabs(ent - best_ent) <= kTieTolerance && cand < best)) {
            best_ent = std::max(ent, best_ent);
            best = std::move(cand);
        }
    };

    auto recurse = [&](auto&& self, std::size_t level) -> void {
        if (level == oversized.size()) {
            consider();
            return;
        }
        const ArmSet& group = *oversized[level];
        const std::size_t base = current.size();
        for_each_combination(group.size(), 2 * m, [&](const std::vector<std::size_t>& pick) {
            current.resize(base);
            for (std::size_t p : pick) current.push_back(group[p]);
            self(self, level + 1);
        });
        current.resize(base);
    };
    recurse(recurse, 0);
    return best;
}

}  // namespace detail

/// Reduced arm set G^r: every band with at most 2m arms in full, and 2m
/// members of each larger band. Heuristic keeps the 2m largest variances;
/// exact searches all choices for maximal entropy (lexicographically
/// smallest index set on ties).
inline ArmSet select_gr(const VarianceGrouping& grouping, std::span<const double> sigma2,
                        std::size_t m, GrMode mode = GrMode::heuristic) {
    if (m < 1) throw DomainError("m must be at least 1");
    ArmSet reduced;
    if (mode == GrMode::exact) {
        reduced = detail::select_gr_exact(grouping, sigma2, m);
    } else {
        for (const auto& group : grouping.groups) {
            if (group.size() > 2 * m) {
                const ArmSet top = largest_variance_arms(group, sigma2, 2 * m);
                reduced.insert(reduced.end(), top.begin(), top.end());
            } else {
                reduced.insert(reduced.end(), group.begin(), group.end());
            }
        }
        std::sort(reduced.begin(), reduced.end());
    }
    detail::check_reduced_entropy(entropy(gather(sigma2, reduced)), m);
    return reduced;
}

/// Full grouping: bands, G^m, G^l, G^r and L.
inline VarianceGrouping make_grouping(std::span<const double> sigma2, std::size_t m,
                                      GrMode mode = GrMode::heuristic) {
    VarianceGrouping g = partition_groups(sigma2);
    auto [more, less] = split_gm_gl(g, m);
    g.g_more = std::move(more);
    g.g_less = std::move(less);
    g.g_reduced = select_gr(g, sigma2, m, mode);
    if (g.g_reduced.size() >= 2 * m) g.top_reduced = largest_variance_arms(g.g_reduced, sigma2, 2 * m);
    return g;
}

// -----------------------------------------------------------------------------
// Three-term worst-case complexity expression.
// -----------------------------------------------------------------------------

struct ComplexityTerms {
    double term_confidence = 0.0;  ///< sum_[n] sigma^2 / eps^2 * ln(1/delta)
    double term_homog = 0.0;       ///< sum_{G^m} sigma^2 / eps^2 * ln m
    double term_heterog = 0.0;     ///< sum_{G^l} sigma^2 / eps^2 * Ent(sigma^2_{G^r})
    double total = 0.0;
};

/// Terms plus the grouping summary reported next to them.
struct ComplexityReport {
    ComplexityTerms terms;
    GrMode mode = GrMode::heuristic;
    std::size_t bands = 0;
    double gm_size = 0;
    double gl_size = 0;
    double gr_size = 0;
    double ent_gr = 0.0;
    double ent_gl = 0.0;
};

inline ComplexityTerms assemble_terms(double eps, double delta, double m, double sum_all,
                                      double sum_more, double sum_less, double ent_gr) {
    ComplexityTerms t;
    const double e2 = eps * eps;
    t.term_confidence = sum_all / e2 * std::log(1.0 / delta);
    t.term_homog = sum_more > 0.0 ? sum_more / e2 * std::log(m) : 0.0;
    t.term_heterog = sum_less > 0.0 ? sum_less / e2 * ent_gr : 0.0;
    t.total = t.term_confidence + t.term_homog + t.term_heterog;
    return t;
}

inline ComplexityReport complexity_report(const ProblemSpec& spec, GrMode mode = GrMode::heuristic) {
    const auto s2 = spec.sigma2();
    const VarianceGrouping g = make_grouping(s2, spec.m(), mode);
    ComplexityReport r;
    r.mode = mode;
    r.bands = g.band_count();
    r.gm_size = double(g.g_more.size());
    r.gl_size = double(g.g_less.size());
    r.gr_size = double(g.g_reduced.size());
    r.ent_gr = entropy(gather(s2, g.g_reduced));
    r.ent_gl = g.g_less.empty() ? 0.0 : entropy(gather(s2, g.g_less));
    r.terms = assemble_terms(spec.epsilon(), spec.delta(), double(spec.m()), compensated_total(s2),
                             sum_over(s2, g.g_more), sum_over(s2, g.g_less), r.ent_gr);
    return r;
}

inline ComplexityTerms complexity_terms(const ProblemSpec& spec, GrMode mode = GrMode::heuristic) {
    return complexity_report(spec, mode).terms;
}

}  // namespace hetvar

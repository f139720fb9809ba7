#pragma once

// Run-length encoded variance profiles. Some instance families have far more
// arms than can be stored (2^(k^2) for the illustrative family), so grouping,
// entropy and the complexity terms are also available on (value, count) runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hetvar/core.hpp"

namespace hetvar {

struct VarianceRun {
    double value = 0.0;
    std::uint64_t count = 0;

    friend bool operator==(const VarianceRun&, const VarianceRun&) = default;
};

class VarianceProfile {
public:
    VarianceProfile() = default;

    explicit VarianceProfile(std::vector<VarianceRun> runs) : runs_(std::move(runs)) {
        if (runs_.empty()) throw DomainError("variance profile has no runs");
        for (const auto& r : runs_) {
            if (!(r.value > 0.0) || !std::isfinite(r.value))
                throw DomainError("run variance must be positive and finite");
            if (r.count == 0) throw DomainError("run count must be positive");
        }
    }

    /// One run per arm, preserving arm order.
    static VarianceProfile from_vector(std::span<const double> sigma2) {
        std::vector<VarianceRun> runs;
        runs.reserve(sigma2.size());
        for (double s : sigma2) runs.push_back({s, 1});
        return VarianceProfile(std::move(runs));
    }

    [[nodiscard]] std::span<const VarianceRun> runs() const noexcept { return runs_; }

    /// Arm count as a double: the exact integer may exceed 64 bits.
    [[nodiscard]] double total_arms() const noexcept {
        double n = 0;
        for (const auto& r : runs_) n += double(r.count);
        return n;
    }

    [[nodiscard]] bool materializable(double limit = 512) const noexcept {
        return total_arms() <= limit;
    }

    [[nodiscard]] std::vector<double> materialize(double limit = 512) const {
        if (!materializable(limit))
            throw DomainError("profile too large to materialize (" + std::to_string(total_arms()) +
                              " arms, limit " + std::to_string(limit) + ")");
        std::vector<double> out;
        for (const auto& r : runs_) out.insert(out.end(), r.count, r.value);
        return out;
    }

private:
    std::vector<VarianceRun> runs_;
};

inline double run_count(std::span<const VarianceRun> runs) {
    double n = 0;
    for (const auto& r : runs) n += double(r.count);
    return n;
}

inline double run_sum(std::span<const VarianceRun> runs) {
    CompensatedSum acc;
    for (const auto& r : runs) acc.add(double(r.count) * r.value);
    return acc.value();
}

/// Entropy of the expanded vector described by `runs`.
inline double entropy(std::span<const VarianceRun> runs) {
    if (runs.empty()) throw DomainError("entropy of an empty vector is undefined");
    const double s = run_sum(runs);
    const double n = run_count(runs);
    if (n <= 1) return 0.0;
    CompensatedSum h;
    for (const auto& r : runs) {
        const double p = r.value / s;
        h.add(-double(r.count) * p * std::log(p));
    }
    return std::clamp(h.value(), 0.0, std::log(n));
}

struct RunGrouping {
    std::vector<std::vector<VarianceRun>> groups;
    double sigma_min2 = 0.0;
    std::vector<VarianceRun> g_more;
    std::vector<VarianceRun> g_less;
    std::vector<VarianceRun> g_reduced;
    std::vector<VarianceRun> top_reduced;

    [[nodiscard]] double group_size(std::size_t j) const { return run_count(groups.at(j)); }
};

/// The `count` arms of largest variance among `runs` (stable on ties),
/// splitting the last run if needed.
inline std::vector<VarianceRun> largest_variance_runs(std::span<const VarianceRun> runs, double count) {
    std::vector<VarianceRun> order(runs.begin(), runs.end());
    std::stable_sort(order.begin(), order.end(),
                     [](const VarianceRun& a, const VarianceRun& b) { return a.value > b.value; });
    std::vector<VarianceRun> out;
    double left = count;
    for (const auto& r : order) {
        if (left <= 0) break;
        // double(count) may round up to 2^64; keep the exact count when whole.
        if (left >= double(r.count)) {
            out.push_back(r);
            left -= double(r.count);
        } else {
            out.push_back({r.value, static_cast<std::uint64_t>(left)});
            left = 0;
        }
    }
    return out;
}

inline RunGrouping partition_groups(const VarianceProfile& profile) {
    RunGrouping g;
    const auto runs = profile.runs();
    g.sigma_min2 = std::min_element(runs.begin(), runs.end(), [](auto& a, auto& b) {
                       return a.value < b.value;
                   })->value;
    for (const auto& r : runs) {
        const std::size_t j = band_index(r.value, g.sigma_min2);
        if (g.groups.size() < j) g.groups.resize(j);
        g.groups[j - 1].push_back(r);
    }
    return g;
}

inline RunGrouping make_grouping(const VarianceProfile& profile, std::size_t m,
                                 GrMode mode = GrMode::heuristic) {
    if (m < 1) throw DomainError("m must be at least 1");
    RunGrouping g = partition_groups(profile);
    const double two_m = 2.0 * double(m);
    if (mode == GrMode::exact) {
        double candidates = 1.0;
        for (const auto& group : g.groups) {
            const double size = run_count(group);
            if (size > two_m) candidates *= binomial(size, two_m);
        }
        require_enumeration_budget(candidates, "exact G^r selection", "use --gr-mode heuristic");
    }
    for (const auto& group : g.groups) {
        const double size = run_count(group);
        auto& dst = size > two_m ? g.g_more : g.g_less;
        dst.insert(dst.end(), group.begin(), group.end());
    }
    if (mode == GrMode::exact) {
        // Within the budget the profile is small: reuse the index-level search.
        const std::vector<double> flat = profile.materialize(kEnumerationBudget);
        const VarianceGrouping vg = make_grouping(flat, m, GrMode::exact);
        for (ArmIndex i : vg.g_reduced) g.g_reduced.push_back({flat[i], 1});
    } else {
        for (const auto& group : g.groups) {
            if (run_count(group) > two_m) {
                const auto top = largest_variance_runs(group, two_m);
                g.g_reduced.insert(g.g_reduced.end(), top.begin(), top.end());
            } else {
                g.g_reduced.insert(g.g_reduced.end(), group.begin(), group.end());
            }
        }
    }
    detail::check_reduced_entropy(entropy(g.g_reduced), m);
    if (run_count(g.g_reduced) >= two_m) g.top_reduced = largest_variance_runs(g.g_reduced, two_m);
    return g;
}

inline ComplexityReport complexity_report(const VarianceProfile& profile, double epsilon, double delta,
                                          std::size_t m, GrMode mode = GrMode::heuristic) {
    // Validates epsilon/delta/m the same way a materialized spec would.
    [[maybe_unused]] const ProblemSpec validated(epsilon, delta, m, {1.0});
    const RunGrouping g = make_grouping(profile, m, mode);
    ComplexityReport r;
    r.mode = mode;
    r.bands = g.groups.size();
    r.gm_size = run_count(g.g_more);
    r.gl_size = run_count(g.g_less);
    r.gr_size = run_count(g.g_reduced);
    r.ent_gr = entropy(g.g_reduced);
    r.ent_gl = g.g_less.empty() ? 0.0 : entropy(g.g_less);
    r.terms = assemble_terms(epsilon, delta, double(m), run_sum(profile.runs()), run_sum(g.g_more),
                             run_sum(g.g_less), r.ent_gr);
    return r;
}

}  // namespace hetvar

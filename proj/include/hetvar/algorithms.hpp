#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hetvar/core.hpp"
#include "hetvar/profile.hpp"

namespace hetvar {

// -----------------------------------------------------------------------------
// Reward sources.
// -----------------------------------------------------------------------------

/// pull(arm) returns one fresh reward of the given arm.
template <class S>
concept RewardSampler = requires(S& s, ArmIndex arm) {
    { s.pull(arm) } -> std::convertible_to<double>;
};

/// A sampler that can also return the sum of `count` fresh rewards in one call.
template <class S>
concept BatchRewardSampler = RewardSampler<S> && requires(S& s, ArmIndex arm, std::uint64_t count) {
    { s.pull_sum(arm, count) } -> std::convertible_to<double>;
};

template <RewardSampler S>
double draw_sum(S& sampler, ArmIndex arm, std::uint64_t count) {
    if constexpr (BatchRewardSampler<S>) {
        return sampler.pull_sum(arm, count);
    } else {
        CompensatedSum acc;
        for (std::uint64_t i = 0; i < count; ++i) acc.add(sampler.pull(arm));
        return acc.value();
    }
}

// -----------------------------------------------------------------------------
// Results.
// -----------------------------------------------------------------------------

struct RoundTrace {
    std::string phase;          ///< "wnelim", "medelim" or "adapted"
    std::size_t group = 0;      ///< 1-based variance band for V-MedElim sub-calls, else 0
    std::size_t round = 0;      ///< 1-based round within the phase
    double epsilon = 0.0;       ///< accuracy used for this round's budget
    double delta = 0.0;         ///< confidence used for this round's budget
    ArmSet active;
    std::vector<std::uint64_t> pulls;  ///< aligned with `active`
    ArmSet survivors;
};

struct RunResult {
    ArmSet selected;
    std::uint64_t total_samples = 0;
    std::map<ArmIndex, std::uint64_t> pulls_per_arm;
    std::vector<RoundTrace> rounds;
    /// V-MedElim only: MedElim survivors of each band (index j-1 for band j).
    std::vector<ArmSet> group_survivors;

    void record(ArmIndex arm, std::uint64_t n) {
        pulls_per_arm[arm] += n;
        total_samples += n;
    }

    void absorb(const RunResult& sub) {
        for (const auto& [arm, n] : sub.pulls_per_arm) record(arm, n);
        rounds.insert(rounds.end(), sub.rounds.begin(), sub.rounds.end());
    }
};

// -----------------------------------------------------------------------------
// Budgets and schedules.
// -----------------------------------------------------------------------------

enum class Rounding { ceiling, none };

inline double apply_rounding(double pulls, Rounding rounding) {
    return rounding == Rounding::ceiling ? std::ceil(pulls) : pulls;
}

inline std::uint64_t to_pull_count(double pulls) {
    const double c = std::ceil(pulls);
    if (!std::isfinite(c) || c > 9.0e18) throw DomainError("per-arm sample budget overflows 64 bits");
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(c));
}

/// Accuracy of elimination round l: (eps / 3) (3/4)^l. Sums to eps over l >= 1.
inline double round_epsilon(double epsilon, std::size_t round) {
    return epsilon / 3.0 * std::pow(0.75, double(round));
}

/// MedElim confidence of round l: (delta / 4) / 2^l.
inline double medelim_round_delta(double delta, std::size_t round) {
    return delta / 4.0 / std::ldexp(1.0, int(round));
}

/// Adapted-MedElim confidence of round l: r delta / 2^l.
inline double adapted_round_delta(double delta, double r_under, std::size_t round) {
    return r_under * delta / std::ldexp(1.0, int(round));
}

/// 2 sigma^2 / (eps_l / 2)^2 * ln(m / delta_l), before rounding.
inline double round_pulls(double sigma2, double eps_round, double delta_round, double m) {
    const double half = eps_round / 2.0;
    return 2.0 * sigma2 / (half * half) * std::log(m / delta_round);
}

struct WnelimBudget {
    std::vector<double> omega;   ///< per-arm confidence share delta sigma_i^2 / sum sigma^2
    std::vector<double> exact;   ///< pre-ceiling pull counts
    std::vector<std::uint64_t> pulls;
    double exact_total = 0.0;
};

inline void validate_accuracy(double epsilon, double delta) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
}

/// Per-arm pulls of weighted naive elimination: omega_i = delta sigma_i^2 / S,
/// t_i = 2 sigma_i^2 / (eps/2)^2 ln(1 / omega_i).
inline WnelimBudget wnelim_budget(double epsilon, double delta, std::span<const double> sigma2_arms) {
    validate_accuracy(epsilon, delta);
    if (sigma2_arms.empty()) throw ContractError("weighted naive elimination needs at least one arm");
    const double total = compensated_total(sigma2_arms);
    WnelimBudget b;
    CompensatedSum acc;
    const double half = epsilon / 2.0;
    for (double s2 : sigma2_arms) {
        if (!(s2 > 0.0)) throw DomainError("variances must be positive");
        const double omega = delta * (s2 / total);
        const double t = 2.0 * s2 / (half * half) * std::log(1.0 / omega);
        b.omega.push_back(omega);
        b.exact.push_back(t);
        b.pulls.push_back(to_pull_count(t));
        acc.add(t);
    }
    b.exact_total = acc.value();
    return b;
}

namespace detail {

inline void check_arms(std::span<const ArmIndex> arms, std::span<const double> sigma2) {
    if (arms.size() != sigma2.size())
        throw ContractError("arm list and variance list differ in length");
    for (double s2 : sigma2) {
        if (!(s2 > 0.0) || !std::isfinite(s2)) throw DomainError("variances must be positive and finite");
    }
}

/// Positions (into `active`) of the k largest sample means; ties to the lower
/// arm index. Returned in increasing arm order.
inline std::vector<std::size_t> top_by_mean(std::span<const ArmIndex> active,
                                            std::span<const double> means, std::size_t k) {
    std::vector<std::size_t> pos(active.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
    std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
        if (means[a] != means[b]) return means[a] > means[b];
        return active[a] < active[b];
    });
    pos.resize(std::min(k, pos.size()));
    std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) { return active[a] < active[b]; });
    return pos;
}

/// Pulls every active arm its budget of fresh samples and returns sample means.
template <RewardSampler S>
std::vector<double> sample_round(std::span<const ArmIndex> active, std::span<const std::uint64_t> pulls,
                                 S& sampler, RunResult& result) {
    std::vector<double> means(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
        means[i] = draw_sum(sampler, active[i], pulls[i]) / double(pulls[i]);
        result.record(active[i], pulls[i]);
    }
    return means;
}

}  // namespace detail

// -----------------------------------------------------------------------------
// Weighted naive elimination.
// -----------------------------------------------------------------------------

template <RewardSampler S>
RunResult wnelim(double epsilon, double delta, std::size_t m, std::span<const ArmIndex> arms,
                 std::span<const double> sigma2_arms, S& sampler) {
    detail::check_arms(arms, sigma2_arms);
    if (m < 1 || arms.size() < m)
        throw ContractError("weighted naive elimination needs at least m >= 1 arms");
    const WnelimBudget budget = wnelim_budget(epsilon, delta, sigma2_arms);
    RunResult result;
    const std::vector<double> means = detail::sample_round(arms, budget.pulls, sampler, result);
    RoundTrace trace{"wnelim", 0, 1, epsilon, delta, ArmSet(arms.begin(), arms.end()), budget.pulls, {}};
    for (std::size_t p : detail::top_by_mean(arms, means, m)) result.selected.push_back(arms[p]);
    trace.survivors = result.selected;
    result.rounds.push_back(std::move(trace));
    return result;
}

// -----------------------------------------------------------------------------
// Median elimination with output size 2m.
// -----------------------------------------------------------------------------

/// Survivor-set sizes s_1 = n, s_{l+1} = max(floor(s_l / 2), 2m), stopping
/// at the first size <= 2m.
inline std::vector<std::size_t> medelim_survivor_sizes(std::size_t n, std::size_t two_m) {
    std::vector<std::size_t> sizes{n};
    while (sizes.back() > two_m) sizes.push_back(std::max(sizes.back() / 2, two_m));
    return sizes;
}

template <RewardSampler S>
RunResult medelim(double epsilon, double delta, std::size_t two_m, std::span<const ArmIndex> arms,
                  std::span<const double> sigma2_arms, S& sampler) {
    validate_accuracy(epsilon, delta);
    detail::check_arms(arms, sigma2_arms);
    if (two_m < 2 || two_m % 2 != 0) throw ContractError("median elimination needs an even 2m >= 2");
    const double m = double(two_m / 2);

    RunResult result;
    std::vector<std::size_t> active(arms.size());  // positions into arms
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;

    for (std::size_t round = 1; active.size() > two_m; ++round) {
        const double eps_l = round_epsilon(epsilon, round);
        const double delta_l = medelim_round_delta(delta, round);
        RoundTrace trace{"medelim", 0, round, eps_l, delta_l, {}, {}, {}};
        for (std::size_t p : active) {
            trace.active.push_back(arms[p]);
            trace.pulls.push_back(to_pull_count(round_pulls(sigma2_arms[p], eps_l, delta_l, m)));
        }
        const std::vector<double> means = detail::sample_round(trace.active, trace.pulls, sampler, result);
        const std::size_t keep = std::max(active.size() / 2, two_m);
        std::vector<std::size_t> next;
        for (std::size_t q : detail::top_by_mean(trace.active, means, keep)) next.push_back(active[q]);
        active = std::move(next);
        for (std::size_t p : active) trace.survivors.push_back(arms[p]);
        result.rounds.push_back(std::move(trace));
    }
    for (std::size_t p : active) result.selected.push_back(arms[p]);
    std::sort(result.selected.begin(), result.selected.end());
    return result;
}

// -----------------------------------------------------------------------------
// Variance-grouped median elimination.
// -----------------------------------------------------------------------------

template <RewardSampler S>
RunResult vmedelim(const ProblemSpec& spec, S& sampler) {
    if (spec.n() < spec.m()) throw ContractError("V-MedElim needs n >= m");
    const auto s2 = spec.sigma2();
    const VarianceGrouping grouping = partition_groups(s2);
    const double eps = spec.epsilon() / 2.0;
    const double delta = spec.delta() / 2.0;

    RunResult result;
    ArmSet pooled;
    for (std::size_t j = 0; j < grouping.groups.size(); ++j) {
        const ArmSet& group = grouping.groups[j];
        if (group.empty()) {
            result.group_survivors.emplace_back();
            continue;
        }
        RunResult sub = medelim(eps, delta, 2 * spec.m(), group, gather(s2, group), sampler);
        for (auto& r : sub.rounds) r.group = j + 1;
        result.absorb(sub);
        result.group_survivors.push_back(sub.selected);
        pooled.insert(pooled.end(), sub.selected.begin(), sub.selected.end());
    }
    std::sort(pooled.begin(), pooled.end());
    if (pooled.size() < spec.m()) throw std::logic_error("internal: V-MedElim kept fewer than m arms");

    RunResult final_round = wnelim(eps, delta, spec.m(), pooled, gather(s2, pooled), sampler);
    result.absorb(final_round);
    result.selected = final_round.selected;
    return result;
}

// -----------------------------------------------------------------------------
// Adapted median elimination: halve the variance mass, not the arm count.
// -----------------------------------------------------------------------------

struct HSchedule {
    std::vector<std::size_t> h;  ///< h[l-1] = h_l for l = 1..l*
    std::size_t ell_star = 1;
    std::size_t r_num = 1;       ///< r_under = r_num / r_den
    std::size_t r_den = 1;
    double r_under = 1.0;
};

/// h_l = max{ j >= m : sum of the j largest variances <= 2^-(l-1) sum sigma^2 },
/// or m when no such j exists; l* is the first l with h_l = m.
inline HSchedule h_schedule(std::span<const double> sigma2, std::size_t m) {
    if (m < 1 || sigma2.size() < m) throw ContractError("h schedule needs n >= m >= 1");
    std::vector<double> sorted(sigma2.begin(), sigma2.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::vector<double> prefix(sorted.size() + 1, 0.0);
    CompensatedSum acc;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        acc.add(sorted[i]);
        prefix[i + 1] = acc.value();
    }
    const double total = prefix.back();

    HSchedule out;
    for (std::size_t l = 1;; ++l) {
        const double threshold = std::ldexp(total, -int(l - 1));
        std::size_t h = m;
        for (std::size_t j = sorted.size(); j >= m; --j) {
            if (prefix[j] <= threshold) {
                h = j;
                break;
            }
            if (j == m) break;
        }
        out.h.push_back(h);
        if (h == m) break;
    }
    out.ell_star = out.h.size();
    for (std::size_t l = 0; l + 1 < out.h.size(); ++l) {
        const double r = double(out.h[l + 1]) / double(out.h[l]);
        if (r < out.r_under) {
            out.r_under = r;
            out.r_num = out.h[l + 1];
            out.r_den = out.h[l];
        }
    }
    return out;
}

template <RewardSampler S>
RunResult adapted_medelim(double epsilon, double delta, std::size_t m, std::span<const ArmIndex> arms,
                          std::span<const double> sigma2_arms, S& sampler) {
    validate_accuracy(epsilon, delta);
    detail::check_arms(arms, sigma2_arms);
    if (m < 1 || arms.size() < m) throw ContractError("adapted median elimination needs |arms| >= m >= 1");
    const HSchedule sched = h_schedule(sigma2_arms, m);

    RunResult result;
    std::vector<std::size_t> active(arms.size());
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;

    for (std::size_t round = 1; round < sched.ell_star; ++round) {
        const double eps_l = round_epsilon(epsilon, round);
        const double delta_l = adapted_round_delta(delta, sched.r_under, round);
        RoundTrace trace{"adapted", 0, round, eps_l, delta_l, {}, {}, {}};
        for (std::size_t p : active) {
            trace.active.push_back(arms[p]);
            trace.pulls.push_back(to_pull_count(round_pulls(sigma2_arms[p], eps_l, delta_l, double(m))));
        }
        const std::vector<double> means = detail::sample_round(trace.active, trace.pulls, sampler, result);
        std::vector<std::size_t> next;
        for (std::size_t q : detail::top_by_mean(trace.active, means, sched.h[round])) next.push_back(active[q]);
        active = std::move(next);
        for (std::size_t p : active) trace.survivors.push_back(arms[p]);
        result.rounds.push_back(std::move(trace));
    }
    for (std::size_t p : active) result.selected.push_back(arms[p]);
    std::sort(result.selected.begin(), result.selected.end());
    return result;
}

// -----------------------------------------------------------------------------
// Data-independent sample accounting for V-MedElim.
// -----------------------------------------------------------------------------

namespace detail {

struct GroupCost {
    double samples = 0.0;
    std::vector<VarianceRun> worst_survivors;
};

/// MedElim rounds on one band, charging each round as if the largest
/// variances had survived; exact when the band is homogeneous.
inline GroupCost medelim_cost(std::span<const VarianceRun> group, double epsilon, double delta,
                              double two_m, Rounding rounding) {
    GroupCost out;
    double size = run_count(group);
    std::vector<VarianceRun> active = largest_variance_runs(group, size);
    const double m = two_m / 2.0;
    CompensatedSum cost;
    for (std::size_t round = 1; size > two_m; ++round) {
        const double eps_l = round_epsilon(epsilon, round);
        const double delta_l = medelim_round_delta(delta, round);
        for (const auto& r : active) {
            cost.add(double(r.count) * apply_rounding(round_pulls(r.value, eps_l, delta_l, m), rounding));
        }
        size = std::max(std::floor(size / 2.0), two_m);
        active = largest_variance_runs(active, size);
    }
    out.samples = cost.value();
    out.worst_survivors = std::move(active);
    return out;
}

}  // namespace detail

/// Upper bound on V-MedElim's total sample count over every possible reward
/// realisation (pull counts depend on which arms survive, never on reward
/// values directly). Equals the actual total when every band is homogeneous.
/// With Rounding::none the per-arm budgets are left fractional.
inline double vmedelim_sample_bound(const VarianceProfile& profile, double epsilon, double delta,
                                    std::size_t m, Rounding rounding = Rounding::ceiling) {
    validate_accuracy(epsilon, delta);
    if (m < 1 || profile.total_arms() < double(m)) throw ContractError("V-MedElim needs n >= m >= 1");
    const double eps = epsilon / 2.0;
    const double dlt = delta / 2.0;
    const double two_m = 2.0 * double(m);
    const RunGrouping grouping = partition_groups(profile);

    CompensatedSum total;
    std::vector<std::vector<VarianceRun>> survivors;
    double mass_bound = 0.0;
    for (const auto& group : grouping.groups) {
        if (group.empty()) continue;
        detail::GroupCost gc = detail::medelim_cost(group, eps, dlt, two_m, rounding);
        total.add(gc.samples);
        mass_bound += run_sum(gc.worst_survivors);
        survivors.push_back(std::move(gc.worst_survivors));
    }
    // The final WNElim budget is increasing in the pooled variance mass; bound
    // that mass, then charge each band its costliest possible survivors.
    const double half = eps / 2.0;
    for (std::size_t j = 0, b = 0; j < grouping.groups.size(); ++j) {
        const auto& group = grouping.groups[j];
        if (group.empty()) continue;
        const double keep = run_count(survivors[b++]);
        std::vector<std::pair<double, VarianceRun>> scored;
        for (const auto& r : group) {
            const double t = 2.0 * r.value / (half * half) * std::log(mass_bound / (dlt * r.value));
            scored.push_back({apply_rounding(t, rounding), r});
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        double left = keep;
        for (const auto& [cost, r] : scored) {
            if (left <= 0) break;
            const double take = std::min(left, double(r.count));
            total.add(take * cost);
            left -= take;
        }
    }
    return total.value();
}

inline double vmedelim_sample_bound(const ProblemSpec& spec, Rounding rounding = Rounding::ceiling) {
    return vmedelim_sample_bound(VarianceProfile::from_vector(spec.sigma2()), spec.epsilon(), spec.delta(),
                                 spec.m(), rounding);
}

}  // namespace hetvar

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hetvar/algorithms.hpp"
#include "hetvar/instances.hpp"
#include "hetvar/rng.hpp"

namespace hetvar {

// -----------------------------------------------------------------------------
// Samplers.
// -----------------------------------------------------------------------------

/// How GaussianSampler answers pull_sum().
///   per_pull:  draws every reward individually (count draws).
///   aggregate: draws the sum of `count` i.i.d. N(mu, s2) rewards directly as
///              N(count mu, count s2); same distribution, one draw per call.
enum class SamplingMode { per_pull, aggregate };

inline std::string_view to_string(SamplingMode mode) {
    return mode == SamplingMode::aggregate ? "aggregate" : "per-pull";
}

inline SamplingMode parse_sampling_mode(std::string_view s) {
    if (s == "aggregate") return SamplingMode::aggregate;
    if (s == "per-pull" || s == "per_pull") return SamplingMode::per_pull;
    throw DomainError("unknown sampling mode '" + std::string(s) + "' (expected aggregate|per-pull)");
}

/// Instance-backed Gaussian rewards. Draw k of arm i in trial t is a pure
/// function of (seed_base, t, i, k): Philox keyed by the seed, counter
/// (t, i | stream tag, k_lo, k_hi).
class GaussianSampler {
public:
    GaussianSampler(const BanditInstance& instance, std::uint64_t seed_base, std::uint32_t trial,
                    SamplingMode mode = SamplingMode::per_pull)
        : instance_(&instance), key_(rng::key_from_seed(seed_base)), trial_(trial), mode_(mode),
          pulls_(instance.n(), 0), batches_(instance.n(), 0) {
        if (instance.n() >= (std::size_t{1} << 31)) throw DomainError("too many arms for the sampler");
        for (ArmKind k : instance.kind) {
            if (k != ArmKind::gaussian) throw DomainError("GaussianSampler needs an all-gaussian instance");
        }
    }

    double pull(ArmIndex arm) {
        check(arm);
        const std::uint64_t k = pulls_[arm]++;
        return instance_->means[arm] + std::sqrt(instance_->sigma2[arm]) * normal(arm, 0, k);
    }

    double pull_sum(ArmIndex arm, std::uint64_t count) {
        check(arm);
        if (mode_ == SamplingMode::per_pull) {
            CompensatedSum acc;
            for (std::uint64_t i = 0; i < count; ++i) acc.add(pull(arm));
            return acc.value();
        }
        const std::uint64_t b = batches_[arm]++;
        const double c = double(count);
        return c * instance_->means[arm] + std::sqrt(c * instance_->sigma2[arm]) * normal(arm, 1, b);
    }

private:
    void check(ArmIndex arm) const {
        if (arm >= instance_->n()) throw SamplerError("arm index " + std::to_string(arm) + " out of range");
    }

    double normal(ArmIndex arm, std::uint32_t stream, std::uint64_t index) const {
        const rng::Counter ctr{trial_, std::uint32_t(arm) | (stream << 31), std::uint32_t(index),
                               std::uint32_t(index >> 32)};
        return rng::standard_normal(ctr, key_);
    }

    const BanditInstance* instance_;
    rng::Key key_;
    std::uint32_t trial_;
    SamplingMode mode_;
    std::vector<std::uint64_t> pulls_;
    std::vector<std::uint64_t> batches_;
};

/// Replays fixed reward sequences; running out is a SamplerError.
class ScriptedSampler {
public:
    explicit ScriptedSampler(std::vector<std::vector<double>> rewards) {
        for (auto& r : rewards) queues_.emplace_back(r.begin(), r.end());
    }

    double pull(ArmIndex arm) {
        if (arm >= queues_.size()) throw SamplerError("scripted sampler has no arm " + std::to_string(arm));
        auto& q = queues_[arm];
        if (q.empty()) throw SamplerError("scripted rewards exhausted for arm " + std::to_string(arm));
        const double v = q.front();
        q.pop_front();
        return v;
    }

private:
    std::vector<std::deque<double>> queues_;
};

/// Every pull of arm i returns values[i].
class ConstantSampler {
public:
    explicit ConstantSampler(std::vector<double> values) : values_(std::move(values)) {}
    double pull(ArmIndex arm) {
        if (arm >= values_.size()) throw SamplerError("constant sampler has no arm " + std::to_string(arm));
        return values_[arm];
    }
    double pull_sum(ArmIndex arm, std::uint64_t count) { return pull(arm) * double(count); }

private:
    std::vector<double> values_;
};

// -----------------------------------------------------------------------------
// Success criteria.
// -----------------------------------------------------------------------------

/// k-th largest value (1-based k) of `values`.
inline double kth_largest(std::vector<double> values, std::size_t k) {
    if (k < 1 || k > values.size()) throw ContractError("kth_largest: k out of range");
    std::nth_element(values.begin(), values.begin() + long(k - 1), values.end(), std::greater<>());
    return values[k - 1];
}

/// True iff every arm of R is epsilon-approximate top-m:
/// min_{i in R} mu_i >= (m-th largest mean) - epsilon.
inline bool check_success(const BanditInstance& instance, std::span<const ArmIndex> R, double epsilon,
                          std::size_t m) {
    if (R.size() != m) throw ContractError("check_success: |R| must equal m");
    const double threshold = kth_largest(instance.means, m) - epsilon;
    for (ArmIndex i : R) {
        if (i >= instance.n()) throw ContractError("check_success: arm index out of range");
        if (instance.means[i] < threshold) return false;
    }
    return true;
}

/// Top-m' condition: the m'-th best mean inside R is within epsilon of the
/// m'-th best mean overall.
inline bool check_top_condition(const BanditInstance& instance, std::span<const ArmIndex> R, double epsilon,
                                std::size_t m_prime) {
    if (m_prime < 1 || R.size() < m_prime) throw ContractError("check_top_condition: need |R| >= m' >= 1");
    std::vector<double> inside;
    for (ArmIndex i : R) inside.push_back(instance.means.at(i));
    return kth_largest(inside, m_prime) >= kth_largest(instance.means, m_prime) - epsilon;
}

// -----------------------------------------------------------------------------
// Algorithm dispatch.
// -----------------------------------------------------------------------------

enum class AlgorithmKind { wnelim, medelim, vmedelim, adapted };

inline std::string_view to_string(AlgorithmKind a) {
    switch (a) {
        case AlgorithmKind::wnelim: return "wnelim";
        case AlgorithmKind::medelim: return "medelim";
        case AlgorithmKind::vmedelim: return "vmedelim";
        case AlgorithmKind::adapted: return "adapted";
    }
    return "?";
}

inline AlgorithmKind parse_algorithm(std::string_view s) {
    if (s == "wnelim") return AlgorithmKind::wnelim;
    if (s == "medelim") return AlgorithmKind::medelim;
    if (s == "vmedelim") return AlgorithmKind::vmedelim;
    if (s == "adapted") return AlgorithmKind::adapted;
    throw DomainError("unknown algorithm '" + std::string(s) + "' (expected wnelim|medelim|vmedelim|adapted)");
}

/// Runs the algorithm on all n arms of the spec. MedElim is called with
/// output size 2m and therefore returns between 2m and n arms.
template <RewardSampler S>
RunResult run_algorithm(AlgorithmKind kind, const ProblemSpec& spec, S& sampler) {
    ArmSet all(spec.n());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    switch (kind) {
        case AlgorithmKind::wnelim:
            return wnelim(spec.epsilon(), spec.delta(), spec.m(), all, spec.sigma2(), sampler);
        case AlgorithmKind::medelim:
            return medelim(spec.epsilon(), spec.delta(), 2 * spec.m(), all, spec.sigma2(), sampler);
        case AlgorithmKind::vmedelim:
            return vmedelim(spec, sampler);
        case AlgorithmKind::adapted:
            return adapted_medelim(spec.epsilon(), spec.delta(), spec.m(), all, spec.sigma2(), sampler);
    }
    throw std::logic_error("internal: unhandled algorithm");
}

/// WNElim, V-MedElim and Adapted-MedElim must return m epsilon-approximate
/// arms. MedElim returns a superset and is judged by the top-m condition.
inline bool run_succeeded(AlgorithmKind kind, const BanditInstance& instance, const RunResult& run,
                          const ProblemSpec& spec) {
    if (kind == AlgorithmKind::medelim) return check_top_condition(instance, run.selected, spec.epsilon(), spec.m());
    return check_success(instance, run.selected, spec.epsilon(), spec.m());
}

// -----------------------------------------------------------------------------
// Monte Carlo trials.
// -----------------------------------------------------------------------------

/// Wilson score interval for a binomial proportion at normal quantile z.
inline std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
    if (trials == 0) throw DomainError("wilson_interval needs at least one trial");
    const double n = double(trials);
    const double p = double(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

inline constexpr double kZ95TwoSided = 1.959963984540054;
inline constexpr double kZ95OneSided = 1.6448536269514722;

struct TrialSummary {
    std::string algorithm;
    std::string instance_id;
    std::size_t n = 0;
    std::size_t m = 0;
    double epsilon = 0.0;
    double delta = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    double failure_rate = 0.0;
    double mean_samples = 0.0;
    double samples_stddev = 0.0;
    std::pair<double, double> wilson_ci95{0.0, 0.0};
    std::uint64_t seed_base = 0;

    /// Lower end of the one-sided 95% Wilson bound on the failure rate.
    [[nodiscard]] double wilson_lower_one_sided() const {
        return wilson_interval(failures, trials, kZ95OneSided).first;
    }
    /// Accept when the failure rate is not significantly above delta.
    [[nodiscard]] bool accepts(double target_delta) const { return wilson_lower_one_sided() <= target_delta; }
};

struct TrialOptions {
    unsigned threads = 1;  ///< 0 = hardware concurrency
    SamplingMode mode = SamplingMode::aggregate;
    std::string instance_id = "instance";
};

struct TrialOutcome {
    bool success = false;
    std::uint64_t samples = 0;
};

/// Runs `trials` independent seeded runs. Trial t uses the random stream
/// (seed_base, t), so the summary does not depend on thread count or order.
inline TrialSummary run_trials(AlgorithmKind kind, const BanditInstance& instance, const ProblemSpec& spec,
                               std::uint64_t trials, std::uint64_t seed_base, const TrialOptions& options = {}) {
    if (trials < 1) throw DomainError("trials must be >= 1");
    if (trials > std::uint64_t{0xffffffffu}) throw DomainError("trials must fit in 32 bits");
    instance.validate();
    if (instance.n() != spec.n()) throw DomainError("spec and instance disagree on the number of arms");
    for (std::size_t i = 0; i < spec.n(); ++i) {
        if (instance.sigma2[i] != spec.sigma2()[i])
            throw DomainError("spec and instance disagree on the variance of arm " + std::to_string(i));
    }

    std::vector<TrialOutcome> outcomes(trials);
    auto run_one = [&](std::uint64_t t) {
        GaussianSampler sampler(instance, seed_base, std::uint32_t(t), options.mode);
        const RunResult run = run_algorithm(kind, spec, sampler);
        outcomes[t] = {run_succeeded(kind, instance, run, spec), run.total_samples};
    };

    unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
    threads = unsigned(std::min<std::uint64_t>(threads, trials));
    if (threads <= 1) {
        for (std::uint64_t t = 0; t < trials; ++t) run_one(t);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::uint64_t t = next++; t < trials; t = next++) {
                    try {
                        run_one(t);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        next = trials;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }

    TrialSummary s;
    s.algorithm = std::string(to_string(kind));
    s.instance_id = options.instance_id;
    s.n = spec.n();
    s.m = spec.m();
    s.epsilon = spec.epsilon();
    s.delta = spec.delta();
    s.trials = trials;
    s.seed_base = seed_base;
    CompensatedSum sum;
    for (const auto& o : outcomes) {
        if (!o.success) ++s.failures;
        sum.add(double(o.samples));
    }
    s.failure_rate = double(s.failures) / double(trials);
    s.mean_samples = sum.value() / double(trials);
    if (trials > 1) {
        CompensatedSum sq;
        for (const auto& o : outcomes) {
            const double d = double(o.samples) - s.mean_samples;
            sq.add(d * d);
        }
        s.samples_stddev = std::sqrt(std::max(0.0, sq.value()) / double(trials - 1));
    }
    s.wilson_ci95 = wilson_interval(s.failures, trials, kZ95TwoSided);
    return s;
}

/// exp(-eps^2 n / (2 sigma^2)): one-sided tail bound for the sample mean of
/// n sigma^2-sub-Gaussian draws deviating by at least eps.
inline double hoeffding_tail(double samples, double sigma2, double epsilon) {
    if (!(samples > 0.0) || !(sigma2 > 0.0) || !(epsilon > 0.0))
        throw DomainError("hoeffding_tail needs positive samples, variance and epsilon");
    return std::exp(-epsilon * epsilon * samples / (2.0 * sigma2));
}

}  // namespace hetvar

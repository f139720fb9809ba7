#pragma once

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace hetvar {

// -----------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes 2 / 3 / 4.
// -----------------------------------------------------------------------------

/// Invalid numeric input (nonpositive variance, delta outside (0,1), ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Caller broke an operation contract (set sizes, overlapping index sets).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A subset enumeration would exceed the configured budget.
class EnumerationTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A reward source could not deliver a sample; the run is abandoned.
class SamplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Maximum number of subsets any exhaustive enumeration may visit.
inline constexpr double kEnumerationBudget = 1e6;

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

template <class Range>
double compensated_total(const Range& values) {
    CompensatedSum acc;
    for (double v : values) acc.add(v);
    return acc.value();
}

/// C(n, k) as a double; saturates to +inf instead of overflowing.
inline double binomial(double n, double k) {
    if (k < 0 || k > n) return 0.0;
    if (k > n - k) k = n - k;
    double result = 1.0;
    for (double i = 1; i <= k; i += 1) {
        result *= (n - k + i) / i;
        if (!std::isfinite(result)) return std::numeric_limits<double>::infinity();
    }
    return std::round(result);
}

/// Visits every k-subset of {0..n-1} in lexicographic order. The callback
/// receives the current combination as a const reference and may return
/// false to stop early.
template <class Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
    if (k > n) return;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        if constexpr (std::is_same_v<decltype(fn(idx)), bool>) {
            if (!fn(static_cast<const std::vector<std::size_t>&>(idx))) return;
        } else {
            fn(static_cast<const std::vector<std::size_t>&>(idx));
        }
        if (k == 0) return;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

inline void require_enumeration_budget(double count, const std::string& what,
                                       const std::string& hint) {
    if (!(count <= kEnumerationBudget)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", count);
        throw EnumerationTooLarge("enumeration too large: " + what + " needs " + buf +
                                  " subsets (budget 1e6); " + hint);
    }
}

}  // namespace hetvar

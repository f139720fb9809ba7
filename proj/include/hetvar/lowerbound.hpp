#pragma once

// Dual evaluation of the worst-case lower bound. Any probability assignment
// eta over (m-1)-subsets is feasible for the restricted dual, so by weak
// duality (1 - delta) / (2 eps^2) times its objective lower-bounds the
// worst-case expected sample count of every valid algorithm.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "hetvar/core.hpp"

namespace hetvar {

/// Dual weights eta_F keyed by sorted (m-1)-subsets F; absent keys are 0.
class DualAssignment {
public:
    using Weights = std::map<ArmSet, double>;

    DualAssignment() = default;
    DualAssignment(Weights weights, std::size_t n, std::size_t m) : weights_(std::move(weights)) {
        validate(n, m);
    }

    [[nodiscard]] const Weights& weights() const noexcept { return weights_; }

    [[nodiscard]] double at(const ArmSet& subset) const {
        const auto it = weights_.find(subset);
        return it == weights_.end() ? 0.0 : it->second;
    }

    void validate(std::size_t n, std::size_t m) const {
        CompensatedSum total;
        for (const auto& [subset, w] : weights_) {
            if (subset.size() + 1 != m) throw DomainError("dual weight keyed by a subset of size != m-1");
            if (!std::is_sorted(subset.begin(), subset.end()) ||
                std::adjacent_find(subset.begin(), subset.end()) != subset.end())
                throw DomainError("dual weight subsets must be strictly increasing");
            if (!subset.empty() && subset.back() >= n) throw DomainError("dual weight subset index out of range");
            if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("dual weights must be nonnegative");
            total.add(w);
        }
        if (std::fabs(total.value() - 1.0) > 1e-9) throw DomainError("dual weights must sum to 1 (within 1e-9)");
    }

private:
    Weights weights_;
};

/// B(delta) = exp(-Ent(delta, 1 - delta) / (1 - delta)), for 0 < delta < 0.5.
inline double b_delta(double delta) {
    if (!(delta > 0.0 && delta < 0.5)) throw DomainError("B(delta) is evaluated for 0 < delta < 0.5 only");
    const double h = -delta * std::log(delta) - (1.0 - delta) * std::log1p(-delta);
    return std::exp(-h / (1.0 - delta));
}

/// Sum over m-subsets M of W_M (ln(B/delta) + Ent(w_M)) where
/// w_M = (eta_{M \ l} sigma_l^2)_{l in M} and W_M its total. Zero entries of
/// w_M are skipped in the entropy. Without the confidence part this is the
/// entropy-only objective.
inline double dual_objective(const DualAssignment& eta, const ProblemSpec& spec, bool include_confidence) {
    const std::size_t n = spec.n(), m = spec.m();
    require_enumeration_budget(binomial(double(n), double(m)), "dual objective over all m-subsets",
                               "evaluate the closed-form terms with the complexity command instead");
    eta.validate(n, m);
    const double confidence = include_confidence ? std::log(b_delta(spec.delta()) / spec.delta()) : 0.0;
    const auto s2 = spec.sigma2();

    CompensatedSum objective;
    std::vector<double> w(m);
    ArmSet rest;
    rest.reserve(m);
    for_each_combination(n, m, [&](const std::vector<std::size_t>& M) {
        double mass = 0.0;
        for (std::size_t pos = 0; pos < m; ++pos) {
            rest.clear();
            for (std::size_t q = 0; q < m; ++q) {
                if (q != pos) rest.push_back(M[q]);
            }
            w[pos] = eta.at(rest) * s2[M[pos]];
            mass += w[pos];
        }
        if (mass > 0.0) objective.add(mass * (confidence + entropy_nonneg(w)));
    });
    return objective.value();
}

/// Uniform weight over every (m-1)-subset of [n].
inline DualAssignment eta_uniform(const ProblemSpec& spec) {
    const std::size_t n = spec.n(), m = spec.m();
    const double count = binomial(double(n), double(m - 1));
    require_enumeration_budget(count, "uniform dual assignment", "reduce n or m");
    DualAssignment::Weights w;
    for_each_combination(n, m - 1, [&](const std::vector<std::size_t>& F) { w.emplace(F, 1.0 / count); });
    return DualAssignment(std::move(w), n, m);
}

/// eta_F proportional to prod_{i in F} sigma_i^2 over (m-1)-subsets of G^m.
/// Inapplicable (nullopt) when |G^m| < m.
inline std::optional<DualAssignment> eta_gm(const ProblemSpec& spec, const VarianceGrouping& grouping) {
    const std::size_t m = spec.m();
    const ArmSet& more = grouping.g_more;
    if (more.size() < m) return std::nullopt;
    require_enumeration_budget(binomial(double(more.size()), double(m - 1)), "G^m dual assignment",
                               "reduce n or m");
    const auto s2 = spec.sigma2();
    // Products are formed in log space and rescaled by the largest one.
    std::vector<std::pair<ArmSet, double>> log_weights;
    double max_log = -std::numeric_limits<double>::infinity();
    for_each_combination(more.size(), m - 1, [&](const std::vector<std::size_t>& pick) {
        ArmSet F;
        double lw = 0.0;
        for (std::size_t p : pick) {
            F.push_back(more[p]);
            lw += std::log(s2[more[p]]);
        }
        max_log = std::max(max_log, lw);
        log_weights.emplace_back(std::move(F), lw);
    });
    CompensatedSum norm;
    for (auto& [F, lw] : log_weights) {
        lw = std::exp(lw - max_log);
        norm.add(lw);
    }
    DualAssignment::Weights w;
    for (auto& [F, x] : log_weights) w.emplace(std::move(F), x / norm.value());
    return DualAssignment(std::move(w), spec.n(), m);
}

/// Uniform weight over the (m-1)-subsets of L (the 2m largest variances of
/// G^r). Inapplicable when |G^r| < 2m.
inline std::optional<DualAssignment> eta_uniform_L(const ProblemSpec& spec, const VarianceGrouping& grouping) {
    const std::size_t m = spec.m();
    const ArmSet& top = grouping.top_reduced;
    if (top.size() != 2 * m) return std::nullopt;
    const double count = binomial(double(2 * m), double(m - 1));
    require_enumeration_budget(count, "uniform-on-L dual assignment", "reduce m");
    DualAssignment::Weights w;
    for_each_combination(top.size(), m - 1, [&](const std::vector<std::size_t>& pick) {
        ArmSet F;
        for (std::size_t p : pick) F.push_back(top[p]);
        w.emplace(std::move(F), 1.0 / count);
    });
    return DualAssignment(std::move(w), spec.n(), m);
}

struct BoundReport {
    std::vector<double> theta;  ///< (1 - delta) sigma_i^2 / (2 eps^2)
    double b_delta = 0.0;
    double delta_prime = 0.0;   ///< delta / B(delta)
    double objective = 0.0;     ///< dual objective with the confidence part
    double sc_bound = 0.0;      ///< (1 - delta) / (2 eps^2) * objective
};

inline BoundReport bound_report(const DualAssignment& eta, const ProblemSpec& spec) {
    BoundReport r;
    const double scale = (1.0 - spec.delta()) / (2.0 * spec.epsilon() * spec.epsilon());
    for (double s : spec.sigma2()) r.theta.push_back(scale * s);
    r.b_delta = b_delta(spec.delta());
    r.delta_prime = spec.delta() / r.b_delta;
    r.objective = dual_objective(eta, spec, true);
    r.sc_bound = scale * r.objective;
    return r;
}

inline double sc_bound(const DualAssignment& eta, const ProblemSpec& spec) {
    return bound_report(eta, spec).sc_bound;
}

/// The three-term expression of the lower bound, reported without its
/// universal constant; identical to the upper-bound terms.
inline ComplexityTerms theorem3_terms(const ProblemSpec& spec, GrMode mode = GrMode::heuristic) {
    return complexity_terms(spec, mode);
}

// JSON form: [[[i, j, ...], weight], ...]
inline nlohmann::json eta_to_json(const DualAssignment& eta) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [F, w] : eta.weights()) out.push_back(nlohmann::json::array({F, w}));
    return out;
}

inline DualAssignment eta_from_json(const nlohmann::json& doc, std::size_t n, std::size_t m) {
    if (!doc.is_array()) throw DomainError("dual assignment must be a JSON array of [subset, weight] pairs");
    DualAssignment::Weights w;
    for (const auto& entry : doc) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_array() || !entry[1].is_number())
            throw DomainError("dual assignment entries must be [subset, weight] pairs");
        ArmSet F;
        for (const auto& idx : entry[0]) {
            if (!idx.is_number_unsigned()) throw DomainError("dual assignment subsets hold arm indices");
            F.push_back(idx.get<std::size_t>());
        }
        if (!w.emplace(std::move(F), entry[1].get<double>()).second)
            throw DomainError("dual assignment lists a subset twice");
    }
    return DualAssignment(std::move(w), n, m);
}

}  // namespace hetvar

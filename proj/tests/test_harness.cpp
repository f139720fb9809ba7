#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "hetvar/harness.hpp"
#include "hetvar/io.hpp"

using namespace hetvar;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Direct transcription of the success condition: |R| = m and every selected
// mean is at least the m-th largest mean minus epsilon.
bool brute_force_valid(const std::vector<double>& means, const std::vector<std::size_t>& R, double eps,
                       std::size_t m) {
    if (R.size() != m) return false;
    for (std::size_t i : R) {
        std::size_t above = 0;
        for (double mu : means) above += mu > means[i] + eps;
        if (above >= m) return false;
    }
    return true;
}

BanditInstance fixed_instance() {
    return make_gaussian_instance({0.5, 0.4, 0.1, 0.0, -0.2, 0.45}, {1.0, 0.5, 2.0, 0.25, 1.5, 3.0});
}

}  // namespace

TEST_CASE("success check") {
    const auto inst = make_gaussian_instance({1.0, 0.9, 0.5, 0.85}, std::vector<double>(4, 1.0));
    CHECK(check_success(inst, ArmSet{0, 1}, 0.1, 2));
    CHECK(check_success(inst, ArmSet{0, 3}, 0.1, 2));
    CHECK(check_success(inst, ArmSet{1, 3}, 0.1, 2));
    CHECK_FALSE(check_success(inst, ArmSet{0, 2}, 0.1, 2));
    CHECK_THROWS_AS(check_success(inst, ArmSet{0}, 0.1, 2), ContractError);
    CHECK(kth_largest({3, 1, 2}, 1) == 3);
    CHECK(kth_largest({3, 1, 2}, 3) == 1);
    CHECK_THROWS_AS(kth_largest({1}, 2), ContractError);

    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> grid(0, 6);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = 2 + std::size_t(rep % 11);
        const std::size_t m = 1 + std::size_t(rep % 4) % (n - 1);
        std::vector<double> means(n);
        for (auto& mu : means) mu = 0.1 * grid(gen);  // ties and exact eps gaps occur
        const auto inst = make_gaussian_instance(means, std::vector<double>(n, 1.0));
        for_each_combination(n, m, [&](const std::vector<std::size_t>& R) {
            REQUIRE(check_success(inst, R, 0.15, m) == brute_force_valid(means, R, 0.15, m));
        });
    }
}

TEST_CASE("top condition for candidate supersets") {
    const auto inst = make_gaussian_instance({1.0, 0.9, 0.5, 0.2}, std::vector<double>(4, 1.0));
    CHECK(check_top_condition(inst, ArmSet{0, 2, 3}, 0.1, 1));
    CHECK_FALSE(check_top_condition(inst, ArmSet{1, 2, 3}, 0.05, 1));
    CHECK(check_top_condition(inst, ArmSet{1, 2, 3}, 0.1, 1));
}

TEST_CASE("algorithm names") {
    for (auto k : {AlgorithmKind::wnelim, AlgorithmKind::medelim, AlgorithmKind::vmedelim, AlgorithmKind::adapted})
        CHECK(parse_algorithm(to_string(k)) == k);
    CHECK_THROWS_AS(parse_algorithm("bogus"), DomainError);
    CHECK(parse_sampling_mode("per-pull") == SamplingMode::per_pull);
    CHECK(parse_sampling_mode("aggregate") == SamplingMode::aggregate);
    CHECK_THROWS_AS(parse_sampling_mode("x"), DomainError);
}

TEST_CASE("Philox4x32-10 known answers") {
    using rng::Counter;
    using rng::Key;
    CHECK(rng::philox4x32_10(Counter{0, 0, 0, 0}, Key{0, 0}) ==
          Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(rng::philox4x32_10(Counter{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                             Key{0xffffffffu, 0xffffffffu}) ==
          Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(rng::philox4x32_10(Counter{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                             Key{0xa4093822u, 0x299f31d0u}) ==
          Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("Gaussian sampler") {
    const auto inst = make_gaussian_instance({2.0, -1.0}, {4.0, 0.25});
    SECTION("per-pull draws are reproducible and well scaled") {
        GaussianSampler a(inst, 11, 0), b(inst, 11, 0), c(inst, 11, 1);
        CompensatedSum s, sq;
        const int N = 200000;
        bool differs = false;
        for (int i = 0; i < N; ++i) {
            const double x = a.pull(0);
            REQUIRE(x == b.pull(0));
            differs |= x != c.pull(0);
            s.add(x);
            sq.add(x * x);
        }
        CHECK(differs);
        const double mean = s.value() / N;
        CHECK_THAT(mean, WithinAbs(2.0, 5 * 2.0 / std::sqrt(double(N))));
        CHECK_THAT(sq.value() / N - mean * mean, WithinRel(4.0, 0.03));
    }
    SECTION("aggregate sums have the batch distribution") {
        const int N = 50000;
        CompensatedSum s, sq;
        for (int t = 0; t < N; ++t) {
            GaussianSampler g(inst, 3, std::uint32_t(t), SamplingMode::aggregate);
            const double x = g.pull_sum(1, 100);
            s.add(x);
            sq.add(x * x);
        }
        const double mean = s.value() / N;
        CHECK_THAT(mean, WithinAbs(-100.0, 5 * 5.0 / std::sqrt(double(N))));
        CHECK_THAT(sq.value() / N - mean * mean, WithinRel(25.0, 0.04));
    }
    SECTION("per-pull sums match individual pulls") {
        GaussianSampler a(inst, 5, 2), b(inst, 5, 2);
        CompensatedSum acc;
        for (int i = 0; i < 10; ++i) acc.add(b.pull(1));
        CHECK(a.pull_sum(1, 10) == acc.value());
    }
    SECTION("errors") {
        GaussianSampler g(inst, 1, 0);
        CHECK_THROWS_AS(g.pull(2), SamplerError);
        auto scripted = inst;
        scripted.kind[0] = ArmKind::scripted;
        CHECK_THROWS_AS(GaussianSampler(scripted, 1, 0), DomainError);
    }
}

TEST_CASE("Monte Carlo trials") {
    const auto inst = fixed_instance();
    const ProblemSpec spec(0.3, 0.1, 2, inst.sigma2);

    SECTION("deterministic across repeats and thread counts") {
        for (auto kind : {AlgorithmKind::wnelim, AlgorithmKind::medelim, AlgorithmKind::vmedelim,
                          AlgorithmKind::adapted}) {
            for (auto mode : {SamplingMode::aggregate, SamplingMode::per_pull}) {
                TrialOptions one{1, mode, "fixed"}, four{4, mode, "fixed"};
                const auto a = run_trials(kind, inst, spec, 40, 9, one);
                const auto b = run_trials(kind, inst, spec, 40, 9, four);
                const auto c = run_trials(kind, inst, spec, 40, 9, one);
                CHECK(io::trial_summary_row(a) == io::trial_summary_row(b));
                CHECK(io::trial_summary_row(a) == io::trial_summary_row(c));
            }
        }
    }
    SECTION("WNElim uses its fixed budget every time") {
        const auto s = run_trials(AlgorithmKind::wnelim, inst, spec, 50, 1);
        CHECK(s.samples_stddev == 0.0);
        std::uint64_t total = 0;
        for (auto p : wnelim_budget(0.3, 0.1, spec.sigma2()).pulls) total += p;
        CHECK(s.mean_samples == double(total));
    }
    SECTION("summary fields") {
        const auto s = run_trials(AlgorithmKind::vmedelim, inst, spec, 100, 4);
        CHECK(s.trials == 100);
        CHECK(s.failure_rate == double(s.failures) / 100.0);
        CHECK(s.wilson_ci95.first <= s.failure_rate);
        CHECK(s.wilson_ci95.second >= s.failure_rate);
        CHECK(s.n == 6);
        CHECK(s.m == 2);
        CHECK(s.seed_base == 4);
    }
    SECTION("input errors") {
        CHECK_THROWS_AS(run_trials(AlgorithmKind::wnelim, inst, spec, 0, 1), DomainError);
        const ProblemSpec other(0.3, 0.1, 2, std::vector<double>(6, 1.0));
        CHECK_THROWS_AS(run_trials(AlgorithmKind::wnelim, inst, other, 5, 1), DomainError);
    }
}

TEST_CASE("Wilson interval") {
    const auto [lo, hi] = wilson_interval(10, 100, kZ95TwoSided);
    CHECK_THAT(lo, WithinAbs(0.0552291, 1e-6));
    CHECK_THAT(hi, WithinAbs(0.1743657, 1e-6));
    CHECK(wilson_interval(0, 50, kZ95TwoSided).first == 0.0);
    CHECK(wilson_interval(50, 50, kZ95TwoSided).second == 1.0);
    CHECK(wilson_interval(0, 50, kZ95TwoSided).second > 0.0);
    for (std::uint64_t k = 0; k <= 40; ++k) {
        const auto [a, b] = wilson_interval(k, 40, kZ95OneSided);
        CHECK(a <= double(k) / 40.0);
        CHECK(b >= double(k) / 40.0);
    }
    CHECK_THROWS_AS(wilson_interval(0, 0, 1.96), DomainError);
}

TEST_CASE("Hoeffding tail") {
    CHECK_THAT(hoeffding_tail(200, 1.0, 0.2), WithinAbs(std::exp(-4.0), 1e-15));
    CHECK_THAT(hoeffding_tail(200, 1.0, 0.2), WithinAbs(0.018316, 1e-6));
    CHECK_THROWS_AS(hoeffding_tail(0, 1.0, 0.2), DomainError);
    CHECK_THROWS_AS(hoeffding_tail(10, 0.0, 0.2), DomainError);
    CHECK_THROWS_AS(hoeffding_tail(10, 1.0, -0.2), DomainError);

    // Empirical one-sided deviation rate of a 50-sample mean at eps = 0.3.
    const auto inst = make_gaussian_instance({0.0}, {1.0});
    const int trials = 100000, n = 50;
    int deviations = 0;
    for (int t = 0; t < trials; ++t) {
        GaussianSampler g(inst, 2024, std::uint32_t(t), SamplingMode::aggregate);
        deviations += g.pull_sum(0, n) / n >= 0.3;
    }
    const double bound = hoeffding_tail(n, 1.0, 0.3);
    CHECK(double(deviations) / trials <= 3.0 * bound);
    CHECK(deviations > 0);
}

TEST_CASE("CSV formatting") {
    CHECK(io::format_double(0.0) == "0");
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(1200.0) == "1200");
    CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(io::csv_field("plain") == "plain");
    CHECK(io::csv_field("a,b") == "\"a,b\"");
    CHECK(io::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    std::ostringstream os;
    io::CsvWriter(os).row({"x", "1,2", "3"});
    CHECK(os.str() == "x,\"1,2\",3\n");
    CHECK(io::trial_summary_header().size() == 14);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hetlb/errors.hpp"
#include "hetlb/jiq_analysis.hpp"
#include "hetlb/jsq_analysis.hpp"

using namespace hetlb;

TEST_CASE("power-of-d tail when only fast servers are used") {
    const auto c = SystemConfig::create(0.2, 0.5, 10);
    const PolicyParams p{2, 2, 1, 0, Family::JSQ};
    const auto t = fast_tail(c, p, solve_rho(c, p));
    CHECK(t.at(0) == 1.0);
    CHECK(t.at(1) == doctest::Approx(0.22).epsilon(1e-12));
    CHECK(t.at(2) == doctest::Approx(0.010648).epsilon(1e-10));
    CHECK(t.at(3) == doctest::Approx(std::pow(0.22, 7)).epsilon(1e-8));
}

TEST_CASE("dF = 1 tail is geometric") {
    const auto c = SystemConfig::create(0.3, 0.5, 2);
    const PolicyParams p{1, 2, 1, 0, Family::JSQ};
    const auto t = fast_tail(c, p, solve_rho(c, p));
    const double le = 0.3 / (0.5 * c.mu_fast());
    for (std::size_t i = 0; i < t.tail.size(); ++i) CHECK(std::abs(t.tail[i] - std::pow(le, i)) < 1e-10);
}

TEST_CASE("slow tail degenerate cases") {
    const auto c = SystemConfig::create(0.4, 0.3, 3);
    {
        const PolicyParams p{2, 2, 0.5, 0, Family::JSQ};
        const auto t = slow_tail(c, p, solve_rho(c, p));
        for (std::size_t i = 1; i < t.tail.size(); ++i) CHECK(t.tail[i] < 1e-15);  // iterate decays to 0
    }
    {
        const PolicyParams p{2, 2, 1, 1, Family::JSQ};
        const auto r = solve_rho(c, p);
        const auto t = slow_tail(c, p, r);
        CHECK(t.at(1) == doctest::Approx(r.rho_slow));
        CHECK(r.rho_slow > 0);
        for (std::size_t i = 2; i < t.tail.size(); ++i) CHECK(t.tail[i] == 0.0);
    }
}

TEST_CASE("tails are nonincreasing, bounded, and stationary") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0, 1);
    int n = 0;
    for (int i = 0; i < 300; ++i) {
        const auto c = SystemConfig::create(0.05 + 0.9 * u(gen), 0.1 + 0.8 * u(gen), 1 + 9 * u(gen));
        const PolicyParams p{1 + i % 3, 1 + (i / 3) % 3, u(gen), u(gen), Family::JSQ};
        try {
            const auto r = solve_rho(c, p);
            const auto f = fast_tail(c, p, r);
            const auto s = slow_tail(c, p, r);
            for (const auto* t : {&f, &s}) {
                CHECK(t->at(0) == 1.0);
                for (std::size_t k = 1; k < t->tail.size(); ++k) {
                    CHECK(t->tail[k] <= t->tail[k - 1] + 1e-15);
                    CHECK(t->tail[k] >= 0.0);
                }
            }
            CHECK(fast_tail_residual(c, p, r, f) < 1e-8);
            CHECK(slow_tail_residual(c, p, r, s) < 1e-8);
            ++n;
        } catch (const InfeasibleError&) {
        }
    }
    CHECK(n > 100);
}

TEST_CASE("power-of-d closed form over random configs") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 50; ++i) {
        const double qf = 0.2 + 0.7 * u(gen), r = 1 + 9 * u(gen);
        const auto mu = derive_rates(qf, r);
        const double lam = (0.05 + 0.9 * u(gen)) * qf * mu.mu_fast;
        const int d = 2 + i % 3;
        const auto c = SystemConfig::create(lam, qf, r);
        const PolicyParams p{d, 1, 1, 0, Family::JSQ};
        const auto t = fast_tail(c, p, solve_rho(c, p));
        const double le = lam / (qf * mu.mu_fast);
        for (std::size_t k = 0; k < t.tail.size(); ++k) {
            const double e = (std::pow(double(d), double(k)) - 1) / (d - 1);
            CHECK(std::abs(t.tail[k] - std::pow(le, e)) < 1e-8);
        }
    }
}

TEST_CASE("conditional mean waits") {
    const double mu = 1.7, rho = 0.6;
    TailDistribution geo;
    for (int i = 0; i < 200; ++i) geo.tail.push_back(std::pow(rho, i));
    CHECK(mean_wait_conditional(geo, 1, mu) == doctest::Approx((1 / (1 - rho) + 1) / mu).epsilon(1e-10));
    TailDistribution one;
    one.tail = {1.0, 0.4};
    CHECK(mean_wait_conditional(one, 2, mu) == doctest::Approx(2 / mu));

    // Brute-force sum for the power-of-two tail: a job joining the shortest of
    // d busy queues finds at least i jobs w.p. (f_i / f_1)^d.
    const double le = 0.22, muf = 20.0 / 11;
    TailDistribution pw;
    for (int i = 0; i < 12; ++i) pw.tail.push_back(std::pow(le, std::pow(2.0, i) - 1));
    long double brute = 0;
    for (int i = 1; i < 200; ++i) {
        const long double fi = i < 12 ? pw.tail[i] : 0.0L, fi1 = i + 1 < 12 ? pw.tail[i + 1] : 0.0L;
        const long double p = std::pow(fi / pw.tail[1], 2.0L) - std::pow(fi1 / pw.tail[1], 2.0L);
        brute += p * (i + 1) / muf;
    }
    CHECK(mean_wait_conditional(pw, 2, muf) == doctest::Approx(double(brute)).epsilon(1e-12));
}

TEST_CASE("branch probabilities sum to one") {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 5000; ++i) {
        const PolicyParams p{1 + i % 4, 1 + i % 3, u(gen), u(gen), Family::JSQ};
        const auto b = branch_probabilities(p, u(gen), u(gen));
        CHECK(b[0] + b[1] + b[2] + b[3] == doctest::Approx(1.0).epsilon(1e-14));
        for (double x : b) CHECK(x >= 0.0);
    }
}

TEST_CASE("mean response, printed values") {
    const auto c = SystemConfig::create(0.74, 0.2, 5);
    CHECK(mean_response(c, {2, 2, 1, 1, Family::JSQ}) == doctest::Approx(1.039).epsilon(0.01));
    CHECK(mean_response(c.with_lambda(0.14), {2, 2, 1, 0, Family::JSQ}) == doctest::Approx(0.383).epsilon(0.01));
}

TEST_CASE("low-load limit is 1/muF") {
    const auto c = SystemConfig::create(1e-6, 0.3, 4);
    CHECK(mean_response(c, {2, 2, 0.5, 0.5, Family::JSQ}) == doctest::Approx(1 / c.mu_fast()).epsilon(1e-4));
}

TEST_CASE("JSQ never worse than JIQ with the same parameters") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> u(0, 1);
    int n = 0;
    for (int i = 0; i < 400; ++i) {
        const auto c = SystemConfig::create(0.05 + 0.9 * u(gen), 0.1 + 0.8 * u(gen), 1 + 9 * u(gen));
        const int df = 1 + i % 3, ds = 1 + (i / 3) % 3;
        const double pf = u(gen), ps = u(gen);
        try {
            const double jiq = evaluate_jiq(c, {df, ds, pf, ps, Family::JIQ}).mean_response;
            const double jsq = mean_response(c, {df, ds, pf, ps, Family::JSQ});
            CHECK(jsq <= jiq * (1 + 1e-9));
            ++n;
        } catch (const InfeasibleError&) {
        }
    }
    CHECK(n > 100);
}

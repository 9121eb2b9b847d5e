#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hetlb/errors.hpp"
#include "hetlb/oracle.hpp"

using namespace hetlb;

namespace {

DispatchPolicy fam(Family f, int df, int ds, double pf, double ps) {
    return DispatchPolicy::from_params({df, ds, pf, ps, f});
}

}  // namespace

TEST_CASE("generator rows sum to zero") {
    const auto c = SystemConfig::create(0.5, 0.5, 3, 4);
    for (const auto& p : {fam(Family::JSQ, 2, 2, 0.7, 0.3), fam(Family::JIQ, 1, 2, 0.2, 0.9), DispatchPolicy::sed_d(3),
                          DispatchPolicy::wjsq_d(2), DispatchPolicy::jiq_global(), DispatchPolicy::random(0.6)}) {
        const auto spec = build_ctmc(c, p, 6);
        CHECK(spec.states == 7u * 7 * 7 * 7);
        std::vector<double> row(spec.states, 0.0);
        for (int j = 0; j < spec.generator.outerSize(); ++j) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(spec.generator, j); it; ++it) {
                row[it.row()] += it.value();
                if (it.row() != it.col()) CHECK(it.value() >= 0.0);
            }
        }
        double worst = 0;
        for (double r : row) worst = std::max(worst, std::abs(r));
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("stationary vector is a distribution with small residual") {
    const auto c = SystemConfig::create(0.6, 1.0 / 3, 3, 3);
    for (bool direct : {true, false}) {
        OracleOptions o;
        o.direct_limit = direct ? 1'000'000 : 0;
        StationaryInfo info;
        const auto spec = build_ctmc(c, DispatchPolicy::sed_d(2), 30, o);
        const auto pi = stationary_distribution(spec, o, &info);
        CHECK(info.direct == direct);
        double s = 0;
        for (double x : pi) {
            s += x;
            CHECK(x >= -1e-15);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(info.residual < 1e-10);
    }
}

TEST_CASE("single fast server queue is M/M/1") {
    const auto c = SystemConfig::create(0.2, 0.5, 10, 2);
    const auto m = exact_metrics(c, PolicyParams{1, 1, 1, 0, Family::JIQ}, 30);
    CHECK(m.mean_response == doctest::Approx(1 / (20.0 / 11 - 0.4)).epsilon(1e-10));
    CHECK(m.busy_fast == doctest::Approx(0.22).epsilon(1e-10));
    CHECK(m.busy_slow == doctest::Approx(0.0));
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(m.pmf_fast[i] == doctest::Approx(0.78 * std::pow(0.22, double(i))).epsilon(1e-9));
    }
}

TEST_CASE("frozen golden values") {
    struct Case {
        SystemConfig config;
        DispatchPolicy policy;
        int cap;
        double mean_response;
    };
    const std::vector<Case> cases{
        {SystemConfig::create(0.3, 0.5, 2, 2), fam(Family::JIQ, 1, 1, 0.5, 0.5), 60, 1.15372036282871},
        {SystemConfig::create(0.5, 2.0 / 3, 3, 3), fam(Family::JSQ, 2, 1, 0.7, 0.8), 40, 1.40642757157485},
        {SystemConfig::create(0.5, 1.0 / 3, 3, 3), DispatchPolicy::sed_d(2), 40, 1.44354185354063},
        {SystemConfig::create(0.4, 0.5, 2, 4), DispatchPolicy::wjsq_d(2), 25, 1.22220750620575},
        {SystemConfig::create(0.4, 0.5, 2, 4), DispatchPolicy::jiq_global(), 25, 1.17789140412978},
    };
    for (const auto& k : cases) {
        const auto m = exact_metrics(k.config, k.policy, k.cap);
        CHECK(m.mean_response == doctest::Approx(k.mean_response).epsilon(1e-9));
        CHECK(m.cap_mass < 1e-8);
    }
}

TEST_CASE("doubling the cap does not move E[T]") {
    const std::vector<std::tuple<SystemConfig, DispatchPolicy, int>> cases{
        {SystemConfig::create(0.3, 0.5, 2, 2), fam(Family::JIQ, 1, 1, 0.5, 0.5), 60},
        {SystemConfig::create(0.2, 0.5, 10, 2), fam(Family::JIQ, 1, 1, 1, 0), 20},
        {SystemConfig::create(0.5, 1.0 / 3, 3, 3), DispatchPolicy::sed_d(2), 40},
    };
    for (const auto& [c, p, cap] : cases) {
        const double a = exact_metrics(c, p, cap).mean_response;
        const double b = exact_metrics(c, p, 2 * cap).mean_response;
        CHECK(std::abs(a - b) < 1e-9);
    }
}

TEST_CASE("low-load limit") {
    const auto c = SystemConfig::create(1e-5, 0.5, 2, 2);
    const auto p = fam(Family::JSQ, 1, 1, 1, 1);
    CHECK(std::abs(exact_metrics(c, p, 10).mean_response - 1 / c.mu_fast()) < 1e-4);
    // At lambda = 1e-3 the excess is first order in the total arrival rate.
    const auto c3 = c.with_lambda(1e-3);
    const double excess = exact_metrics(c3, p, 10).mean_response - 1 / c3.mu_fast();
    CHECK(excess > 0);
    CHECK(excess < 2 * c3.lambda() * c3.k() / (c3.mu_fast() * c3.mu_fast()));
}

TEST_CASE("truncation and size guards") {
    const auto c = SystemConfig::create(0.9, 0.5, 2, 2);
    CHECK_THROWS_AS(exact_metrics(c, fam(Family::JIQ, 1, 1, 1, 1), 5), TruncationTooSmall);
    CHECK_THROWS_AS(build_ctmc(SystemConfig::create(0.5, 0.5, 2, 10), DispatchPolicy::jiq_global(), 4),
                    StateSpaceTooLarge);
    OracleOptions tiny;
    tiny.max_states = 100;
    CHECK_THROWS_AS(build_ctmc(SystemConfig::create(0.5, 0.5, 2, 4), DispatchPolicy::jiq_global(), 4, tiny),
                    StateSpaceTooLarge);
}

TEST_CASE("busy fractions satisfy work conservation") {
    const auto c = SystemConfig::create(0.5, 0.5, 3, 4);
    const auto m = exact_metrics(c, fam(Family::JSQ, 1, 1, 0.6, 0.5), 30);
    const double served = (c.k_fast() * c.mu_fast() * m.busy_fast + c.k_slow() * c.mu_slow() * m.busy_slow);
    CHECK(served == doctest::Approx(c.lambda() * c.k() * (1 - m.blocking)).epsilon(1e-9));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hetlb/jiq_analysis.hpp"
#include "hetlb/jsq_analysis.hpp"
#include "hetlb/optimizer.hpp"
#include "hetlb/simulator.hpp"

// Mean-field predictions against long simulations of large systems.

using namespace hetlb;

namespace {

const auto kExp = ServiceDistribution::exponential();

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
        s += std::abs((i < a.size() ? a[i] : 0.0) - (i < b.size() ? b[i] : 0.0));
    }
    return s / 2;
}

double sup_gap(const TailDistribution& t, const std::vector<double>& at_least) {
    double g = 0;
    for (std::size_t i = 0; i < std::max(t.tail.size(), at_least.size()); ++i) {
        g = std::max(g, std::abs(t.at(i) - (i < at_least.size() ? at_least[i] : 0.0)));
    }
    return g;
}

}  // namespace

TEST_CASE("JIQ pmf against a k = 2000 simulation") {
    const auto c = SystemConfig::create(0.74, 0.2, 5);
    const PolicyParams p{2, 2, 1, 1, Family::JIQ};
    const auto fp = solve_jiq_system(c, p);
    const auto r = run(c.with_servers(2000), DispatchPolicy::from_params(p), kExp, 2'000'000, 200'000, 31);
    const double tv_fast = total_variation(queue_pmf_truncated(tagged_fast(c, fp)), r.hist_fast.exactly);
    const double tv_slow = total_variation(queue_pmf_truncated(tagged_slow(c, fp)), r.hist_slow.exactly);
    MESSAGE("TV fast " << tv_fast << " slow " << tv_slow);
    CHECK(tv_fast < 0.02);
    CHECK(tv_slow < 0.02);
}

TEST_CASE("JIQ under hyperexponential service against a k = 1000 simulation") {
    const auto c = SystemConfig::create(0.5, 0.5, 2);
    const PolicyParams p{2, 2, 1, 1, Family::JIQ};
    const auto h = ServiceDistribution::hyperexponential(4.0);
    const double analytic = evaluate_jiq(c, p, h).mean_response;
    const auto r = run(c.with_servers(1000), DispatchPolicy::from_params(p), h, 2'000'000, 200'000, 32);
    MESSAGE("analytic " << analytic << " sim " << r.mean_T << " +- " << r.ci_halfwidth_99);
    CHECK(std::abs(r.mean_T - analytic) < r.ci_halfwidth_99);
}

TEST_CASE("JSQ fast tail against a k = 2000 simulation") {
    const auto c = SystemConfig::create(0.8, 0.5, 1.1);
    const auto opt = optimize(c, Family::JSQ, 2, 2);
    const PolicyParams p{2, 2, opt.p_fast_opt, opt.p_slow_opt, Family::JSQ};
    const auto rho = solve_rho(c, p);
    const auto r = run(c.with_servers(2000), DispatchPolicy::from_params(p), kExp, 2'000'000, 200'000, 33);
    const double gap = sup_gap(fast_tail(c, p, rho), r.hist_fast.at_least);
    MESSAGE("fast tail gap " << gap);
    CHECK(gap < 0.02);
}

TEST_CASE("JSQ slow tail against a k = 2000 simulation") {
    const auto c = SystemConfig::create(0.9, 0.2, 10);
    const auto opt = optimize(c, Family::JSQ, 2, 2);
    const PolicyParams p{2, 2, opt.p_fast_opt, opt.p_slow_opt, Family::JSQ};
    const auto rho = solve_rho(c, p);
    const auto r = run(c.with_servers(2000), DispatchPolicy::from_params(p), kExp, 2'000'000, 200'000, 34);
    const double gap = sup_gap(slow_tail(c, p, rho), r.hist_slow.at_least);
    MESSAGE("slow tail gap " << gap);
    CHECK(gap < 0.02);
}

TEST_CASE("optimized JIQ at k = 1000 is within 2% of the analysis") {
    const auto c = SystemConfig::create(0.74, 0.5, 10);
    const auto opt = optimize(c, Family::JIQ, 2, 2);
    const auto r = run(c.with_servers(1000), DispatchPolicy::from_params({2, 2, opt.p_fast_opt, opt.p_slow_opt, Family::JIQ}),
                       kExp, 1'000'000, 100'000, 35);
    CHECK(std::abs(r.mean_T - opt.et_opt) / opt.et_opt < 0.02);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hetlb/errors.hpp"
#include "hetlb/jiq_analysis.hpp"

using namespace hetlb;

namespace {

const SystemConfig kTable = SystemConfig::create(0.74, 0.2, 5);

double mm1_pmf(double rho, int i) { return (1 - rho) * std::pow(rho, i); }

}  // namespace

TEST_CASE("pmf examples") {
    const GeometricQueueDist d{0.6, 0.5, 0.3, 1.2};
    CHECK(queue_pmf(d, 0) == 0.6);
    CHECK(queue_pmf(d, 1) == doctest::Approx(0.6 * 0.5 / 1.2));
    CHECK(queue_pmf(d, 3) == doctest::Approx(0.6 * 0.5 / 1.2 * 0.25 * 0.25));
    const double lam = 0.7, mu = 1.3;
    const GeometricQueueDist m{1 - lam / mu, lam, lam, mu};
    for (int i = 0; i < 30; ++i) CHECK(queue_pmf(m, i) == doctest::Approx(mm1_pmf(lam / mu, i)).epsilon(1e-12));
    CHECK(m.mean_jobs() == doctest::Approx(lam / (mu - lam)));
}

TEST_CASE("pmf of converged fixed points sums to one") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0, 1);
    int n = 0;
    for (int i = 0; i < 200; ++i) {
        const auto c = SystemConfig::create(0.05 + 0.9 * u(gen), 0.1 + 0.8 * u(gen), 1 + 9 * u(gen));
        const PolicyParams p{1 + i % 3, 1 + i % 2, u(gen), u(gen), Family::JIQ};
        try {
            const auto fp = solve_jiq_system(c, p);
            for (const auto& d : {tagged_fast(c, fp), tagged_slow(c, fp)}) {
                const auto pmf = queue_pmf_truncated(d);
                double s = 0, mean = 0;
                for (std::size_t k = 0; k < pmf.size(); ++k) s += pmf[k], mean += k * pmf[k];
                CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
                CHECK(mean == doctest::Approx(d.mean_jobs()).epsilon(1e-9));
                CHECK(d.lam_busy < d.mu);
            }
            ++n;
        } catch (const NoStableFixedPoint&) {
        }
    }
    CHECK(n > 50);
}

TEST_CASE("mean response, printed values") {
    const auto low = SystemConfig::create(0.14, 0.2, 5);
    CHECK(evaluate_jiq(low, {2, 2, 1, 0, Family::JIQ}).mean_response == doctest::Approx(0.384).epsilon(0.01));
    CHECK(evaluate_jiq(kTable, {2, 2, 1, 1, Family::JIQ}).mean_response == doctest::Approx(1.101).epsilon(0.01));
}

TEST_CASE("low-load limit is 1/muF") {
    for (const PolicyParams& p : {PolicyParams{2, 2, 1, 1, Family::JIQ}, PolicyParams{1, 3, 0.2, 0.9, Family::JIQ}}) {
        const auto c = SystemConfig::create(1e-6, 0.3, 4);
        CHECK(evaluate_jiq(c, p).mean_response == doctest::Approx(1 / c.mu_fast()).epsilon(1e-4));
    }
}

TEST_CASE("general service: exponential coincides, deterministic is smaller") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0, 1);
    int n = 0;
    for (int i = 0; i < 200; ++i) {
        const auto c = SystemConfig::create(0.05 + 0.9 * u(gen), 0.1 + 0.8 * u(gen), 1 + 9 * u(gen));
        const PolicyParams p{1 + i % 3, 1 + i % 2, u(gen), u(gen), Family::JIQ};
        try {
            const auto fp = solve_jiq_system(c, p);
            const double e = mean_response_exponential(c, fp);
            const double g = mean_response_general(c, fp, ServiceDistribution::exponential());
            // Equal at the exact fixed point; the solver stops at a 1e-12 step.
            CHECK(std::abs(e - g) < 1e-9 * std::max(1.0, e));
            CHECK(mean_response_general(c, fp, ServiceDistribution::deterministic()) < e);
            const auto [wf, ws] = class_weights(c, fp);
            CHECK(wf + ws == doctest::Approx(1.0).epsilon(1e-10));
            ++n;
        } catch (const NoStableFixedPoint&) {
        }
    }
    CHECK(n > 50);
}

TEST_CASE("mean response is linear in the second moment") {
    const auto c = SystemConfig::create(0.6, 0.4, 3);
    const auto fp = solve_jiq_system(c, {2, 2, 0.8, 0.7, Family::JIQ});
    const std::vector<double> cv2{2.0, 4.0, 9.0};
    std::vector<double> x, y;
    for (double v : cv2) {
        const auto s = ServiceDistribution::hyperexponential(v);
        x.push_back(s.second_moment());
        y.push_back(mean_response_general(c, fp, s));
    }
    const double slope = (y[1] - y[0]) / (x[1] - x[0]);
    CHECK(std::abs(y[0] + slope * (x[2] - x[0]) - y[2]) < 1e-10);
    // And the exponential and deterministic points lie on the same line.
    const double y_exp = mean_response_general(c, fp, ServiceDistribution::exponential());
    const double y_det = mean_response_general(c, fp, ServiceDistribution::deterministic());
    CHECK(std::abs(y[0] + slope * (2.0 - x[0]) - y_exp) < 1e-10);
    CHECK(std::abs(y[0] + slope * (1.0 - x[0]) - y_det) < 1e-10);
}

TEST_CASE("Little's law against the pmf") {
    const auto c = SystemConfig::create(0.74, 0.2, 5);
    const auto fp = solve_jiq_system(c, {2, 2, 1, 1, Family::JIQ});
    auto mean_of = [](const GeometricQueueDist& d) {
        const auto pmf = queue_pmf_truncated(d);
        double m = 0;
        for (std::size_t i = 0; i < pmf.size(); ++i) m += i * pmf[i];
        return m;
    };
    const double jobs_per_server = c.q_fast() * mean_of(tagged_fast(c, fp)) + c.q_slow() * mean_of(tagged_slow(c, fp));
    CHECK(std::abs(mean_response_exponential(c, fp) * c.lambda() - jobs_per_server) < 1e-9);
}

TEST_CASE("overloaded tagged queue is rejected") {
    const auto c = SystemConfig::create(0.95, 0.2, 5);
    CHECK_THROWS_AS(evaluate_jiq(c, {2, 2, 1, 0, Family::JIQ}), InfeasibleError);
}

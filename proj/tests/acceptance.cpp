// One line per acceptance criterion; exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hetlb/errors.hpp"
#include "hetlb/fixedpoint.hpp"
#include "hetlb/jiq_analysis.hpp"
#include "hetlb/jsq_analysis.hpp"
#include "hetlb/optimizer.hpp"
#include "hetlb/oracle.hpp"
#include "hetlb/simulator.hpp"

using namespace hetlb;

namespace {

const auto kExp = ServiceDistribution::exponential();

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

DispatchPolicy family(Family f, int df, int ds, double pf, double ps) {
    return DispatchPolicy::from_params({df, ds, pf, ps, f});
}

// Table 1 at qF = 0.2, r = 5.
struct TableRow {
    double lambda;
    double jiq_err, jsq_err;
};
const std::vector<TableRow> kTableRows{
    {0.14, 0, 0},           {0.24, 0, 0},          {0.34, 0.023, 0},     {0.44, 0.014, 1.693},
    {0.54, 1.196, 0.066},   {0.64, 0, 0.762},      {0.74, 0, 0},         {0.84, 3.732, 0},
    {0.90, 24.754, 22.697}, {0.98, 20.231, 12.804},
};

Outcome ac1() {
    struct Target {
        Family f;
        double lambda, et;
    };
    const std::vector<Target> targets{{Family::JIQ, 0.14, 0.384}, {Family::JIQ, 0.74, 1.101}, {Family::JIQ, 0.90, 2.331},
                                      {Family::JSQ, 0.14, 0.383}, {Family::JSQ, 0.74, 1.039}, {Family::JSQ, 0.90, 1.595}};
    auto worst_rel = [&](double r) {
        double w = 0;
        for (const auto& t : targets) {
            const auto o = optimize(SystemConfig::create(t.lambda, 0.2, r), t.f, 2, 2);
            w = std::max(w, std::abs(o.et_opt - t.et) / t.et);
        }
        return w;
    };
    const double rel5 = worst_rel(5.0);
    double err_gap = 0;
    for (const auto& row : kTableRows) {
        for (Family f : {Family::JIQ, Family::JSQ}) {
            const auto c = SystemConfig::create(row.lambda, 0.2, 5.0);
            const auto o = optimize(c, f, 2, 2);
            const auto h = heuristic(c, f, 2, 2);
            const double pct = 100 * (h.et_opt - o.et_opt) / o.et_opt;
            err_gap = std::max(err_gap, std::abs(pct - (f == Family::JIQ ? row.jiq_err : row.jsq_err)));
        }
    }
    const double rel10 = worst_rel(10.0);
    const bool pass = rel5 < 0.01 && err_gap < 2.0;
    return {pass, fmt("r=5 worst E[T] rel err %.4f%% (tol 1%%), worst %%-error gap %.3f pts (tol 2); "
                      "r=10 worst rel err %.1f%% -> r=5 matches the table",
                      100 * rel5, err_gap, 100 * rel10)};
}

Outcome ac2() {
    const auto base = SystemConfig::create(0.74, 0.5, 10);
    const std::vector<int> ks{10, 50, 100, 500, 1000};
    bool pass = true;
    std::string detail;
    for (Family f : {Family::JIQ, Family::JSQ}) {
        const auto o = optimize(base, f, 2, 2);
        std::vector<double> err, noise;
        for (int k : ks) {
            const auto r = run(base.with_servers(k), family(f, 2, 2, o.p_fast_opt, o.p_slow_opt), kExp, 1'000'000,
                               100'000, derive_seed(2, static_cast<std::uint64_t>(k)));
            err.push_back(std::abs(r.mean_T - o.et_opt) / o.et_opt);
            noise.push_back(r.ci_halfwidth_99 / o.et_opt);
        }
        // Later errors may not exceed earlier ones by more than their own noise.
        bool envelope = true;
        for (std::size_t i = 0; i < err.size(); ++i)
            for (std::size_t j = i + 1; j < err.size(); ++j) envelope &= err[j] <= err[i] + noise[j];
        const bool ok = envelope && err.back() < 0.02;
        pass &= ok;
        detail += fmt("%s rel err k=10..1000: %.4f %.4f %.4f %.4f %.4f%s; ", std::string(to_string(f)).c_str(), err[0],
                      err[1], err[2], err[3], err[4], envelope ? "" : " (envelope broken)");
    }
    return {pass, detail + "tol 2% at k=1000"};
}

Outcome ac3() {
    const auto c = SystemConfig::create(0.98, 0.2, 5, 500);
    const auto [pf, ps] = stability_construction(c);
    const std::int64_t n = 2'000'000;
    bool pass = true;
    std::string detail;
    for (Family f : {Family::JIQ, Family::JSQ}) {
        const auto stable = run(c, family(f, 2, 2, pf, ps), kExp, n, n / 5, 301);
        const auto over = run(c.with_lambda(0.995), family(f, 2, 2, 1.0, 1.0), kExp, n, n / 5, 302);
        const double spread = *std::max_element(stable.batch_means.begin(), stable.batch_means.end()) /
                              *std::min_element(stable.batch_means.begin(), stable.batch_means.end());
        pass &= !stable.unstable_flag && spread < 3.0 && over.unstable_flag;
        detail += fmt("%s: lambda=0.98 (muF qF, 1) flag=%d E[T]=%.3f batch max/min %.2f; lambda=0.995 pF=1 flag=%d; ",
                      std::string(to_string(f)).c_str(), stable.unstable_flag, stable.mean_T, spread, over.unstable_flag);
    }
    return {pass, detail};
}

Outcome ac4() {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0, 1);
    double tail_err = 0;
    for (int i = 0; i < 20; ++i) {
        const double qf = 0.1 + 0.8 * u(gen), r = 1 + 19 * u(gen);
        const auto mu = derive_rates(qf, r);
        const double lam = (0.02 + 0.96 * u(gen)) * qf * mu.mu_fast;
        const int d = 2 + i % 4;
        const auto c = SystemConfig::create(lam, qf, r);
        const PolicyParams p{d, 1 + i % 3, 1.0, 0.0, Family::JSQ};
        const auto t = fast_tail(c, p, solve_rho(c, p));
        const double le = lam / (qf * mu.mu_fast);
        for (std::size_t k = 0; k < t.tail.size(); ++k) {
            tail_err = std::max(tail_err, std::abs(t.tail[k] - std::pow(le, (std::pow(double(d), double(k)) - 1) / (d - 1))));
        }
    }
    int stable = 0;
    double cons = 0;
    while (stable < 1000) {
        const auto c = SystemConfig::create(0.01 + 0.98 * u(gen), 0.05 + 0.9 * u(gen), 1 + 19 * u(gen));
        const PolicyParams p{1 + static_cast<int>(u(gen) * 4), 1 + static_cast<int>(u(gen) * 4), u(gen), u(gen),
                             Family::JSQ};
        try {
            const auto r = solve_rho(c, p);
            cons = std::max(cons, std::abs(c.q_fast() * c.mu_fast() * r.rho_fast +
                                           c.q_slow() * c.mu_slow() * r.rho_slow - c.lambda()));
            ++stable;
        } catch (const NoStableFixedPoint&) {
        }
    }
    return {tail_err < 1e-8 && cons < 1e-9,
            fmt("power-of-d tail max err %.2e over 20 configs (tol 1e-8); conservation max err %.2e over 1000 (tol 1e-9)",
                tail_err, cons)};
}

Outcome ac5() {
    struct Case {
        const char* name;
        SystemConfig config;
        DispatchPolicy policy;
        int cap;
    };
    const std::vector<Case> cases{
        {"M/M/1 k=2", SystemConfig::create(0.2, 0.5, 10, 2), family(Family::JIQ, 1, 1, 1, 0), 20},
        {"JIQ-(1,1) k=2", SystemConfig::create(0.3, 0.5, 2, 2), family(Family::JIQ, 1, 1, 0.5, 0.5), 60},
        {"JSQ-(2,1) k=3", SystemConfig::create(0.5, 2.0 / 3, 3, 3), family(Family::JSQ, 2, 1, 0.7, 0.8), 40},
        {"SED-2 k=3", SystemConfig::create(0.5, 1.0 / 3, 3, 3), DispatchPolicy::sed_d(2), 40},
        {"JIQ-(2,2) k=4", SystemConfig::create(0.4, 0.5, 2, 4), family(Family::JIQ, 2, 2, 0.9, 0.6), 25},
    };
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const double exact = exact_metrics(c.config, c.policy, c.cap).mean_response;
        const auto r = run(c.config, c.policy, kExp, 10'000'000, 1'000'000, derive_seed(5, i));
        const double z = (r.mean_T - exact) / r.ci_halfwidth_99;
        pass &= std::abs(z) <= 1.0;
        detail += fmt("%s %.5f vs %.5f (%+.2f hw); ", c.name, r.mean_T, exact, z);
    }
    return {pass, detail};
}

Outcome ac6() {
    OptimizeOptions det;
    det.service = ServiceDistribution::deterministic();
    const std::vector<std::array<double, 3>> points{
        {0.3, 0.2, 5}, {0.6, 0.5, 2}, {0.9, 0.2, 5}, {0.74, 0.5, 10}, {0.5, 0.8, 1.1}};
    bool pass = true;
    std::string detail;
    for (const auto& p : points) {
        const auto c = SystemConfig::create(p[0], p[1], p[2]);
        const auto a = optimize(c, Family::JIQ, 2, 2);
        const auto b = optimize(c, Family::JIQ, 2, 2, det);
        const bool same = a.p_fast_opt == b.p_fast_opt && a.p_slow_opt == b.p_slow_opt;
        pass &= same;
        if (same) {
            detail += fmt("(%.4g,%.4g)= ", a.p_fast_opt, a.p_slow_opt);
        } else {
            const double reuse = *objective(c, {2, 2, a.p_fast_opt, a.p_slow_opt, Family::JIQ}, det.service);
            detail += fmt("(%.4g,%.4g)!=(%.4g,%.4g) det E[T] %.4f vs %.4f; ", a.p_fast_opt, a.p_slow_opt, b.p_fast_opt,
                          b.p_slow_opt, reuse, b.et_opt);
        }
    }
    return {pass, "exp vs det optima " + detail};
}

Outcome ac7() {
    int violations = 0, points = 0;
    double worst = -1e9;
    for (int i = 0; i < 10; ++i) {
        const double lam = 0.05 + 0.1 * i;
        for (double r : {1.1, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0}) {
            const auto c = SystemConfig::create(lam, 0.5, r);
            const double jsq = optimize(c, Family::JSQ, 2, 2).et_opt;
            const double jiq = optimize(c, Family::JIQ, 2, 2).et_opt;
            worst = std::max(worst, (jsq - jiq) / jiq);
            violations += jsq > jiq * (1 + 1e-12);
            ++points;
        }
    }
    return {violations == 0, fmt("%d/%d grid points with JSQ > JIQ; max (JSQ-JIQ)/JIQ = %.3g", violations, points, worst)};
}

Outcome ac8() {
    const auto base = SystemConfig::create(0.5, 0.2, 10, 500);
    const std::int64_t n = 1'000'000;
    std::uint64_t stream = 0;
    auto sim = [&](const DispatchPolicy& p, double lam) {
        return run(base.with_lambda(lam), p, kExp, n, n / 5, derive_seed(8, stream++));
    };
    bool pass = true;
    std::string detail;

    // Query sets with no fast server overload the slow servers once
    // lambda (1 - qF)^d exceeds qS muS.
    int flagged = 0, expected = 0;
    for (int d : {2, 4}) {
        for (double lam : {0.6, 0.8, 0.9}) {
            if (lam * std::pow(0.8, d) <= base.q_slow() * base.mu_slow()) continue;
            for (const auto& p : {DispatchPolicy::jsq_d(d), DispatchPolicy::sed_d(d)}) {
                ++expected;
                flagged += sim(p, lam).unstable_flag;
            }
        }
    }
    pass &= flagged == expected;
    detail += fmt("JSQ-d/SED-d flagged unstable %d/%d; ", flagged, expected);

    int ours_flagged = 0, ours = 0;
    for (double lam : {0.6, 0.8, 0.9}) {
        const auto c = base.with_servers(std::nullopt).with_lambda(lam);
        for (Family f : {Family::JIQ, Family::JSQ}) {
            const auto o = optimize(c, f, 2, 2);
            ++ours;
            ours_flagged += sim(family(f, 2, 2, o.p_fast_opt, o.p_slow_opt), lam).unstable_flag;
        }
        const auto o11 = optimize(c, Family::JIQ, 1, 1);
        ++ours;
        ours_flagged += sim(family(Family::JIQ, 1, 1, o11.p_fast_opt, o11.p_slow_opt), lam).unstable_flag;
    }
    pass &= ours_flagged == 0;
    detail += fmt("ours flagged %d/%d; ", ours_flagged, ours);

    const auto low = base.with_servers(std::nullopt).with_lambda(0.2);
    double best_ours = 1e9;
    for (Family f : {Family::JIQ, Family::JSQ}) {
        const auto o = optimize(low, f, 2, 2);
        best_ours = std::min(best_ours, sim(family(f, 2, 2, o.p_fast_opt, o.p_slow_opt), 0.2).mean_T);
    }
    double worst_margin = 1e9;
    for (int d : {2, 4}) {
        const double w = sim(DispatchPolicy::wjsq_d(d), 0.2).mean_T;
        worst_margin = std::min(worst_margin, w - best_ours);
        detail += fmt("WJSQ-%d %.3f ", d, w);
    }
    pass &= worst_margin > 0;
    detail += fmt("vs ours %.3f at lambda=0.2", best_ours);
    return {pass, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"AC1 table reproduction", ac1}, {"AC2 convergence in k", ac2},       {"AC3 stability", ac3},
        {"AC4 closed form / conservation", ac4}, {"AC5 small-instance exactness", ac5},
        {"AC6 insensitivity", ac6},      {"AC7 JSQ dominates JIQ", ac7},      {"AC8 baseline behaviour", ac8},
    };
    const std::vector<double> budgets{60, 600, 300, 10, 300, 60, 120, 600};
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < budgets[i];
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s %s: %s [%.1fs, budget %.0fs]\n", pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str(), secs,
                    budgets[i]);
        std::fflush(stdout);
    }
    return failures;
}

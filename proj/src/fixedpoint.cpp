#include "hetlb/fixedpoint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "hetlb/errors.hpp"

namespace hetlb {

RoutingSplit routing_split(const PolicyParams& policy, double rho_fast, double rho_slow) {
    const double all_fast_busy = std::pow(rho_fast, policy.d_fast);
    const double all_slow_busy = std::pow(rho_slow, policy.d_slow);
    RoutingSplit s{};
    s.idle_fast = 1.0 - all_fast_busy;
    s.idle_slow = all_fast_busy * (1.0 - all_slow_busy) * policy.p_slow;
    s.queue_fast = all_fast_busy * ((1.0 - all_slow_busy) * (1.0 - policy.p_slow) +
                                    all_slow_busy * policy.p_fast);
    s.queue_slow = all_fast_busy * all_slow_busy * (1.0 - policy.p_fast);
    return s;
}

double query_rate_fast(const SystemConfig& config, const PolicyParams& policy) {
    return config.lambda() * policy.d_fast / config.q_fast();
}

double query_rate_slow(const SystemConfig& config, const PolicyParams& policy) {
    return config.lambda() * policy.d_slow / config.q_slow();
}

std::pair<double, double> rho_map(const SystemConfig& config, const PolicyParams& policy,
                                  double rho_fast, double rho_slow) {
    const auto split = routing_split(policy, rho_fast, rho_slow);
    const double lam = config.lambda();
    return {lam / (config.mu_fast() * config.q_fast()) * split.to_fast(),
            lam / (config.mu_slow() * config.q_slow()) * split.to_slow()};
}

namespace {

constexpr int kPinnedLimit = 200;
constexpr int kStagnationWindow = 1000;

template <std::size_t N>
struct Attempt {
    std::array<double, N> x;
    double residual;
    int iterations;
    bool converged;
};

// x <- (1 - a) x + a map(x), projected. Gives up early when the iterate stays
// pinned on the boundary or the residual stops shrinking (a cycle).
template <std::size_t N, typename Map, typename Project>
Attempt<N> damped_attempt(const Map& map, const Project& project, std::array<double, N> x,
                          double a, const SolveOptions& options) {
    double residual = 0.0;
    double checkpoint = std::numeric_limits<double>::infinity();
    int pinned = 0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const auto y = map(x);
        residual = 0.0;
        for (std::size_t i = 0; i < N; ++i) residual = std::max(residual, std::abs(y[i] - x[i]));
        if (residual < options.tolerance) return {y, residual, it, true};
        for (std::size_t i = 0; i < N; ++i) x[i] = (1.0 - a) * x[i] + a * y[i];
        pinned = project(x) ? pinned + 1 : 0;
        if (pinned >= kPinnedLimit) return {x, residual, it, false};
        if (it % kStagnationWindow == 0) {
            if (residual > 0.9 * checkpoint) return {x, residual, it, false};
            checkpoint = residual;
        }
    }
    return {x, residual, options.max_iterations, false};
}

// Runs damped_attempt from x0 with damping options.damping, halving it on
// failure down to options.min_damping. Iteration counts accumulate.
template <std::size_t N, typename Map, typename Project>
Attempt<N> damped_solve(const Map& map, const Project& project, const std::array<double, N>& x0,
                        const SolveOptions& options) {
    Attempt<N> last{x0, 0.0, 0, false};
    int total = 0;
    for (double a = options.damping; a >= options.min_damping; a *= 0.5) {
        last = damped_attempt(map, project, x0, a, options);
        total += last.iterations;
        if (last.converged) break;
    }
    last.iterations = total;
    return last;
}

struct RhoIterate {
    double rho_fast, rho_slow, residual;
    int iterations;
    bool converged;
};

RhoIterate iterate_rho(const SystemConfig& config, const PolicyParams& policy,
                       const SolveOptions& options, double rho_fast, double rho_slow) {
    auto map = [&](const std::array<double, 2>& x) {
        const auto [f, s] = rho_map(config, policy, x[0], x[1]);
        return std::array<double, 2>{f, s};
    };
    // Iterates are kept in the unit square; only the limit is judged.
    auto project = [](std::array<double, 2>& x) {
        x[0] = std::clamp(x[0], 0.0, 1.0);
        x[1] = std::clamp(x[1], 0.0, 1.0);
        return x[0] == 1.0 || x[1] == 1.0;
    };
    const auto r = damped_solve<2>(map, project, {rho_fast, rho_slow}, options);
    return {r.x[0], r.x[1], r.residual, r.iterations, r.converged};
}

bool busy_rates_stable(const SystemConfig& config, const PolicyParams& policy,
                       double rho_fast, double rho_slow, double margin) {
    const auto rates = tagged_rates(config, policy, 1.0 - rho_fast, 1.0 - rho_slow);
    return rates.lam_busy_fast < config.mu_fast() * (1.0 - margin) &&
           rates.lam_busy_slow < config.mu_slow() * (1.0 - margin);
}

bool acceptable(const SystemConfig& config, const PolicyParams& policy,
                const SolveOptions& options, const RhoIterate& r) {
    return r.converged && r.rho_fast < 1.0 && r.rho_slow < 1.0 && r.rho_fast >= 0.0 &&
           r.rho_slow >= 0.0 &&
           busy_rates_stable(config, policy, r.rho_fast, r.rho_slow, options.stability_margin);
}

std::string describe(const SystemConfig& config, const PolicyParams& policy) {
    std::ostringstream out;
    out << "lambda=" << config.lambda() << " q_fast=" << config.q_fast()
        << " r=" << config.speed_ratio() << " d=(" << policy.d_fast << "," << policy.d_slow
        << ") p_fast=" << policy.p_fast << " p_slow=" << policy.p_slow;
    return out.str();
}

}  // namespace

RhoSolution solve_rho(const SystemConfig& config, const PolicyParams& policy,
                      const SolveOptions& options) {
    config.require_stable_load();
    policy.validate(config);
    const double lam = config.lambda();
    const auto main = iterate_rho(config, policy, options, lam, lam);
    if (!acceptable(config, policy, options, main)) {
        std::ostringstream msg;
        msg << "no stable fixed point (" << describe(config, policy) << "; limit rho=("
            << main.rho_fast << "," << main.rho_slow << ")"
            << (main.converged ? "" : ", not converged") << ")";
        throw NoStableFixedPoint(msg.str());
    }
    RhoSolution out;
    out.rho_fast = main.rho_fast;
    out.rho_slow = main.rho_slow;
    out.iterations = main.iterations;
    out.residual = main.residual;
    if (options.check_multiplicity) {
        const std::array<std::pair<double, double>, 4> starts{
            {{0.0, 0.0}, {1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}}};
        for (const auto& [f0, s0] : starts) {
            const auto alt = iterate_rho(config, policy, options, f0, s0);
            if (!acceptable(config, policy, options, alt)) continue;
            if (std::abs(alt.rho_fast - out.rho_fast) > 1e-8 ||
                std::abs(alt.rho_slow - out.rho_slow) > 1e-8) {
                out.multiple_fixed_points = true;
                out.other_limits.emplace_back(alt.rho_fast, alt.rho_slow);
            }
        }
    }
    return out;
}

double idle_share(int others, double p_idle) {
    double sum = 0.0;
    double binom = 1.0;
    for (int i = 0; i <= others; ++i) {
        sum += binom * std::pow(p_idle, i) * std::pow(1.0 - p_idle, others - i) / (i + 1);
        binom = binom * (others - i) / (i + 1);
    }
    return sum;
}

TaggedRates tagged_rates(const SystemConfig& config, const PolicyParams& policy,
                         double pi0_fast, double pi0_slow) {
    const int df = policy.d_fast;
    const int ds = policy.d_slow;
    const double busy_f = 1.0 - pi0_fast;
    const double busy_s = 1.0 - pi0_slow;
    const double all_slow_busy = std::pow(busy_s, ds);
    const double all_fast_busy = std::pow(busy_f, df);
    const double qf_rate = query_rate_fast(config, policy);
    const double qs_rate = query_rate_slow(config, policy);

    TaggedRates r{};
    r.lam_idle_fast = qf_rate * idle_share(df - 1, pi0_fast);
    r.lam_busy_fast = qf_rate * std::pow(busy_f, df - 1) / df *
                      ((1.0 - all_slow_busy) * (1.0 - policy.p_slow) + all_slow_busy * policy.p_fast);
    r.lam_idle_slow = qs_rate * all_fast_busy * idle_share(ds - 1, pi0_slow) * policy.p_slow;
    r.lam_busy_slow = qs_rate * all_fast_busy * std::pow(busy_s, ds - 1) / ds * (1.0 - policy.p_fast);
    return r;
}

namespace {

// Idle probability of a state-dependent M/M/1: (mu - lb) / (mu - lb + li).
double tagged_pi0(double mu, double lam_idle, double lam_busy) {
    const double headroom = mu - lam_busy;
    const double denom = headroom + lam_idle;
    if (denom <= 0.0) return 0.0;
    return std::clamp(headroom / denom, 0.0, 1.0);
}

struct SixState {
    std::array<double, 6> v;  // pi0F, pi0S, lIF, lBF, lIS, lBS
};

SixState six_map(const SystemConfig& config, const PolicyParams& policy, const SixState& x) {
    const auto rates = tagged_rates(config, policy, x.v[0], x.v[1]);
    SixState y;
    y.v[0] = tagged_pi0(config.mu_fast(), x.v[2], x.v[3]);
    y.v[1] = tagged_pi0(config.mu_slow(), x.v[4], x.v[5]);
    y.v[2] = rates.lam_idle_fast;
    y.v[3] = rates.lam_busy_fast;
    y.v[4] = rates.lam_idle_slow;
    y.v[5] = rates.lam_busy_slow;
    return y;
}

struct SixResult {
    SixState x;
    int iterations;
    double residual;
    bool converged;
};

SixResult iterate_six(const SystemConfig& config, const PolicyParams& policy,
                      const SolveOptions& options, SixState x) {
    auto map = [&](const std::array<double, 6>& v) { return six_map(config, policy, {v}).v; };
    auto project = [](std::array<double, 6>&) { return false; };
    const auto r = damped_solve<6>(map, project, x.v, options);
    return {{r.x}, r.iterations, r.residual, r.converged};
}

}  // namespace

double jiq_system_residual(const SystemConfig& config, const PolicyParams& policy,
                           const RhoFixedPoint& fp) {
    SixState x{{fp.pi0_fast, fp.pi0_slow, fp.lam_idle_fast, fp.lam_busy_fast, fp.lam_idle_slow,
                fp.lam_busy_slow}};
    const auto y = six_map(config, policy, x);
    double residual = 0.0;
    for (std::size_t i = 0; i < 6; ++i) residual = std::max(residual, std::abs(y.v[i] - x.v[i]));
    return residual;
}

RhoFixedPoint solve_jiq_system(const SystemConfig& config, const PolicyParams& policy,
                               const SolveOptions& options) {
    config.require_stable_load();
    policy.validate(config);
    const double lam = config.lambda();

    auto finish = [&](const SixResult& r) {
        RhoFixedPoint fp;
        fp.pi0_fast = r.x.v[0];
        fp.pi0_slow = r.x.v[1];
        fp.lam_idle_fast = r.x.v[2];
        fp.lam_busy_fast = r.x.v[3];
        fp.lam_idle_slow = r.x.v[4];
        fp.lam_busy_slow = r.x.v[5];
        fp.rho_fast = 1.0 - fp.pi0_fast;
        fp.rho_slow = 1.0 - fp.pi0_slow;
        fp.converged = r.converged;
        fp.iterations = r.iterations;
        fp.residual = r.residual;
        return fp;
    };
    auto stable = [&](const RhoFixedPoint& fp) {
        return fp.converged && fp.pi0_fast > 0.0 && fp.pi0_slow > 0.0 &&
               fp.lam_busy_fast < config.mu_fast() * (1.0 - options.stability_margin) &&
               fp.lam_busy_slow < config.mu_slow() * (1.0 - options.stability_margin);
    };

    // The six-variable map shares its fixed points with the two-variable
    // balance map, which rejects infeasible inputs far faster. Solve that
    // first, then iterate the tagged-server system from (1-lam, 1-lam,
    // lam dF / qF, 0, 0, 0); if that lands elsewhere, polish from the seed.
    const auto rho = solve_rho(config, policy, options);
    SixState start{{1.0 - lam, 1.0 - lam, lam / config.q_fast() * policy.d_fast, 0.0, 0.0, 0.0}};
    auto fp = finish(iterate_six(config, policy, options, start));
    fp.iterations += rho.iterations;
    if (stable(fp) && std::abs(fp.rho_fast - rho.rho_fast) < 1e-8 &&
        std::abs(fp.rho_slow - rho.rho_slow) < 1e-8) {
        return fp;
    }
    const auto rates = tagged_rates(config, policy, 1.0 - rho.rho_fast, 1.0 - rho.rho_slow);
    SixState seeded{{1.0 - rho.rho_fast, 1.0 - rho.rho_slow, rates.lam_idle_fast,
                     rates.lam_busy_fast, rates.lam_idle_slow, rates.lam_busy_slow}};
    fp = finish(iterate_six(config, policy, options, seeded));
    fp.iterations += rho.iterations;
    if (stable(fp)) return fp;
    throw NoStableFixedPoint("tagged-server system has no stable fixed point (" +
                             describe(config, policy) + ")");
}

}  // namespace hetlb

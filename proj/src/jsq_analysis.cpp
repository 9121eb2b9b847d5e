#include "hetlb/jsq_analysis.hpp"

#include <cmath>
#include <sstream>

#include "hetlb/errors.hpp"

namespace hetlb {

double fast_tail_coefficient(const SystemConfig& config, const PolicyParams& policy,
                             double rho_slow) {
    const double all_slow_busy = std::pow(rho_slow, policy.d_slow);
    const double join_busy_fast =
        (1.0 - all_slow_busy) * (1.0 - policy.p_slow) + all_slow_busy * policy.p_fast;
    return config.lambda() / (config.q_fast() * config.mu_fast()) * join_busy_fast;
}

double slow_tail_coefficient(const SystemConfig& config, const PolicyParams& policy,
                             double rho_fast) {
    return config.lambda() / (config.q_slow() * config.mu_slow()) *
           std::pow(rho_fast, policy.d_fast) * (1.0 - policy.p_fast);
}

namespace {

// Stationary tail of a power-of-d class. Summing the balance equations for
// indices >= i+1 gives t_{i+1} = coef * t_i^d for i >= 1, which is the
// numerically stable form of the forward recursion t_{i+1} = t_i - coef *
// (t_{i-1}^d - t_i^d). The second term is cross-checked against the direct
// i = 1 balance t_2 = t_1 - first_arrival * (1 - t_1^d).
TailDistribution build_tail(ServerClass cls, double busy, double first_arrival, double coef,
                            int d, const TailOptions& options) {
    TailDistribution out;
    out.trunc_tol = options.trunc_tol;
    out.server_class = cls;
    out.tail = {1.0, busy};
    if (busy < options.trunc_tol) return out;

    const double direct = busy - first_arrival * (1.0 - std::pow(busy, d));
    const double next = coef * std::pow(busy, d);
    if (direct < -options.clamp_tol || std::abs(direct - next) > options.clamp_tol) {
        std::ostringstream msg;
        msg << "tail recursion inconsistent with busy fraction " << busy << " (t2 direct "
            << direct << " vs " << next << ")";
        throw DivergentTail(msg.str());
    }
    double cur = next;
    while (true) {
        if (cur > out.tail.back()) {
            throw DivergentTail("tail is increasing; busy-server queue is overloaded");
        }
        out.tail.push_back(cur);
        if (cur < options.trunc_tol) break;
        if (out.tail.size() >= options.max_terms) {
            throw DivergentTail("tail did not fall below truncation tolerance");
        }
        cur = coef * std::pow(cur, d);
    }
    return out;
}

}  // namespace

TailDistribution fast_tail(const SystemConfig& config, const PolicyParams& policy,
                           const RhoSolution& rho, const TailOptions& options) {
    const double first = config.lambda() / (config.q_fast() * config.mu_fast());
    return build_tail(ServerClass::Fast, rho.rho_fast, first,
                      fast_tail_coefficient(config, policy, rho.rho_slow), policy.d_fast, options);
}

TailDistribution slow_tail(const SystemConfig& config, const PolicyParams& policy,
                           const RhoSolution& rho, const TailOptions& options) {
    const double first = config.lambda() / (config.q_slow() * config.mu_slow()) *
                         std::pow(rho.rho_fast, policy.d_fast) * policy.p_slow;
    return build_tail(ServerClass::Slow, rho.rho_slow, first,
                      slow_tail_coefficient(config, policy, rho.rho_fast), policy.d_slow, options);
}

namespace {

double tail_residual(const TailDistribution& t, double first, double coef, int d) {
    double worst = 0.0;
    for (std::size_t i = 1; i < t.tail.size(); ++i) {
        const double inflow = (i == 1 ? first : coef) *
                              (std::pow(t.at(i - 1), d) - std::pow(t.at(i), d));
        worst = std::max(worst, std::abs(inflow - (t.at(i) - t.at(i + 1))));
    }
    return worst;
}

}  // namespace

double fast_tail_residual(const SystemConfig& config, const PolicyParams& policy,
                          const RhoSolution& rho, const TailDistribution& tail) {
    return tail_residual(tail, config.lambda() / (config.q_fast() * config.mu_fast()),
                         fast_tail_coefficient(config, policy, rho.rho_slow), policy.d_fast);
}

double slow_tail_residual(const SystemConfig& config, const PolicyParams& policy,
                          const RhoSolution& rho, const TailDistribution& tail) {
    const double first = config.lambda() / (config.q_slow() * config.mu_slow()) *
                         std::pow(rho.rho_fast, policy.d_fast) * policy.p_slow;
    return tail_residual(tail, first, slow_tail_coefficient(config, policy, rho.rho_fast),
                         policy.d_slow);
}

double mean_wait_conditional(const TailDistribution& tail, int d, double mu) {
    const double busy = tail.at(1);
    if (!(busy > 0.0)) {
        throw ConditionalUndefined("no busy servers in this class; conditional wait undefined");
    }
    const double norm = std::pow(busy, d);
    double sum = 0.0;
    for (std::size_t i = 1; i <= 10000; ++i) {
        const double term =
            (static_cast<double>(i) + 1.0) * (std::pow(tail.at(i), d) - std::pow(tail.at(i + 1), d)) / norm;
        sum += term;
        if (term < 1e-14) break;
    }
    return sum / mu;
}

std::array<double, 4> branch_probabilities(const PolicyParams& policy, double rho_fast,
                                           double rho_slow) {
    const auto s = routing_split(policy, rho_fast, rho_slow);
    return {s.idle_fast, s.idle_slow, s.queue_fast, s.queue_slow};
}

JsqEvaluation evaluate_jsq(const SystemConfig& config, const PolicyParams& policy,
                           const SolveOptions& options) {
    JsqEvaluation out;
    out.rho = solve_rho(config, policy, options);
    out.fast = fast_tail(config, policy, out.rho);
    out.slow = slow_tail(config, policy, out.rho);
    out.branches = branch_probabilities(policy, out.rho.rho_fast, out.rho.rho_slow);
    double et = out.branches[0] / config.mu_fast() + out.branches[1] / config.mu_slow();
    if (out.branches[2] > 0.0) {
        out.wait_fast = mean_wait_conditional(out.fast, policy.d_fast, config.mu_fast());
        et += out.branches[2] * out.wait_fast;
    }
    if (out.branches[3] > 0.0) {
        out.wait_slow = mean_wait_conditional(out.slow, policy.d_slow, config.mu_slow());
        et += out.branches[3] * out.wait_slow;
    }
    out.mean_response = et;
    return out;
}

double mean_response(const SystemConfig& config, const PolicyParams& policy) {
    return evaluate_jsq(config, policy).mean_response;
}

}  // namespace hetlb

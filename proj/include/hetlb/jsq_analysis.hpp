#pragma once

#include <array>
#include <vector>

#include "hetlb/fixedpoint.hpp"
#include "hetlb/model.hpp"

namespace hetlb {

enum class ServerClass { Fast, Slow };

// Stationary fraction of servers of one class holding at least i jobs,
// tail[0] = 1, tail[1] = busy fraction, truncated once below trunc_tol.
struct TailDistribution {
    std::vector<double> tail;
    double trunc_tol = 1e-12;
    ServerClass server_class = ServerClass::Fast;

    double at(std::size_t i) const { return i < tail.size() ? tail[i] : 0.0; }
};

struct TailOptions {
    double trunc_tol = 1e-12;
    double clamp_tol = 1e-9;
    std::size_t max_terms = 10000;
};

// Arrival-side coefficient of the fast-tail balance equations for i >= 2:
// lambda / (qF muF) * ((1 - rhoS^dS)(1 - pS) + rhoS^dS pF).
double fast_tail_coefficient(const SystemConfig& config, const PolicyParams& policy,
                             double rho_slow);
// lambda / (qS muS) * rhoF^dF (1 - pF).
double slow_tail_coefficient(const SystemConfig& config, const PolicyParams& policy,
                             double rho_fast);

TailDistribution fast_tail(const SystemConfig& config, const PolicyParams& policy,
                           const RhoSolution& rho, const TailOptions& options = {});
TailDistribution slow_tail(const SystemConfig& config, const PolicyParams& policy,
                           const RhoSolution& rho, const TailOptions& options = {});

// Largest |df_i/dt| (scaled by 1/mu) over the retained terms; zero at an exact
// stationary point of the mean-field equations.
double fast_tail_residual(const SystemConfig& config, const PolicyParams& policy,
                          const RhoSolution& rho, const TailDistribution& tail);
double slow_tail_residual(const SystemConfig& config, const PolicyParams& policy,
                          const RhoSolution& rho, const TailDistribution& tail);

// Mean response of a job that joins the shortest of d busy queues of this class.
double mean_wait_conditional(const TailDistribution& tail, int d, double mu);

// Branches of the response-time decomposition, in order: idle fast, idle slow,
// queue at busy fast, queue at busy slow.
std::array<double, 4> branch_probabilities(const PolicyParams& policy, double rho_fast,
                                           double rho_slow);

struct JsqEvaluation {
    RhoSolution rho;
    TailDistribution fast;
    TailDistribution slow;
    std::array<double, 4> branches;
    double wait_fast = 0.0;  // conditional means; 0 when the branch is unused
    double wait_slow = 0.0;
    double mean_response = 0.0;
};

JsqEvaluation evaluate_jsq(const SystemConfig& config, const PolicyParams& policy,
                           const SolveOptions& options = {});

double mean_response(const SystemConfig& config, const PolicyParams& policy);

}  // namespace hetlb

#pragma once

#include <vector>

#include "hetlb/model.hpp"

namespace hetlb {

struct SolveOptions {
    // Initial damping; halved after a failed attempt down to min_damping.
    double damping = 0.5;
    double min_damping = 1.0 / 32.0;
    double tolerance = 1e-12;
    int max_iterations = 100000;
    // Busy-server arrival rates must stay below mu * (1 - stability_margin).
    double stability_margin = 1e-7;
    // Re-solve from extra starting points and flag a second stable limit.
    bool check_multiplicity = false;
};

// Busy fractions solving the routing balance equations. Independent of the
// choice between JIQ and JSQ and of the service-time law.
struct RhoSolution {
    double rho_fast = 0.0;
    double rho_slow = 0.0;
    int iterations = 0;
    double residual = 0.0;
    bool multiple_fixed_points = false;
    std::vector<std::pair<double, double>> other_limits;
};

// Tagged-server quantities for JIQ-(dF,dS).
struct RhoFixedPoint {
    double rho_fast = 0.0;
    double rho_slow = 0.0;
    double pi0_fast = 1.0;
    double pi0_slow = 1.0;
    double lam_idle_fast = 0.0;
    double lam_busy_fast = 0.0;
    double lam_idle_slow = 0.0;
    double lam_busy_slow = 0.0;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

// Probabilities that a tagged arrival lands in each of the four ways a job can
// be placed, given independent server states with busy fractions (rhoF, rhoS).
struct RoutingSplit {
    double idle_fast;   // some queried fast server idle
    double idle_slow;   // all queried fast busy, idle slow used
    double queue_fast;  // queued at a busy fast server
    double queue_slow;  // queued at a busy slow server

    double to_fast() const { return idle_fast + queue_fast; }
    double to_slow() const { return idle_slow + queue_slow; }
};

RoutingSplit routing_split(const PolicyParams& policy, double rho_fast, double rho_slow);

// Rate at which jobs query one particular fast (slow) server: lambda * d / q.
double query_rate_fast(const SystemConfig& config, const PolicyParams& policy);
double query_rate_slow(const SystemConfig& config, const PolicyParams& policy);

// One application of the balance map (rhoF, rhoS) -> (F, S).
std::pair<double, double> rho_map(const SystemConfig& config, const PolicyParams& policy,
                                  double rho_fast, double rho_slow);

// Damped fixed-point iteration from (lambda, lambda). Throws NoStableFixedPoint
// when the limit is not an interior point with stable busy-server rates.
RhoSolution solve_rho(const SystemConfig& config, const PolicyParams& policy,
                      const SolveOptions& options = {});

struct TaggedRates {
    double lam_idle_fast, lam_busy_fast, lam_idle_slow, lam_busy_slow;
};

// Arrival rates to a tagged idle/busy fast/slow server given idle
// probabilities of the other servers.
TaggedRates tagged_rates(const SystemConfig& config, const PolicyParams& policy,
                         double pi0_fast, double pi0_slow);

// Mean of 1/(1+X) for X ~ Binomial(n, p): the chance that a tagged idle server
// wins a uniform tie-break against n other queried servers each idle w.p. p.
double idle_share(int others, double p_idle);

// Solves the six tagged-server equations (rates and idle probabilities).
RhoFixedPoint solve_jiq_system(const SystemConfig& config, const PolicyParams& policy,
                               const SolveOptions& options = {});

// Maximum residual of the six tagged-server equations at fp.
double jiq_system_residual(const SystemConfig& config, const PolicyParams& policy,
                           const RhoFixedPoint& fp);

}  // namespace hetlb

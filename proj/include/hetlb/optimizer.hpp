#pragma once

#include <optional>
#include <vector>

#include "hetlb/model.hpp"

namespace hetlb {

enum class OptMethod { GridRefine, Heuristic };

struct Candidate {
    double p_fast;
    double p_slow;
    std::optional<double> et;  // nullopt when no stable fixed point exists
};

struct OptResult {
    double p_fast_opt = 0.0;
    double p_slow_opt = 0.0;
    double et_opt = 0.0;
    double feasible_fraction = 0.0;
    OptMethod method = OptMethod::GridRefine;
    // Candidates within tie_tolerance of the optimum (relative), >= 1.
    int ties = 1;
    std::vector<Candidate> candidates;
};

struct OptimizeOptions {
    int grid_divisions = 64;
    int refine_passes = 2;
    int refine_factor = 8;
    double tie_tolerance = 1e-12;
    // Objective service law; only the JIQ family supports non-exponential.
    ServiceDistribution service = ServiceDistribution::exponential();
    // Worker threads for grid evaluation; 0 picks hardware concurrency.
    unsigned threads = 1;
};

// Mean response time of a family member, or nullopt when infeasible.
std::optional<double> objective(const SystemConfig& config, const PolicyParams& policy,
                                const ServiceDistribution& service = ServiceDistribution::exponential());

OptResult optimize(const SystemConfig& config, Family family, int d_fast, int d_slow,
                   const OptimizeOptions& options = {});

// Best of the seven-policy candidate set.
OptResult heuristic(const SystemConfig& config, Family family, int d_fast, int d_slow,
                    const OptimizeOptions& options = {});

std::vector<std::pair<double, double>> heuristic_candidates(const SystemConfig& config);

// (muF qF, 1): stable for every lambda < 1.
std::pair<double, double> stability_construction(const SystemConfig& config);

// Sufficient heavy-traffic stability condition: pF == muF qF, pS >= muS qS.
bool heavy_traffic_stable(const SystemConfig& config, double p_fast, double p_slow,
                          double tol = 1e-9);

// Random routing: a fraction p_fast of jobs to a uniform fast server, the rest
// to a uniform slow server. Each server is an M/M/1.
std::optional<double> random_routing_response(const SystemConfig& config, double p_fast);
OptResult optimize_random_routing(const SystemConfig& config, const OptimizeOptions& options = {});

}  // namespace hetlb

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/SparseCore>

#include "hetlb/dispatch.hpp"
#include "hetlb/model.hpp"

namespace hetlb {

// Joint queue-length chain of a small finite system with exponential service.
// State (n_1, ..., n_k), each n_i in [0, cap], encoded in mixed radix with
// server 0 least significant; servers [0, kF) are fast. Arrivals routed to a
// server at the cap are dropped.
struct CtmcSpec {
    int k = 0;
    int k_fast = 0;
    int cap = 0;
    std::size_t states = 0;
    // Q(from, to); column-major so that column j lists transitions into j.
    Eigen::SparseMatrix<double> generator;
    // Per-state rate of arrivals lost at the cap.
    std::vector<double> blocked_rate;
    double arrival_rate = 0.0;  // lambda * k

    std::vector<int> decode(std::size_t state) const;
};

struct OracleOptions {
    double truncation_limit = 1e-8;
    std::size_t max_states = 10'000'000;
    // Direct sparse LU at or below this many states, Gauss-Seidel above.
    std::size_t direct_limit = 60'000;
    double tolerance = 1e-14;
    int max_sweeps = 200'000;
};

// Throws StateSpaceTooLarge above options.max_states or k > 8.
CtmcSpec build_ctmc(const SystemConfig& config, const DispatchPolicy& policy, int cap,
                    const OracleOptions& options = {});

struct StationaryInfo {
    bool direct = false;
    int sweeps = 0;
    double residual = 0.0;  // max |(pi Q)_j|
};

std::vector<double> stationary_distribution(const CtmcSpec& spec, const OracleOptions& options = {},
                                            StationaryInfo* info = nullptr);

struct ExactMetrics {
    double mean_response = 0.0;  // Little's law on accepted throughput
    double mean_jobs = 0.0;      // whole system
    double busy_fast = 0.0;
    double busy_slow = 0.0;
    std::vector<double> pmf_fast;  // per-server queue length, averaged over the class
    std::vector<double> pmf_slow;
    double cap_mass = 0.0;  // P(some server at the cap)
    double blocking = 0.0;  // fraction of arrivals lost
    std::size_t states = 0;
    int cap = 0;
    StationaryInfo solve;
};

// Throws TruncationTooSmall when cap_mass >= options.truncation_limit.
ExactMetrics exact_metrics(const SystemConfig& config, const DispatchPolicy& policy, int cap,
                           const OracleOptions& options = {});
ExactMetrics exact_metrics(const SystemConfig& config, const PolicyParams& policy, int cap,
                           const OracleOptions& options = {});

}  // namespace hetlb

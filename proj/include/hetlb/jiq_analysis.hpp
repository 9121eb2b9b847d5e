#pragma once

#include <vector>

#include "hetlb/fixedpoint.hpp"
#include "hetlb/model.hpp"

namespace hetlb {

// Tagged server under JIQ-(dF,dS): an M/M/1 whose arrival rate is lam_idle
// in state 0 and lam_busy otherwise.
struct GeometricQueueDist {
    double pi0;
    double lam_idle;
    double lam_busy;
    double mu;

    double mean_jobs() const;
};

GeometricQueueDist tagged_fast(const SystemConfig& config, const RhoFixedPoint& fp);
GeometricQueueDist tagged_slow(const SystemConfig& config, const RhoFixedPoint& fp);

// P(exactly i jobs at the tagged server).
double queue_pmf(const GeometricQueueDist& dist, int i);

// pmf[0..n] where n is the first index whose term falls below cutoff.
std::vector<double> queue_pmf_truncated(const GeometricQueueDist& dist, double cutoff = 1e-15);

double mean_response_exponential(const SystemConfig& config, const RhoFixedPoint& fp);

// Fraction of arrivals that run on fast (first) and slow (second) servers,
// q * lambda_class / lambda, where lambda_class = lam_idle * pi0 + lam_busy * rho
// is the per-server arrival rate of that class.
std::pair<double, double> class_weights(const SystemConfig& config, const RhoFixedPoint& fp);

// Pollaczek-Khinchine per class, weighted by class_weights. The service law is
// a shape: fast jobs take mean 1/muF, slow jobs 1/muS.
double mean_response_general(const SystemConfig& config, const RhoFixedPoint& fp,
                             const ServiceDistribution& service);

struct JiqEvaluation {
    RhoFixedPoint fp;
    double mean_response;
};

// Fixed point plus mean response time (exponential when service is exp).
JiqEvaluation evaluate_jiq(const SystemConfig& config, const PolicyParams& policy,
                           const ServiceDistribution& service = ServiceDistribution::exponential(),
                           const SolveOptions& options = {});

}  // namespace hetlb

#include "hetlb/jiq_analysis.hpp"

#include <cmath>

#include "hetlb/errors.hpp"

namespace hetlb {

double GeometricQueueDist::mean_jobs() const {
    const double headroom = mu - lam_busy;
    return lam_idle * mu / (headroom * (headroom + lam_idle));
}

GeometricQueueDist tagged_fast(const SystemConfig& config, const RhoFixedPoint& fp) {
    return {fp.pi0_fast, fp.lam_idle_fast, fp.lam_busy_fast, config.mu_fast()};
}

GeometricQueueDist tagged_slow(const SystemConfig& config, const RhoFixedPoint& fp) {
    return {fp.pi0_slow, fp.lam_idle_slow, fp.lam_busy_slow, config.mu_slow()};
}

double queue_pmf(const GeometricQueueDist& dist, int i) {
    if (i < 0) return 0.0;
    if (i == 0) return dist.pi0;
    return dist.lam_idle / dist.mu * std::pow(dist.lam_busy / dist.mu, i - 1) * dist.pi0;
}

std::vector<double> queue_pmf_truncated(const GeometricQueueDist& dist, double cutoff) {
    std::vector<double> pmf{dist.pi0};
    if (dist.lam_idle <= 0.0) return pmf;
    double term = dist.lam_idle / dist.mu * dist.pi0;
    const double ratio = dist.lam_busy / dist.mu;
    while (term >= cutoff && pmf.size() < 1'000'000) {
        pmf.push_back(term);
        term *= ratio;
    }
    return pmf;
}

namespace {

void require_stable(double mu, double lam_busy, const char* which) {
    if (!(mu - lam_busy > 0.0)) {
        throw DivergenceError(std::string("tagged ") + which + " server is overloaded");
    }
}

}  // namespace

double mean_response_exponential(const SystemConfig& config, const RhoFixedPoint& fp) {
    require_stable(config.mu_fast(), fp.lam_busy_fast, "fast");
    require_stable(config.mu_slow(), fp.lam_busy_slow, "slow");
    const double lam = config.lambda();
    return (config.q_fast() * tagged_fast(config, fp).mean_jobs() +
            config.q_slow() * tagged_slow(config, fp).mean_jobs()) /
           lam;
}

std::pair<double, double> class_weights(const SystemConfig& config, const RhoFixedPoint& fp) {
    const double lam_fast = fp.lam_idle_fast * fp.pi0_fast + fp.lam_busy_fast * (1.0 - fp.pi0_fast);
    const double lam_slow = fp.lam_idle_slow * fp.pi0_slow + fp.lam_busy_slow * (1.0 - fp.pi0_slow);
    return {config.q_fast() * lam_fast / config.lambda(),
            config.q_slow() * lam_slow / config.lambda()};
}

double mean_response_general(const SystemConfig& config, const RhoFixedPoint& fp,
                             const ServiceDistribution& service) {
    const auto fast = service.with_mean(1.0 / config.mu_fast());
    const auto slow = service.with_mean(1.0 / config.mu_slow());
    auto pk = [](double lam_busy, const ServiceDistribution& y, const char* which) {
        const double load = lam_busy * y.mean();
        if (!(load < 1.0)) {
            throw DivergenceError(std::string("tagged ") + which + " server is overloaded");
        }
        return lam_busy * y.second_moment() / (2.0 * (1.0 - load)) + y.mean();
    };
    const auto [w_fast, w_slow] = class_weights(config, fp);
    double et = w_fast * pk(fp.lam_busy_fast, fast, "fast");
    if (w_slow > 0.0) et += w_slow * pk(fp.lam_busy_slow, slow, "slow");
    return et;
}

JiqEvaluation evaluate_jiq(const SystemConfig& config, const PolicyParams& policy,
                           const ServiceDistribution& service, const SolveOptions& options) {
    JiqEvaluation out{solve_jiq_system(config, policy, options), 0.0};
    out.mean_response = service.kind() == ServiceKind::Exponential
                            ? mean_response_exponential(config, out.fp)
                            : mean_response_general(config, out.fp, service);
    return out;
}

}  // namespace hetlb

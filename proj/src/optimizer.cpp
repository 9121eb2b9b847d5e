#include "hetlb/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hetlb/errors.hpp"
#include "hetlb/jiq_analysis.hpp"
#include "hetlb/jsq_analysis.hpp"
#include "hetlb/parallel.hpp"

namespace hetlb {

std::optional<double> objective(const SystemConfig& config, const PolicyParams& policy,
                                const ServiceDistribution& service) {
    if (policy.family == Family::JSQ && service.kind() != ServiceKind::Exponential) {
        throw DomainError("JSQ-(dF,dS) analysis supports exponential service only");
    }
    try {
        if (policy.family == Family::JIQ) return evaluate_jiq(config, policy, service).mean_response;
        return evaluate_jsq(config, policy).mean_response;
    } catch (const InfeasibleError&) {
        return std::nullopt;
    }
}

namespace {

void evaluate_points(const SystemConfig& config, PolicyParams base,
                     const OptimizeOptions& options, std::vector<Candidate>& points) {
    parallel_for(points.size(), options.threads, [&](std::size_t i) {
        PolicyParams p = base;
        p.p_fast = points[i].p_fast;
        p.p_slow = points[i].p_slow;
        points[i].et = objective(config, p, options.service);
    });
}

// Minimum E[T]; near-ties (relative tie_tolerance) go to smaller p_slow, then
// smaller p_fast.
const Candidate* select_best(const std::vector<Candidate>& all, double tol, int* ties) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : all) {
        if (c.et && *c.et < best) best = *c.et;
    }
    if (!std::isfinite(best)) return nullptr;
    const Candidate* pick = nullptr;
    int count = 0;
    for (const auto& c : all) {
        if (!c.et || *c.et > best + tol * std::abs(best)) continue;
        ++count;
        if (!pick || c.p_slow < pick->p_slow ||
            (c.p_slow == pick->p_slow && c.p_fast < pick->p_fast)) {
            pick = &c;
        }
    }
    if (ties) *ties = count;
    return pick;
}

OptResult finalize(const OptimizeOptions& options, std::vector<Candidate> all, OptMethod method) {
    int ties = 0;
    const Candidate* best = select_best(all, options.tie_tolerance, &ties);
    if (!best) {
        throw AllInfeasible("no candidate (p_fast, p_slow) admits a stable fixed point");
    }
    OptResult out;
    out.method = method;
    out.p_fast_opt = best->p_fast;
    out.p_slow_opt = best->p_slow;
    out.et_opt = *best->et;
    out.ties = ties;
    const auto feasible =
        std::count_if(all.begin(), all.end(), [](const Candidate& c) { return c.et.has_value(); });
    out.feasible_fraction = static_cast<double>(feasible) / static_cast<double>(all.size());
    out.candidates = std::move(all);
    return out;
}

}  // namespace

OptResult optimize(const SystemConfig& config, Family family, int d_fast, int d_slow,
                   const OptimizeOptions& options) {
    config.require_stable_load();
    PolicyParams base{d_fast, d_slow, 1.0, 1.0, family};
    base.validate(config);

    const int n = options.grid_divisions;
    double step = 1.0 / n;
    std::vector<Candidate> all;
    all.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) all.push_back({i * step, j * step, std::nullopt});
    }
    evaluate_points(config, base, options, all);

    for (int pass = 0; pass < options.refine_passes; ++pass) {
        const Candidate* incumbent = select_best(all, options.tie_tolerance, nullptr);
        if (!incumbent) break;
        const double cf = incumbent->p_fast;
        const double cs = incumbent->p_slow;
        step /= options.refine_factor;
        std::vector<Candidate> local;
        const int m = options.refine_factor;
        for (int j = -m; j <= m; ++j) {
            for (int i = -m; i <= m; ++i) {
                if (i == 0 && j == 0) continue;
                const double pf = cf + i * step;
                const double ps = cs + j * step;
                if (pf < 0.0 || pf > 1.0 || ps < 0.0 || ps > 1.0) continue;
                local.push_back({pf, ps, std::nullopt});
            }
        }
        evaluate_points(config, base, options, local);
        all.insert(all.end(), local.begin(), local.end());
    }
    return finalize(options, std::move(all), OptMethod::GridRefine);
}

std::vector<std::pair<double, double>> heuristic_candidates(const SystemConfig& config) {
    const double pf_balanced = config.mu_fast() * config.q_fast();
    const double ps_balanced = config.mu_slow() * config.q_slow();
    // p_slow = 0 never uses slow servers, so p_fast is immaterial; 1 stands in.
    std::vector<std::pair<double, double>> out{{1.0, 0.0}};
    for (double ps : {ps_balanced, 1.0}) {
        for (double pf : {0.0, pf_balanced, 1.0}) out.emplace_back(pf, ps);
    }
    return out;
}

OptResult heuristic(const SystemConfig& config, Family family, int d_fast, int d_slow,
                    const OptimizeOptions& options) {
    config.require_stable_load();
    PolicyParams base{d_fast, d_slow, 1.0, 1.0, family};
    base.validate(config);
    std::vector<Candidate> all;
    for (const auto& [pf, ps] : heuristic_candidates(config)) all.push_back({pf, ps, std::nullopt});
    evaluate_points(config, base, options, all);
    return finalize(options, std::move(all), OptMethod::Heuristic);
}

std::pair<double, double> stability_construction(const SystemConfig& config) {
    return {config.mu_fast() * config.q_fast(), 1.0};
}

bool heavy_traffic_stable(const SystemConfig& config, double p_fast, double p_slow, double tol) {
    return std::abs(p_fast - config.mu_fast() * config.q_fast()) <= tol &&
           p_slow >= config.mu_slow() * config.q_slow() - tol;
}

std::optional<double> random_routing_response(const SystemConfig& config, double p_fast) {
    const double lam = config.lambda();
    double et = 0.0;
    if (p_fast > 0.0) {
        const double arrival = lam * p_fast / config.q_fast();
        if (!(arrival < config.mu_fast())) return std::nullopt;
        et += p_fast / (config.mu_fast() - arrival);
    }
    if (p_fast < 1.0) {
        const double arrival = lam * (1.0 - p_fast) / config.q_slow();
        if (!(arrival < config.mu_slow())) return std::nullopt;
        et += (1.0 - p_fast) / (config.mu_slow() - arrival);
    }
    return et;
}

OptResult optimize_random_routing(const SystemConfig& config, const OptimizeOptions& options) {
    config.require_stable_load();
    const int n = options.grid_divisions;
    double step = 1.0 / n;
    std::vector<Candidate> all;
    for (int i = 0; i <= n; ++i) all.push_back({i * step, 0.0, random_routing_response(config, i * step)});
    for (int pass = 0; pass < options.refine_passes; ++pass) {
        const Candidate* incumbent = select_best(all, options.tie_tolerance, nullptr);
        if (!incumbent) break;
        const double c = incumbent->p_fast;
        step /= options.refine_factor;
        for (int i = -options.refine_factor; i <= options.refine_factor; ++i) {
            const double pf = c + i * step;
            if (i == 0 || pf < 0.0 || pf > 1.0) continue;
            all.push_back({pf, 0.0, random_routing_response(config, pf)});
        }
    }
    return finalize(options, std::move(all), OptMethod::GridRefine);
}

}  // namespace hetlb

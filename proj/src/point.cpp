#include "hetlb/point.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "hetlb/errors.hpp"
#include "hetlb/jiq_analysis.hpp"
#include "hetlb/jsq_analysis.hpp"
#include "hetlb/optimizer.hpp"
#include "hetlb/oracle.hpp"
#include "hetlb/simulator.hpp"

namespace hetlb {

std::string_view to_string(Source source) {
    switch (source) {
        case Source::Analytic: return "analytic";
        case Source::Oracle: return "oracle";
        case Source::Simulation: return "simulation";
    }
    return "?";
}

Source parse_source(std::string_view text) {
    if (text == "analytic") return Source::Analytic;
    if (text == "oracle") return Source::Oracle;
    if (text == "simulation") return Source::Simulation;
    throw ConfigError("unknown source '" + std::string(text) + "'");
}

SystemConfig PointSpec::config() const { return SystemConfig::create(lambda, q_fast, speed_ratio, k); }

namespace {

PointResult analytic(const PointSpec& spec) {
    const SystemConfig config = spec.config().with_servers(std::nullopt);
    config.require_stable_load();
    PointResult r;
    if (spec.policy.is_family()) {
        const PolicyParams params = spec.policy.params();
        params.validate(config);
        if (params.family == Family::JIQ) {
            const auto e = evaluate_jiq(config, params, spec.service);
            r.mean_response = e.mean_response;
            r.rho_fast = e.fp.rho_fast;
            r.rho_slow = e.fp.rho_slow;
        } else {
            if (spec.service.kind() != ServiceKind::Exponential) {
                throw DomainError("JSQ-(dF,dS) analysis supports exponential service only");
            }
            const auto e = evaluate_jsq(config, params);
            r.mean_response = e.mean_response;
            r.rho_fast = e.rho.rho_fast;
            r.rho_slow = e.rho.rho_slow;
        }
        return r;
    }
    if (spec.policy.kind == PolicyKind::Random) {
        if (spec.service.kind() != ServiceKind::Exponential) {
            throw DomainError("random-routing analysis supports exponential service only");
        }
        const auto et = random_routing_response(config, spec.policy.p_fast);
        if (!et) throw DivergenceError("random routing overloads a server class");
        r.mean_response = *et;
        r.rho_fast = config.lambda() * spec.policy.p_fast / (config.q_fast() * config.mu_fast());
        r.rho_slow = config.lambda() * (1.0 - spec.policy.p_fast) / (config.q_slow() * config.mu_slow());
        return r;
    }
    throw ConfigError("no analytic model for policy " + spec.policy.name() + "; simulate it instead");
}

PointResult oracle(const PointSpec& spec) {
    const SystemConfig config = spec.config();
    if (!config.is_finite()) throw ConfigError("the exact chain needs a finite k");
    if (spec.service.kind() != ServiceKind::Exponential) {
        throw DomainError("the exact chain supports exponential service only");
    }
    int cap = spec.cap > 0 ? spec.cap : 16;
    while (true) {
        try {
            const auto m = exact_metrics(config, spec.policy, cap);
            PointResult r;
            r.mean_response = m.mean_response;
            r.rho_fast = m.busy_fast;
            r.rho_slow = m.busy_slow;
            r.cap = cap;
            return r;
        } catch (const TruncationTooSmall&) {
            if (spec.cap > 0) throw;
            cap *= 2;
        }
    }
}

PointResult simulation(const PointSpec& spec) {
    const SystemConfig config = spec.config();
    const auto rep = run(config, spec.policy, spec.service, spec.arrivals, spec.warmup, spec.seed);
    PointResult r;
    r.mean_response = rep.mean_T;
    r.ci_halfwidth_99 = rep.ci_halfwidth_99;
    r.rho_fast = rep.busy_fast;
    r.rho_slow = rep.busy_slow;
    r.unstable_flag = rep.unstable_flag;
    return r;
}

}  // namespace

PointResult evaluate_point(const PointSpec& spec) {
    switch (spec.source) {
        case Source::Analytic: return analytic(spec);
        case Source::Oracle: return oracle(spec);
        case Source::Simulation: return simulation(spec);
    }
    throw ConfigError("bad source");
}

PointResult evaluate_point_noexcept_infeasible(const PointSpec& spec) {
    try {
        return evaluate_point(spec);
    } catch (const InfeasibleError&) {
        PointResult r;
        r.feasible = false;
        return r;
    }
}

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::vector<std::string> point_columns() {
    return {"source", "policy", "d_fast", "d_slow", "d", "p_fast", "p_slow", "lambda", "q_fast",
            "speed_ratio", "k", "service", "seed", "arrivals", "warmup", "cap", "status",
            "mean_response", "ci_halfwidth_99", "rho_fast", "rho_slow", "unstable_flag"};
}

std::vector<std::string> point_cells(const PointSpec& s, const PointResult& r) {
    const bool sim = s.source == Source::Simulation;
    const bool orc = s.source == Source::Oracle;
    std::vector<std::string> c{
        std::string(to_string(s.source)),
        std::string(to_string(s.policy.kind)),
        std::to_string(s.policy.d_fast),
        std::to_string(s.policy.d_slow),
        std::to_string(s.policy.d),
        format_double(s.policy.p_fast),
        format_double(s.policy.p_slow),
        format_double(s.lambda),
        format_double(s.q_fast),
        format_double(s.speed_ratio),
        s.k ? std::to_string(*s.k) : "inf",
        s.service.to_string(),
        sim ? std::to_string(s.seed) : "",
        sim ? std::to_string(s.arrivals) : "",
        sim ? std::to_string(s.warmup) : "",
        orc ? std::to_string(r.feasible ? r.cap : s.cap) : "",
        r.feasible ? "ok" : "infeasible",
    };
    if (r.feasible) {
        c.push_back(format_double(r.mean_response));
        c.push_back(sim ? format_double(r.ci_halfwidth_99) : "");
        c.push_back(format_double(r.rho_fast));
        c.push_back(format_double(r.rho_slow));
        c.push_back(sim ? (r.unstable_flag ? "1" : "0") : "");
    } else {
        c.insert(c.end(), 5, "");
    }
    return c;
}

namespace {

double to_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw ConfigError("not a number: '" + s + "'");
    return v;
}

template <typename Int>
Int to_int(const std::string& s) {
    Int v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("not an integer: '" + s + "'");
    return v;
}

}  // namespace

PointSpec parse_point(const std::vector<std::string>& c) {
    if (c.size() < 16) throw ConfigError("point row has too few columns");
    PointSpec s;
    s.source = parse_source(c[0]);
    s.policy.kind = parse_policy_kind(c[1]);
    s.policy.d_fast = to_int<int>(c[2]);
    s.policy.d_slow = to_int<int>(c[3]);
    s.policy.d = to_int<int>(c[4]);
    s.policy.p_fast = to_double(c[5]);
    s.policy.p_slow = to_double(c[6]);
    s.lambda = to_double(c[7]);
    s.q_fast = to_double(c[8]);
    s.speed_ratio = to_double(c[9]);
    if (c[10] != "inf") s.k = to_int<int>(c[10]);
    s.service = ServiceDistribution::parse(c[11]);
    if (!c[12].empty()) s.seed = to_int<std::uint64_t>(c[12]);
    if (!c[13].empty()) s.arrivals = to_int<std::int64_t>(c[13]);
    if (!c[14].empty()) s.warmup = to_int<std::int64_t>(c[14]);
    if (!c[15].empty()) s.cap = to_int<int>(c[15]);
    return s;
}

}  // namespace hetlb

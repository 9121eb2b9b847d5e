#include "hetlb/dispatch.hpp"

#include <algorithm>
#include <limits>

#include "hetlb/errors.hpp"

namespace hetlb {

DispatchPolicy DispatchPolicy::from_params(const PolicyParams& params) {
    DispatchPolicy p;
    p.kind = params.family == Family::JIQ ? PolicyKind::JiqDfDs : PolicyKind::JsqDfDs;
    p.d_fast = params.d_fast;
    p.d_slow = params.d_slow;
    p.d = params.d_fast + params.d_slow;
    p.p_fast = params.p_fast;
    p.p_slow = params.p_slow;
    return p;
}

namespace {

DispatchPolicy simple(PolicyKind kind, int d) {
    DispatchPolicy p;
    p.kind = kind;
    p.d = d;
    return p;
}

}  // namespace

DispatchPolicy DispatchPolicy::jsq_d(int d) { return simple(PolicyKind::JsqD, d); }
DispatchPolicy DispatchPolicy::sed_d(int d) { return simple(PolicyKind::SedD, d); }
DispatchPolicy DispatchPolicy::wjsq_d(int d) { return simple(PolicyKind::WjsqD, d); }
DispatchPolicy DispatchPolicy::jiq_global() { return simple(PolicyKind::JiqGlobal, 0); }

DispatchPolicy DispatchPolicy::random(double p_fast) {
    DispatchPolicy p = simple(PolicyKind::Random, 1);
    p.p_fast = p_fast;
    return p;
}

PolicyParams DispatchPolicy::params() const {
    return {d_fast, d_slow, p_fast, p_slow,
            kind == PolicyKind::JsqDfDs ? Family::JSQ : Family::JIQ};
}

std::string DispatchPolicy::name() const {
    switch (kind) {
        case PolicyKind::JiqDfDs:
            return "JIQ-(" + std::to_string(d_fast) + "," + std::to_string(d_slow) + ")";
        case PolicyKind::JsqDfDs:
            return "JSQ-(" + std::to_string(d_fast) + "," + std::to_string(d_slow) + ")";
        case PolicyKind::JsqD: return "JSQ-" + std::to_string(d);
        case PolicyKind::SedD: return "SED-" + std::to_string(d);
        case PolicyKind::WjsqD: return "WJSQ-" + std::to_string(d);
        case PolicyKind::JiqGlobal: return "JIQ";
        case PolicyKind::Random: return "Random";
    }
    return "?";
}

void DispatchPolicy::validate(const SystemConfig& config) const {
    if (!config.is_finite()) throw ConfigError("dispatching needs a finite number of servers");
    if (is_family()) {
        params().validate(config);
        return;
    }
    if (kind == PolicyKind::Random) {
        if (!(p_fast >= 0.0 && p_fast <= 1.0)) throw ConfigError("p_fast must lie in [0, 1]");
        return;
    }
    if (kind == PolicyKind::JiqGlobal) return;
    if (d < 1 || d > config.k()) {
        throw ConfigError("d must satisfy 1 <= d <= k, got d=" + std::to_string(d));
    }
}

PolicyKind parse_policy_kind(std::string_view text) {
    if (text == "jiqd") return PolicyKind::JiqDfDs;
    if (text == "jsqd") return PolicyKind::JsqDfDs;
    if (text == "jsq-d") return PolicyKind::JsqD;
    if (text == "sed-d") return PolicyKind::SedD;
    if (text == "wjsq-d") return PolicyKind::WjsqD;
    if (text == "jiq-global") return PolicyKind::JiqGlobal;
    if (text == "random") return PolicyKind::Random;
    throw ConfigError("unknown policy '" + std::string(text) +
                      "' (expected jiqd, jsqd, jsq-d, sed-d, wjsq-d, jiq-global, random)");
}

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::JiqDfDs: return "jiqd";
        case PolicyKind::JsqDfDs: return "jsqd";
        case PolicyKind::JsqD: return "jsq-d";
        case PolicyKind::SedD: return "sed-d";
        case PolicyKind::WjsqD: return "wjsq-d";
        case PolicyKind::JiqGlobal: return "jiq-global";
        case PolicyKind::Random: return "random";
    }
    return "?";
}

namespace {

// Adds `mass` spread uniformly over the entries selected by `pick`.
template <typename Pick>
void spread(std::span<const QueriedServer> q, std::span<double> out, double mass, Pick pick) {
    if (mass == 0.0) return;
    int count = 0;
    for (const auto& s : q) count += pick(s) ? 1 : 0;
    if (count == 0) return;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (pick(q[i])) out[i] += mass / count;
    }
}

// Adds `mass` spread over the minimizers of key among entries selected by pick.
template <typename Pick, typename Key>
void spread_min(std::span<const QueriedServer> q, std::span<double> out, double mass, Pick pick,
                Key key) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : q) {
        if (pick(s)) best = std::min(best, key(s));
    }
    spread(q, out, mass, [&](const QueriedServer& s) { return pick(s) && key(s) == best; });
}

}  // namespace

void destination_probabilities(const DispatchPolicy& policy, const SystemConfig& config,
                               std::span<const QueriedServer> q, std::span<double> out) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(q.size()), 0.0);
    auto fast = [](const QueriedServer& s) { return s.server_class == ServerClass::Fast; };
    auto slow = [](const QueriedServer& s) { return s.server_class == ServerClass::Slow; };
    auto idle = [](const QueriedServer& s) { return s.jobs == 0; };
    auto jobs = [](const QueriedServer& s) { return static_cast<double>(s.jobs); };
    auto any = [](const QueriedServer&) { return true; };

    switch (policy.kind) {
        case PolicyKind::JiqDfDs:
        case PolicyKind::JsqDfDs: {
            const bool shortest = policy.kind == PolicyKind::JsqDfDs;
            auto busy_choice = [&](double mass, auto cls) {
                if (shortest) {
                    spread_min(q, out, mass, cls, jobs);
                } else {
                    spread(q, out, mass, cls);
                }
            };
            const bool idle_fast = std::any_of(q.begin(), q.end(),
                                               [&](const QueriedServer& s) { return fast(s) && idle(s); });
            if (idle_fast) {
                spread(q, out, 1.0, [&](const QueriedServer& s) { return fast(s) && idle(s); });
                return;
            }
            const bool idle_slow = std::any_of(q.begin(), q.end(),
                                               [&](const QueriedServer& s) { return slow(s) && idle(s); });
            if (idle_slow) {
                spread(q, out, policy.p_slow, [&](const QueriedServer& s) { return slow(s) && idle(s); });
                busy_choice(1.0 - policy.p_slow, fast);
                return;
            }
            busy_choice(policy.p_fast, fast);
            busy_choice(1.0 - policy.p_fast, slow);
            return;
        }
        case PolicyKind::JsqD:
        case PolicyKind::WjsqD:
            spread_min(q, out, 1.0, any, jobs);
            return;
        case PolicyKind::SedD: {
            // (n + 1) / mu scaled by mu_fast: exact for integer r.
            const double r = config.speed_ratio();
            spread_min(q, out, 1.0, any, [&](const QueriedServer& s) {
                return (s.jobs + 1.0) * (fast(s) ? 1.0 : r);
            });
            return;
        }
        case PolicyKind::JiqGlobal:
            if (std::any_of(q.begin(), q.end(), idle)) {
                spread(q, out, 1.0, idle);
            } else {
                spread(q, out, 1.0, any);
            }
            return;
        case PolicyKind::Random:
            spread(q, out, policy.p_fast, fast);
            spread(q, out, 1.0 - policy.p_fast, slow);
            return;
    }
}

std::vector<double> destination_probabilities(const DispatchPolicy& policy,
                                              const SystemConfig& config,
                                              std::span<const QueriedServer> queried) {
    std::vector<double> out(queried.size());
    destination_probabilities(policy, config, queried, out);
    return out;
}

int dispatch(const DispatchPolicy& policy, const SystemConfig& config,
             std::span<const QueriedServer> queried, Stream& rng, std::span<double> scratch) {
    destination_probabilities(policy, config, queried, scratch);
    double u = rng.uniform();
    int last = -1;
    for (std::size_t i = 0; i < queried.size(); ++i) {
        if (scratch[i] <= 0.0) continue;
        last = queried[i].index;
        u -= scratch[i];
        if (u < 0.0) return last;
    }
    return last;
}

int dispatch(const DispatchPolicy& policy, const SystemConfig& config,
             std::span<const QueriedServer> queried, Stream& rng) {
    std::vector<double> scratch(queried.size());
    return dispatch(policy, config, queried, rng, scratch);
}

}  // namespace hetlb

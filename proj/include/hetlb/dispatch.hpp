#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetlb/jsq_analysis.hpp"
#include "hetlb/model.hpp"
#include "hetlb/rng.hpp"

namespace hetlb {

enum class PolicyKind { JiqDfDs, JsqDfDs, JsqD, SedD, WjsqD, JiqGlobal, Random };

// A dispatching rule for a finite system.
//   JiqDfDs / JsqDfDs: query d_fast fast and d_slow slow servers uniformly
//     without replacement, then idle fast > (coin p_slow) idle slow > (coin
//     p_fast) busy fast or busy slow; random (JIQ) or shortest (JSQ) busy server.
//   JsqD, SedD: query d servers uniformly; shortest queue, or smallest
//     (n + 1) / mu.
//   WjsqD: query d servers with probability proportional to speed, then
//     shortest queue.
//   JiqGlobal: any idle server uniformly, else any server uniformly.
//   Random: a uniform fast server with probability p_fast, else a uniform
//     slow server.
// Ties are always broken uniformly at random.
struct DispatchPolicy {
    PolicyKind kind = PolicyKind::JiqDfDs;
    int d_fast = 2;
    int d_slow = 2;
    int d = 2;
    double p_fast = 1.0;
    double p_slow = 1.0;

    static DispatchPolicy from_params(const PolicyParams& params);
    static DispatchPolicy jsq_d(int d);
    static DispatchPolicy sed_d(int d);
    static DispatchPolicy wjsq_d(int d);
    static DispatchPolicy jiq_global();
    static DispatchPolicy random(double p_fast);

    bool is_family() const { return kind == PolicyKind::JiqDfDs || kind == PolicyKind::JsqDfDs; }
    // Only meaningful when is_family().
    PolicyParams params() const;

    std::string name() const;
    // Throws ConfigError when the query sizes do not fit the finite config.
    void validate(const SystemConfig& config) const;
};

// CLI spelling: jiqd, jsqd, jsq-d, sed-d, wjsq-d, jiq-global, random.
PolicyKind parse_policy_kind(std::string_view text);
std::string_view to_string(PolicyKind kind);

struct QueriedServer {
    int index;   // server id, returned by dispatch
    int jobs;    // jobs present, including the one in service
    ServerClass server_class;
};

// Probability of sending the job to each entry of `queried`. For JiqGlobal and
// Random, `queried` must list every server.
void destination_probabilities(const DispatchPolicy& policy, const SystemConfig& config,
                               std::span<const QueriedServer> queried, std::span<double> out);
std::vector<double> destination_probabilities(const DispatchPolicy& policy,
                                              const SystemConfig& config,
                                              std::span<const QueriedServer> queried);

// Samples a destination and returns its server index. `scratch` is reused
// storage of at least queried.size() entries.
int dispatch(const DispatchPolicy& policy, const SystemConfig& config,
             std::span<const QueriedServer> queried, Stream& rng, std::span<double> scratch);
int dispatch(const DispatchPolicy& policy, const SystemConfig& config,
             std::span<const QueriedServer> queried, Stream& rng);

}  // namespace hetlb

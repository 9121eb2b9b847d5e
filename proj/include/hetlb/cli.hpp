#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetlb/dispatch.hpp"
#include "hetlb/model.hpp"
#include "hetlb/point.hpp"

namespace hetlb::cli {

// Resolved command-line / config-file settings. `given` records which keys
// were set explicitly so recipes can treat them as overrides.
struct RunConfig {
    double lambda = 0.5;
    double q_fast = 0.5;
    double speed_ratio = 2.0;
    std::optional<int> k;
    int d_fast = 2;
    int d_slow = 2;
    std::optional<int> d;  // single --d value, for jsq-d / sed-d / wjsq-d
    double p_fast = 1.0;
    double p_slow = 1.0;
    Family family = Family::JIQ;
    std::optional<PolicyKind> policy;
    ServiceDistribution service = ServiceDistribution::exponential();
    std::uint64_t seed = 1;
    std::int64_t arrivals = 1'000'000;
    std::optional<std::int64_t> warmup;
    std::vector<double> lambdas;
    int cap = 0;
    unsigned threads = 0;
    std::string out;
    std::string format = "text";

    std::set<std::string> given;
    bool has(const std::string& key) const { return given.count(key) > 0; }

    std::int64_t warmup_or_default() const { return warmup ? *warmup : arrivals / 10; }
    SystemConfig system() const;
    PolicyParams params() const;
    DispatchPolicy dispatch_policy() const;
};

// Applies a JSON config object. Keys: lambda, q_fast, speed_ratio, k (int or
// "inf"), d_fast, d_slow, p_fast, p_slow, family, service_kind, service_cv2;
// also policy, d, seed, arrivals, warmup, lambdas, cap.
void apply_json(RunConfig& config, const nlohmann::json& j);
nlohmann::ordered_json to_json(const RunConfig& config);

// Parses "dF,dS" or "d".
void apply_d(RunConfig& config, const std::string& text);
std::vector<double> parse_list(const std::string& text);

// Entry point; returns the process exit status (0 ok, 1 usage, 2 infeasible).
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

// Minimal CSV support for experiment outputs.
std::vector<std::vector<std::string>> read_csv(const std::string& path);
std::string join_csv(const std::vector<std::string>& cells);

}  // namespace hetlb::cli

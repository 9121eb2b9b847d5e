#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetlb/dispatch.hpp"
#include "hetlb/model.hpp"

namespace hetlb {

enum class Source { Analytic, Oracle, Simulation };

std::string_view to_string(Source source);
Source parse_source(std::string_view text);

// Everything needed to reproduce one result row.
struct PointSpec {
    Source source = Source::Analytic;
    DispatchPolicy policy;
    double lambda = 0.5;
    double q_fast = 0.5;
    double speed_ratio = 2.0;
    std::optional<int> k;
    ServiceDistribution service = ServiceDistribution::exponential();
    std::uint64_t seed = 1;
    std::int64_t arrivals = 0;
    std::int64_t warmup = 0;
    int cap = 0;  // oracle truncation; 0 searches upward from 16

    SystemConfig config() const;
};

struct PointResult {
    bool feasible = true;
    double mean_response = 0.0;
    double ci_halfwidth_99 = 0.0;  // simulation only
    double rho_fast = 0.0;         // analytic busy fractions, or measured
    double rho_slow = 0.0;
    bool unstable_flag = false;
    int cap = 0;                   // oracle cap actually used
};

// Analytic: JIQ/JSQ families via the mean-field analysis, Random via
// independent M/M/1 queues. Oracle: exact chain. Simulation: one seeded run.
// Throws InfeasibleError subclasses for unstable analytic inputs.
PointResult evaluate_point(const PointSpec& spec);

// Like evaluate_point but records infeasibility in the result instead.
PointResult evaluate_point_noexcept_infeasible(const PointSpec& spec);

// Round-trip-exact decimal form.
std::string format_double(double value);

// CSV header and row for points; extra leading columns are the caller's.
std::vector<std::string> point_columns();
std::vector<std::string> point_cells(const PointSpec& spec, const PointResult& result);
// Inverse of point_cells for the input columns (cells aligned with point_columns()).
PointSpec parse_point(const std::vector<std::string>& cells);

}  // namespace hetlb

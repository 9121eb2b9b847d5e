#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hetlb/dispatch.hpp"
#include "hetlb/model.hpp"

namespace hetlb {

// Time-averaged fraction of servers of one class with exactly / at least i jobs.
struct QueueHistogram {
    std::vector<double> exactly;
    std::vector<double> at_least;

    bool operator==(const QueueHistogram&) const = default;
};

struct SimReport {
    std::string policy;
    double mean_T = 0.0;
    double ci_halfwidth_99 = 0.0;
    double busy_fast = 0.0;
    double busy_slow = 0.0;
    QueueHistogram hist_fast;
    QueueHistogram hist_slow;
    std::int64_t arrivals_processed = 0;  // post-warmup arrivals measured
    std::int64_t warmup_discarded = 0;
    std::uint64_t seed = 0;
    bool unstable_flag = false;

    std::vector<double> batch_means;
    // Time-averaged number in system over each post-warmup third.
    std::vector<double> third_means;
    double measured_time = 0.0;      // simulated time after warmup
    std::int64_t jobs_fast = 0;      // post-warmup arrivals sent to each class
    std::int64_t jobs_slow = 0;
    double mean_size_fast = 0.0;     // mean sampled service time per class
    double mean_size_slow = 0.0;

    bool operator==(const SimReport&) const = default;
};

struct SimOptions {
    int batches = 30;
    // Instability: the third-over-third growth factor that counts as growth.
    double growth_factor = 1.2;
};

// Seeded event-driven FCFS simulation with Poisson arrivals at rate lambda * k.
// Statistics cover arrivals [warmup, horizon).
SimReport run(const SystemConfig& config, const DispatchPolicy& policy,
              const ServiceDistribution& service, std::int64_t horizon_arrivals,
              std::int64_t warmup_arrivals, std::uint64_t seed, const SimOptions& options = {});

std::string to_json(const SimReport& report);
// Columns: class,i,frac_at_least_i,frac_exactly_i.
void write_histogram_csv(std::ostream& out, const SimReport& report);

}  // namespace hetlb

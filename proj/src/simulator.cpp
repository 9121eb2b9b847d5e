#include "hetlb/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "hetlb/errors.hpp"

namespace hetlb {

namespace {

enum Streams : std::uint64_t { kArrivalStream = 0, kDispatchStream = 1, kServerStreamBase = 16 };

struct Sampler {
    ServiceKind kind;
    double mean;
    int stages = 1;
    double p1 = 1.0, rate1 = 1.0, rate2 = 1.0;

    Sampler(const ServiceDistribution& shape, double class_mean) : kind(shape.kind()), mean(class_mean) {
        const auto scaled = shape.with_mean(class_mean);
        if (kind == ServiceKind::Erlang) stages = scaled.erlang_stages();
        if (kind == ServiceKind::Hyperexponential2) {
            const auto b = scaled.h2_branches();
            p1 = b.p1;
            rate1 = b.rate1;
            rate2 = b.rate2;
        }
    }

    double draw(Stream& rng) const {
        switch (kind) {
            case ServiceKind::Exponential: return rng.exponential(1.0 / mean);
            case ServiceKind::Deterministic: return mean;
            case ServiceKind::Erlang: {
                double sum = 0.0;
                for (int s = 0; s < stages; ++s) sum += rng.exponential(stages / mean);
                return sum;
            }
            case ServiceKind::Hyperexponential2: {
                const bool first = rng.uniform() < p1;
                return rng.exponential(first ? rate1 : rate2);
            }
        }
        return mean;
    }
};

struct Departure {
    double time;
    int server;
    bool operator>(const Departure& o) const {
        return time != o.time ? time > o.time : server > o.server;
    }
};

// Time integral of the number of servers of one class holding exactly n jobs.
class ClassOccupancy {
public:
    explicit ClassOccupancy(int servers) : count_{servers}, area_{0.0}, last_{0.0} {}

    void move(int from, int to, double t) {
        touch(from, t);
        touch(to, t);
        --count_[static_cast<std::size_t>(from)];
        ++count_[static_cast<std::size_t>(to)];
    }

    void restart(double t) {
        std::fill(area_.begin(), area_.end(), 0.0);
        std::fill(last_.begin(), last_.end(), t);
    }

    QueueHistogram finish(double t, double duration, int servers) {
        QueueHistogram h;
        for (std::size_t n = 0; n < count_.size(); ++n) touch(static_cast<int>(n), t);
        std::size_t top = area_.size();
        while (top > 1 && area_[top - 1] == 0.0) --top;
        h.exactly.resize(top);
        for (std::size_t n = 0; n < top; ++n) h.exactly[n] = area_[n] / (duration * servers);
        h.at_least.resize(top);
        double acc = 0.0;
        for (std::size_t n = top; n-- > 0;) {
            acc += h.exactly[n];
            h.at_least[n] = acc;
        }
        return h;
    }

private:
    void touch(int n, double t) {
        const auto u = static_cast<std::size_t>(n);
        if (u >= count_.size()) {
            count_.resize(u + 1, 0);
            area_.resize(u + 1, 0.0);
            last_.resize(u + 1, t);
        }
        area_[u] += count_[u] * (t - last_[u]);
        last_[u] = t;
    }

    std::vector<int> count_;
    std::vector<double> area_;
    std::vector<double> last_;
};

}  // namespace

SimReport run(const SystemConfig& config, const DispatchPolicy& policy,
              const ServiceDistribution& service, std::int64_t horizon_arrivals,
              std::int64_t warmup_arrivals, std::uint64_t seed, const SimOptions& options) {
    policy.validate(config);
    if (warmup_arrivals < 0 || horizon_arrivals <= warmup_arrivals) {
        throw ConfigError("need 0 <= warmup < horizon arrivals");
    }
    const std::int64_t measured = horizon_arrivals - warmup_arrivals;
    if (options.batches < 2 || measured < options.batches) {
        throw ConfigError("need at least " + std::to_string(std::max(2, options.batches)) +
                          " measured arrivals and two batches");
    }

    const int k = config.k();
    const int kf = config.k_fast();
    const int ks = config.k_slow();
    const double arrival_rate = config.lambda() * k;
    const Sampler fast_sizes(service, 1.0 / config.mu_fast());
    const Sampler slow_sizes(service, 1.0 / config.mu_slow());

    Stream arrivals(derive_seed(seed, kArrivalStream));
    Stream coins(derive_seed(seed, kDispatchStream));
    std::vector<Stream> server_rng;
    server_rng.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) server_rng.emplace_back(derive_seed(seed, kServerStreamBase + static_cast<std::uint64_t>(i)));

    std::vector<int> jobs(static_cast<std::size_t>(k), 0);
    std::vector<double> free_at(static_cast<std::size_t>(k), 0.0);
    auto cls = [&](int i) { return i < kf ? ServerClass::Fast : ServerClass::Slow; };

    // Permutation arrays for partial Fisher-Yates query sampling.
    std::vector<int> all_ids(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) all_ids[static_cast<std::size_t>(i)] = i;
    std::vector<int> fast_ids(all_ids.begin(), all_ids.begin() + kf);
    std::vector<int> slow_ids(all_ids.begin() + kf, all_ids.end());

    // Idle servers, for JiqGlobal.
    std::vector<int> idle(all_ids);
    std::vector<int> idle_pos(all_ids);

    std::vector<QueriedServer> snapshot;
    std::vector<double> scratch(static_cast<std::size_t>(k) + 1);

    auto draw_from = [&](std::vector<int>& ids, int taken) {
        const auto j = static_cast<std::size_t>(taken) +
                       static_cast<std::size_t>(coins.below(ids.size() - static_cast<std::size_t>(taken)));
        std::swap(ids[static_cast<std::size_t>(taken)], ids[j]);
        return ids[static_cast<std::size_t>(taken)];
    };
    auto add = [&](int i) { snapshot.push_back({i, jobs[static_cast<std::size_t>(i)], cls(i)}); };

    auto choose_server = [&]() -> int {
        snapshot.clear();
        switch (policy.kind) {
            case PolicyKind::JiqDfDs:
            case PolicyKind::JsqDfDs:
                for (int t = 0; t < policy.d_fast; ++t) add(draw_from(fast_ids, t));
                for (int t = 0; t < policy.d_slow; ++t) add(draw_from(slow_ids, t));
                break;
            case PolicyKind::JsqD:
            case PolicyKind::SedD:
                for (int t = 0; t < policy.d; ++t) add(draw_from(all_ids, t));
                break;
            case PolicyKind::WjsqD: {
                int tf = 0, ts = 0;
                for (int t = 0; t < policy.d; ++t) {
                    const double wf = (kf - tf) * config.mu_fast();
                    const double ws = (ks - ts) * config.mu_slow();
                    if (coins.uniform() * (wf + ws) < wf) {
                        add(draw_from(fast_ids, tf++));
                    } else {
                        add(draw_from(slow_ids, ts++));
                    }
                }
                break;
            }
            case PolicyKind::JiqGlobal:
                if (!idle.empty()) return idle[static_cast<std::size_t>(coins.below(idle.size()))];
                return static_cast<int>(coins.below(static_cast<std::uint64_t>(k)));
            case PolicyKind::Random:
                if (coins.uniform() < policy.p_fast) {
                    return fast_ids[static_cast<std::size_t>(coins.below(static_cast<std::uint64_t>(kf)))];
                }
                return slow_ids[static_cast<std::size_t>(coins.below(static_cast<std::uint64_t>(ks)))];
        }
        return dispatch(policy, config, snapshot, coins, scratch);
    };

    auto remove_idle = [&](int i) {
        const int p = idle_pos[static_cast<std::size_t>(i)];
        const int last = idle.back();
        idle[static_cast<std::size_t>(p)] = last;
        idle_pos[static_cast<std::size_t>(last)] = p;
        idle.pop_back();
        idle_pos[static_cast<std::size_t>(i)] = -1;
    };
    auto add_idle = [&](int i) {
        idle_pos[static_cast<std::size_t>(i)] = static_cast<int>(idle.size());
        idle.push_back(i);
    };

    ClassOccupancy occ_fast(kf), occ_slow(ks);
    auto occupancy = [&](int i) -> ClassOccupancy& { return i < kf ? occ_fast : occ_slow; };

    std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures;

    SimReport report;
    report.policy = policy.name();
    report.seed = seed;
    report.warmup_discarded = warmup_arrivals;
    report.arrivals_processed = measured;

    const int batches = options.batches;
    std::vector<double> batch_sum(static_cast<std::size_t>(batches), 0.0);
    std::vector<std::int64_t> batch_n(static_cast<std::size_t>(batches), 0);
    double response_sum = 0.0;
    double size_sum_fast = 0.0, size_sum_slow = 0.0;

    const std::int64_t third_at[3] = {warmup_arrivals + measured / 3, warmup_arrivals + 2 * measured / 3,
                                      horizon_arrivals};
    int third = 0;
    double third_area_start = 0.0, third_time_start = 0.0;

    bool measuring = false;
    double t = 0.0;
    double t_start = 0.0;
    long long in_system = 0;
    double area_n = 0.0;
    auto advance = [&](double to) {
        if (measuring) area_n += static_cast<double>(in_system) * (to - t);
        t = to;
    };

    double next_arrival = arrivals.exponential(arrival_rate);
    std::int64_t a = 0;
    while (true) {
        if (!departures.empty() && departures.top().time <= next_arrival) {
            const Departure d = departures.top();
            departures.pop();
            advance(d.time);
            const auto ui = static_cast<std::size_t>(d.server);
            occupancy(d.server).move(jobs[ui], jobs[ui] - 1, t);
            --jobs[ui];
            --in_system;
            if (jobs[ui] == 0) add_idle(d.server);
            continue;
        }
        advance(next_arrival);
        if (a == warmup_arrivals) {
            measuring = true;
            t_start = t;
            third_time_start = t;
            occ_fast.restart(t);
            occ_slow.restart(t);
        }
        if (a == third_at[third]) {
            report.third_means.push_back((area_n - third_area_start) / (t - third_time_start));
            third_area_start = area_n;
            third_time_start = t;
            ++third;
        }
        if (a == horizon_arrivals) break;

        const int s = choose_server();
        const auto us = static_cast<std::size_t>(s);
        const double size = (s < kf ? fast_sizes : slow_sizes).draw(server_rng[us]);
        const double done = std::max(t, free_at[us]) + size;
        free_at[us] = done;
        if (jobs[us] == 0) remove_idle(s);
        occupancy(s).move(jobs[us], jobs[us] + 1, t);
        ++jobs[us];
        ++in_system;
        departures.push({done, s});

        if (measuring) {
            const std::int64_t m = a - warmup_arrivals;
            const auto b = static_cast<std::size_t>(m * batches / measured);
            const double response = done - t;
            batch_sum[b] += response;
            ++batch_n[b];
            response_sum += response;
            if (s < kf) {
                ++report.jobs_fast;
                size_sum_fast += size;
            } else {
                ++report.jobs_slow;
                size_sum_slow += size;
            }
        }
        ++a;
        next_arrival = t + arrivals.exponential(arrival_rate);
    }

    report.measured_time = t - t_start;
    report.hist_fast = occ_fast.finish(t, report.measured_time, kf);
    report.hist_slow = occ_slow.finish(t, report.measured_time, ks);
    report.busy_fast = 1.0 - report.hist_fast.exactly[0];
    report.busy_slow = 1.0 - report.hist_slow.exactly[0];
    report.mean_T = response_sum / static_cast<double>(measured);
    report.mean_size_fast = report.jobs_fast ? size_sum_fast / report.jobs_fast : 0.0;
    report.mean_size_slow = report.jobs_slow ? size_sum_slow / report.jobs_slow : 0.0;

    double mean_b = 0.0;
    for (int b = 0; b < batches; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        report.batch_means.push_back(batch_sum[ub] / static_cast<double>(batch_n[ub]));
        mean_b += report.batch_means.back();
    }
    mean_b /= batches;
    double var = 0.0;
    for (double v : report.batch_means) var += (v - mean_b) * (v - mean_b);
    var /= batches - 1;
    const boost::math::students_t dist(batches - 1);
    const double tq = boost::math::quantile(boost::math::complement(dist, 0.005));
    report.ci_halfwidth_99 = tq * std::sqrt(var / batches);

    const auto& th = report.third_means;
    report.unstable_flag = th.size() == 3 && th[1] > options.growth_factor * th[0] &&
                           th[2] > options.growth_factor * th[1];
    return report;
}

std::string to_json(const SimReport& r) {
    nlohmann::ordered_json j;
    j["policy"] = r.policy;
    j["mean_T"] = r.mean_T;
    j["ci_halfwidth_99"] = r.ci_halfwidth_99;
    j["busy_fast"] = r.busy_fast;
    j["busy_slow"] = r.busy_slow;
    j["arrivals_processed"] = r.arrivals_processed;
    j["warmup_discarded"] = r.warmup_discarded;
    j["seed"] = r.seed;
    j["unstable_flag"] = r.unstable_flag;
    j["third_means"] = r.third_means;
    j["batch_means"] = r.batch_means;
    j["measured_time"] = r.measured_time;
    j["jobs_fast"] = r.jobs_fast;
    j["jobs_slow"] = r.jobs_slow;
    j["hist_fast"] = {{"exactly", r.hist_fast.exactly}, {"at_least", r.hist_fast.at_least}};
    j["hist_slow"] = {{"exactly", r.hist_slow.exactly}, {"at_least", r.hist_slow.at_least}};
    return j.dump(2);
}

void write_histogram_csv(std::ostream& out, const SimReport& r) {
    out << "class,i,frac_at_least_i,frac_exactly_i\n";
    char buf[96];
    auto rows = [&](const char* name, const QueueHistogram& h) {
        for (std::size_t i = 0; i < h.exactly.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g\n", name, i, h.at_least[i], h.exactly[i]);
            out << buf;
        }
    };
    rows("fast", r.hist_fast);
    rows("slow", r.hist_slow);
}

}  // namespace hetlb

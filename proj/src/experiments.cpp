#include "hetlb/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hetlb/errors.hpp"
#include "hetlb/jiq_analysis.hpp"
#include "hetlb/jsq_analysis.hpp"
#include "hetlb/optimizer.hpp"
#include "hetlb/parallel.hpp"
#include "hetlb/simulator.hpp"
#include "hetlb/svg.hpp"

namespace hetlb::cli {

void OutputSet::add(const std::string& name, std::string content) { files_[name] = std::move(content); }

std::map<std::string, std::string> OutputSet::commit() const {
    namespace fs = std::filesystem;
    fs::create_directories(dir_);
    std::vector<fs::path> written;
    std::map<std::string, std::string> hashes;
    try {
        for (const auto& [name, content] : files_) {
            const fs::path path = fs::path(dir_) / name;
            const bool existed = fs::exists(path);
            std::ofstream f(path, std::ios::binary);
            if (!f) throw Error("cannot write " + path.string());
            if (!existed) written.push_back(path);
            f << content;
            if (!f) throw Error("write failed for " + path.string());
            hashes[name] = content_hash(content);
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& p : written) fs::remove(p, ec);
        throw;
    }
    return hashes;
}

std::string content_hash(const std::string& content) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : content) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const std::vector<std::string>& recipe_names() {
    static const std::vector<std::string> names{"convergence", "response_grid", "queue_dists", "power_of_two",
                                                "vary_d", "pf_ps_surface", "heuristic_table"};
    return names;
}

namespace {

struct Row {
    std::vector<std::string> prefix;
    PointSpec spec;
    PointResult result;
};

std::string table(const std::vector<std::string>& prefix_names, const std::vector<Row>& rows) {
    std::vector<std::string> header = prefix_names;
    for (auto& c : point_columns()) header.push_back(c);
    std::string out = join_csv(header) + "\n";
    for (const auto& r : rows) {
        auto cells = r.prefix;
        for (auto& c : point_cells(r.spec, r.result)) cells.push_back(std::move(c));
        out += join_csv(cells) + "\n";
    }
    return out;
}

void evaluate(std::vector<Row>& rows, unsigned threads) {
    parallel_for(rows.size(), threads,
                 [&](std::size_t i) { rows[i].result = evaluate_point_noexcept_infeasible(rows[i].spec); });
}

struct OptJob {
    double lambda, q_fast, speed_ratio;
    Family family;
    int d_fast, d_slow;
    ServiceDistribution service = ServiceDistribution::exponential();
    bool heuristic = false;
    std::optional<OptResult> result{};
};

void optimize_all(std::vector<OptJob>& jobs, unsigned threads) {
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
        auto& j = jobs[i];
        const auto config = SystemConfig::create(j.lambda, j.q_fast, j.speed_ratio);
        OptimizeOptions options;
        options.service = j.service;
        try {
            j.result = j.heuristic ? heuristic(config, j.family, j.d_fast, j.d_slow, options)
                                   : optimize(config, j.family, j.d_fast, j.d_slow, options);
        } catch (const InfeasibleError&) {
            j.result.reset();
        }
    });
}

PointSpec analytic_spec(const OptJob& j, double p_fast, double p_slow) {
    PointSpec s;
    s.source = Source::Analytic;
    s.policy = DispatchPolicy::from_params({j.d_fast, j.d_slow, p_fast, p_slow, j.family});
    s.lambda = j.lambda;
    s.q_fast = j.q_fast;
    s.speed_ratio = j.speed_ratio;
    s.service = j.service;
    return s;
}

PointSpec optimized_spec(const OptJob& j) {
    return analytic_spec(j, j.result ? j.result->p_fast_opt : 1.0, j.result ? j.result->p_slow_opt : 1.0);
}

struct SimDefaults {
    std::int64_t arrivals;
    std::int64_t warmup;
    int k;
};

SimDefaults sim_defaults(const RunConfig& c, std::int64_t arrivals, int k) {
    SimDefaults d;
    d.arrivals = c.has("arrivals") ? c.arrivals : arrivals;
    d.warmup = c.warmup ? *c.warmup : d.arrivals / 10;
    d.k = c.has("k") && c.k ? *c.k : k;
    return d;
}

PointSpec sim_spec(const DispatchPolicy& policy, double lambda, double q_fast, double r, int k,
                   const SimDefaults& d, std::uint64_t seed, const ServiceDistribution& service) {
    PointSpec s;
    s.source = Source::Simulation;
    s.policy = policy;
    s.lambda = lambda;
    s.q_fast = q_fast;
    s.speed_ratio = r;
    s.k = k;
    s.service = service;
    s.seed = seed;
    s.arrivals = d.arrivals;
    s.warmup = d.warmup;
    return s;
}

std::vector<double> lambda_grid(const RunConfig& c, std::vector<double> fallback) {
    if (!c.lambdas.empty()) return c.lambdas;
    if (c.has("lambda")) return {c.lambda};
    return fallback;
}

std::vector<double> steps(double lo, double hi, double step) {
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double v = lo + i * step;
        if (v > hi + 1e-9) break;
        out.push_back(std::round(v * 1e6) / 1e6);
    }
    return out;
}

std::string tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double value_or_nan(const Row& r) {
    return r.result.feasible ? r.result.mean_response : std::numeric_limits<double>::quiet_NaN();
}

// Series of mean_response against lambda, one per policy name, from rows
// whose prefix[0] equals panel.
svg::LinePlot lambda_plot(const std::vector<Row>& rows, const std::string& panel, const std::string& title) {
    svg::LinePlot plot;
    plot.title = title;
    plot.x_label = "lambda";
    plot.y_label = "E[T]";
    double analytic_max = 0.0;
    for (const auto& r : rows) {
        if (r.prefix[0] != panel) continue;
        const std::string name =
            r.spec.policy.name() + (r.spec.source == Source::Simulation ? " (sim)" : "");
        auto it = std::find_if(plot.series.begin(), plot.series.end(),
                               [&](const svg::Series& s) { return s.name == name; });
        if (it == plot.series.end()) {
            plot.series.push_back({name, {}, {}, r.spec.source == Source::Simulation});
            it = plot.series.end() - 1;
        }
        it->x.push_back(r.spec.lambda);
        const bool bad = !r.result.feasible || r.result.unstable_flag;
        it->y.push_back(bad ? std::numeric_limits<double>::quiet_NaN() : r.result.mean_response);
        if (r.spec.source == Source::Analytic && r.result.feasible) {
            analytic_max = std::max(analytic_max, r.result.mean_response);
        }
    }
    if (analytic_max > 0.0) plot.y_max = 3.0 * analytic_max;
    return plot;
}

void log_line(std::ostream& log, const char* fmt, ...) __attribute__((format(printf, 2, 3)));
void log_line(std::ostream& log, const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    log << buf << "\n";
}

// ---------------------------------------------------------------------------

void convergence(const RunConfig& c, OutputSet& out, std::ostream& log) {
    const double qf = c.has("q_fast") ? c.q_fast : 0.5;
    const double r = c.has("speed_ratio") ? c.speed_ratio : 10.0;
    const double lam = c.has("lambda") ? c.lambda : 0.74;
    const int df = c.has("d") ? c.d_fast : 2, ds = c.has("d") ? c.d_slow : 2;
    auto defaults = sim_defaults(c, 1'000'000, 0);
    std::vector<int> ks{10, 50, 100, 500, 1000};
    if (c.has("k") && c.k) ks = {*c.k};

    std::vector<OptJob> jobs{{lam, qf, r, Family::JIQ, df, ds}, {lam, qf, r, Family::JSQ, df, ds}};
    optimize_all(jobs, c.threads);
    std::vector<Row> rows;
    for (const auto& j : jobs) rows.push_back({{"inf"}, optimized_spec(j), {}});
    for (const auto& j : jobs) {
        const auto policy = optimized_spec(j).policy;
        for (int k : ks) {
            rows.push_back({{std::to_string(k)},
                            sim_spec(policy, lam, qf, r, k, defaults, derive_seed(c.seed, rows.size()), c.service),
                            {}});
        }
    }
    evaluate(rows, c.threads);
    out.add("convergence.csv", table({"k_label"}, rows));

    svg::LinePlot plot;
    plot.title = "E[T] vs k (qF=" + tag(qf) + ", r=" + tag(r) + ", lambda=" + tag(lam) + ")";
    plot.x_label = "k";
    plot.y_label = "E[T]";
    plot.log_x = true;
    for (const auto& j : jobs) {
        const std::string fam(to_string(j.family));
        svg::Series sim{fam + " sim", {}, {}, true};
        svg::Series ana{fam + " analytic", {}, {}, false};
        double analytic = std::numeric_limits<double>::quiet_NaN();
        for (const auto& row : rows) {
            if (row.spec.policy.params().family != j.family) continue;
            if (row.spec.source == Source::Analytic) analytic = value_or_nan(row);
        }
        for (const auto& row : rows) {
            if (row.spec.policy.params().family != j.family || row.spec.source != Source::Simulation) continue;
            sim.x.push_back(*row.spec.k);
            sim.y.push_back(value_or_nan(row));
            ana.x.push_back(*row.spec.k);
            ana.y.push_back(analytic);
            log_line(log, "%s k=%d sim %.5f +- %.5f analytic %.5f rel.err %+.4f", fam.c_str(), *row.spec.k,
                     row.result.mean_response, row.result.ci_halfwidth_99, analytic,
                     (row.result.mean_response - analytic) / analytic);
        }
        plot.series.push_back(sim);
        plot.series.push_back(ana);
    }
    out.add("convergence.svg", svg::render(plot));
}

void response_grid(const RunConfig& c, OutputSet& out, std::ostream& log) {
    const std::vector<double> rs = c.has("speed_ratio") ? std::vector<double>{c.speed_ratio}
                                                        : std::vector<double>{1.1, 2, 5, 10};
    const std::vector<double> qs = c.has("q_fast") ? std::vector<double>{c.q_fast}
                                                   : std::vector<double>{0.2, 0.5, 0.8};
    const auto lams = lambda_grid(c, steps(0.05, 0.95, 0.05));
    const auto defaults = sim_defaults(c, 200'000, 100);
    const int d = c.d ? *c.d : 4;

    std::vector<OptJob> jobs;
    for (double r : rs)
        for (double q : qs)
            for (double lam : lams)
                for (Family f : {Family::JIQ, Family::JSQ}) jobs.push_back({lam, q, r, f, 2, 2});
    optimize_all(jobs, c.threads);

    std::vector<Row> rows;
    for (const auto& j : jobs) {
        if (!j.result) continue;
        rows.push_back({{"r" + tag(j.speed_ratio) + "_qf" + tag(j.q_fast)}, optimized_spec(j), {}});
    }
    for (double r : rs)
        for (double q : qs)
            for (double lam : lams)
                for (const auto& p : {DispatchPolicy::jsq_d(d), DispatchPolicy::sed_d(d), DispatchPolicy::jiq_global()}) {
                    rows.push_back({{"r" + tag(r) + "_qf" + tag(q)},
                                    sim_spec(p, lam, q, r, defaults.k, defaults, derive_seed(c.seed, rows.size()),
                                             c.service),
                                    {}});
                }
    evaluate(rows, c.threads);
    out.add("response_grid.csv", table({"panel"}, rows));
    for (double r : rs)
        for (double q : qs) {
            const std::string panel = "r" + tag(r) + "_qf" + tag(q);
            out.add("response_grid_" + panel + ".svg",
                    svg::render(lambda_plot(rows, panel, "E[T] vs lambda, r=" + tag(r) + ", qF=" + tag(q))));
        }
    int unstable = 0;
    for (const auto& row : rows) unstable += row.result.unstable_flag ? 1 : 0;
    log_line(log, "response_grid: %zu rows, %d simulated points flagged unstable", rows.size(), unstable);
}

void queue_dists(const RunConfig& c, OutputSet& out, std::ostream& log) {
    struct Case {
        double r, lambda;
    };
    std::vector<Case> cases{{1.1, 0.5}, {5, 0.8}, {10, 0.2}};
    if (c.has("speed_ratio") || c.has("lambda")) cases = {{c.speed_ratio, c.lambda}};
    const double qf = c.has("q_fast") ? c.q_fast : 0.5;
    const auto defaults = sim_defaults(c, 500'000, 500);

    std::vector<OptJob> jobs;
    for (const auto& cs : cases)
        for (Family f : {Family::JIQ, Family::JSQ}) jobs.push_back({cs.lambda, qf, cs.r, f, 2, 2});
    optimize_all(jobs, c.threads);

    struct SimJob {
        std::string label;
        PointSpec spec;
        SimReport report;
    };
    std::vector<SimJob> sims;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string label = "r" + tag(cases[i].r) + "_lam" + tag(cases[i].lambda);
        std::vector<DispatchPolicy> policies{DispatchPolicy::jiq_global()};
        for (std::size_t f = 0; f < 2; ++f) {
            if (jobs[2 * i + f].result) policies.push_back(optimized_spec(jobs[2 * i + f]).policy);
        }
        for (const auto& p : policies) {
            sims.push_back({label,
                            sim_spec(p, cases[i].lambda, qf, cases[i].r, defaults.k, defaults,
                                     derive_seed(c.seed, sims.size()), c.service),
                            {}});
        }
    }
    parallel_for(sims.size(), c.threads, [&](std::size_t i) {
        const auto& s = sims[i].spec;
        sims[i].report = run(s.config(), s.policy, s.service, s.arrivals, s.warmup, s.seed);
    });

    std::string csv = "case,r,lambda,policy,source,class,i,frac_at_least_i,frac_exactly_i,p_fast,p_slow,k,seed,arrivals,warmup\n";
    auto emit = [&](const std::string& label, double r, double lam, const std::string& policy, const char* source,
                    const char* cls, const std::vector<double>& at_least, const std::vector<double>& exactly,
                    double pf, double ps, const std::string& k, const std::string& seed, const std::string& arr,
                    const std::string& warm) {
        for (std::size_t i = 0; i < at_least.size(); ++i) {
            csv += join_csv({label, format_double(r), format_double(lam), policy, source, cls, std::to_string(i),
                             format_double(at_least[i]), format_double(i < exactly.size() ? exactly[i] : 0.0),
                             format_double(pf), format_double(ps), k, seed, arr, warm}) +
                   "\n";
        }
    };
    auto survival_from_pmf = [](const std::vector<double>& pmf) {
        std::vector<double> tail(pmf.size());
        double acc = 0.0;
        for (std::size_t i = pmf.size(); i-- > 0;) {
            acc += pmf[i];
            tail[i] = acc;
        }
        return tail;
    };
    auto pmf_from_survival = [](const std::vector<double>& tail) {
        std::vector<double> pmf(tail.size());
        for (std::size_t i = 0; i < tail.size(); ++i) pmf[i] = tail[i] - (i + 1 < tail.size() ? tail[i + 1] : 0.0);
        return pmf;
    };

    std::map<std::string, std::vector<svg::Series>> fast_plots, slow_plots;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string label = "r" + tag(cases[i].r) + "_lam" + tag(cases[i].lambda);
        for (std::size_t f = 0; f < 2; ++f) {
            const auto& j = jobs[2 * i + f];
            if (!j.result) continue;
            const auto spec = optimized_spec(j);
            const auto config = SystemConfig::create(j.lambda, j.q_fast, j.speed_ratio);
            const auto params = spec.policy.params();
            std::vector<double> tf, ts;
            if (j.family == Family::JIQ) {
                const auto fp = solve_jiq_system(config, params);
                tf = survival_from_pmf(queue_pmf_truncated(tagged_fast(config, fp)));
                ts = survival_from_pmf(queue_pmf_truncated(tagged_slow(config, fp)));
            } else {
                const auto e = evaluate_jsq(config, params);
                tf = e.fast.tail;
                ts = e.slow.tail;
            }
            const std::string name = spec.policy.name();
            emit(label, j.speed_ratio, j.lambda, std::string(to_string(spec.policy.kind)), "analytic", "fast", tf,
                 pmf_from_survival(tf), params.p_fast, params.p_slow, "inf", "", "", "");
            emit(label, j.speed_ratio, j.lambda, std::string(to_string(spec.policy.kind)), "analytic", "slow", ts,
                 pmf_from_survival(ts), params.p_fast, params.p_slow, "inf", "", "", "");
            auto idx = [](std::size_t n) {
                std::vector<double> x(n);
                for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
                return x;
            };
            fast_plots[label].push_back({name + " analytic", idx(tf.size()), tf, false});
            slow_plots[label].push_back({name + " analytic", idx(ts.size()), ts, false});
        }
    }
    for (const auto& s : sims) {
        const auto& p = s.spec.policy;
        const std::string k = std::to_string(*s.spec.k), seed = std::to_string(s.spec.seed),
                          arr = std::to_string(s.spec.arrivals), warm = std::to_string(s.spec.warmup);
        emit(s.label, s.spec.speed_ratio, s.spec.lambda, std::string(to_string(p.kind)), "simulation", "fast",
             s.report.hist_fast.at_least, s.report.hist_fast.exactly, p.p_fast, p.p_slow, k, seed, arr, warm);
        emit(s.label, s.spec.speed_ratio, s.spec.lambda, std::string(to_string(p.kind)), "simulation", "slow",
             s.report.hist_slow.at_least, s.report.hist_slow.exactly, p.p_fast, p.p_slow, k, seed, arr, warm);
        auto idx = [](std::size_t n) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
            return x;
        };
        fast_plots[s.label].push_back({p.name() + " sim", idx(s.report.hist_fast.at_least.size()),
                                       s.report.hist_fast.at_least, true});
        slow_plots[s.label].push_back({p.name() + " sim", idx(s.report.hist_slow.at_least.size()),
                                       s.report.hist_slow.at_least, true});
    }
    out.add("queue_dists.csv", csv);
    for (auto& [label, series] : fast_plots) {
        for (const char* cls : {"fast", "slow"}) {
            svg::LinePlot plot;
            plot.title = std::string(cls) + " servers, " + label + ", P(N >= i)";
            plot.x_label = "i";
            plot.y_label = "fraction with >= i jobs";
            plot.log_y = true;
            plot.y_min = 1e-6;
            plot.series = std::string(cls) == "fast" ? series : slow_plots[label];
            out.add("queue_dists_" + label + "_" + cls + ".svg", svg::render(plot));
        }
    }
    log_line(log, "queue_dists: %zu cases, %zu simulations", cases.size(), sims.size());
}

void power_of_two(const RunConfig& c, OutputSet& out, std::ostream& log) {
    const double r = c.has("speed_ratio") ? c.speed_ratio : 5.0;
    const std::vector<double> qs = c.has("q_fast") ? std::vector<double>{c.q_fast} : std::vector<double>{0.2, 0.8};
    const auto lams = lambda_grid(c, steps(0.05, 0.95, 0.05));
    const auto defaults = sim_defaults(c, 200'000, 100);

    std::vector<OptJob> jobs;
    for (double q : qs)
        for (double lam : lams) jobs.push_back({lam, q, r, Family::JIQ, 1, 1});
    optimize_all(jobs, c.threads);
    std::vector<Row> rows;
    for (const auto& j : jobs) {
        if (j.result) rows.push_back({{"qf" + tag(j.q_fast)}, optimized_spec(j), {}});
    }
    for (double q : qs)
        for (double lam : lams)
            for (const auto& p : {DispatchPolicy::jsq_d(2), DispatchPolicy::sed_d(2), DispatchPolicy::wjsq_d(2)}) {
                rows.push_back({{"qf" + tag(q)},
                                sim_spec(p, lam, q, r, defaults.k, defaults, derive_seed(c.seed, rows.size()), c.service),
                                {}});
            }
    evaluate(rows, c.threads);
    out.add("power_of_two.csv", table({"panel"}, rows));
    for (double q : qs) {
        out.add("power_of_two_qf" + tag(q) + ".svg",
                svg::render(lambda_plot(rows, "qf" + tag(q), "E[T] vs lambda, r=" + tag(r) + ", qF=" + tag(q))));
    }
    log_line(log, "power_of_two: %zu rows", rows.size());
}

void vary_d(const RunConfig& c, OutputSet& out, std::ostream& log) {
    struct Panel {
        double q, r;
    };
    std::vector<Panel> panels{{0.5, 1.1}, {0.2, 10}};
    if (c.has("q_fast") || c.has("speed_ratio")) panels = {{c.q_fast, c.speed_ratio}};
    const double lam = c.has("lambda") ? c.lambda : 0.8;
    const auto defaults = sim_defaults(c, 200'000, 100);
    const int d_max = c.d ? *c.d : 8;

    std::vector<OptJob> jobs;
    for (const auto& p : panels)
        for (int d = 2; d <= d_max; ++d)
            for (int df = 1; df < d; ++df)
                for (Family f : {Family::JIQ, Family::JSQ}) jobs.push_back({lam, p.q, p.r, f, df, d - df});
    optimize_all(jobs, c.threads);

    std::vector<Row> rows;
    auto panel_tag = [](const Panel& p) { return "qf" + tag(p.q) + "_r" + tag(p.r); };
    for (const auto& p : panels) {
        // d = 1: a single probabilistic choice between a random fast and a random slow server.
        const auto random = optimize_random_routing(SystemConfig::create(lam, p.q, p.r));
        PointSpec s;
        s.policy = DispatchPolicy::random(random.p_fast_opt);
        s.lambda = lam;
        s.q_fast = p.q;
        s.speed_ratio = p.r;
        rows.push_back({{panel_tag(p), "1", "ours"}, s, {}});
    }
    for (const auto& j : jobs) {
        if (!j.result) continue;
        const Panel p{j.q_fast, j.speed_ratio};
        rows.push_back({{panel_tag(p), std::to_string(j.d_fast + j.d_slow), "candidate"}, optimized_spec(j), {}});
    }
    for (const auto& p : panels)
        for (int d = 1; d <= d_max; ++d)
            for (const auto& pol : {DispatchPolicy::jsq_d(d), DispatchPolicy::sed_d(d), DispatchPolicy::wjsq_d(d)}) {
                rows.push_back({{panel_tag(p), std::to_string(d), "baseline"},
                                sim_spec(pol, lam, p.q, p.r, defaults.k, defaults, derive_seed(c.seed, rows.size()),
                                         c.service),
                                {}});
            }
    evaluate(rows, c.threads);

    std::string best_csv = "panel,d,family,d_fast,d_slow,p_fast,p_slow,mean_response\n";
    std::vector<svg::LinePlot> plots;
    for (const auto& p : panels) {
        svg::LinePlot plot;
        plot.title = "E[T] vs d, qF=" + tag(p.q) + ", r=" + tag(p.r) + ", lambda=" + tag(lam);
        plot.x_label = "d";
        plot.y_label = "E[T]";
        double top = 0.0;
        for (Family f : {Family::JIQ, Family::JSQ}) {
            svg::Series series{f == Family::JIQ ? "JIQ-(dF,dS)" : "JSQ-(dF,dS)", {}, {}, true};
            for (int d = 1; d <= d_max; ++d) {
                const Row* best = nullptr;
                for (const auto& row : rows) {
                    if (row.prefix[0] != panel_tag(p) || row.prefix[1] != std::to_string(d)) continue;
                    if (row.prefix[2] == "baseline" || !row.result.feasible) continue;
                    if (row.spec.policy.is_family() && row.spec.policy.params().family != f) continue;
                    if (!best || row.result.mean_response < best->result.mean_response) best = &row;
                }
                if (!best) continue;
                best_csv += join_csv({panel_tag(p), std::to_string(d), std::string(to_string(f)),
                                      best->spec.policy.is_family() ? std::to_string(best->spec.policy.d_fast) : "",
                                      best->spec.policy.is_family() ? std::to_string(best->spec.policy.d_slow) : "",
                                      format_double(best->spec.policy.p_fast),
                                      format_double(best->spec.policy.p_slow),
                                      format_double(best->result.mean_response)}) +
                            "\n";
                series.x.push_back(d);
                series.y.push_back(best->result.mean_response);
                top = std::max(top, best->result.mean_response);
                if (best->spec.policy.is_family()) {
                    log_line(log, "%s d=%d best %s E[T]=%.4f", panel_tag(p).c_str(), d,
                             best->spec.policy.name().c_str(), best->result.mean_response);
                }
            }
            plot.series.push_back(series);
        }
        for (PolicyKind kind : {PolicyKind::JsqD, PolicyKind::SedD, PolicyKind::WjsqD}) {
            svg::Series series{std::string(to_string(kind)) + " (sim)", {}, {}, true};
            for (const auto& row : rows) {
                if (row.prefix[0] != panel_tag(p) || row.prefix[2] != "baseline" || row.spec.policy.kind != kind) continue;
                series.x.push_back(row.spec.policy.d);
                series.y.push_back(row.result.unstable_flag ? std::numeric_limits<double>::quiet_NaN()
                                                            : row.result.mean_response);
            }
            plot.series.push_back(series);
        }
        if (top > 0.0) plot.y_max = 3.0 * top;
        out.add("vary_d_" + panel_tag(p) + ".svg", svg::render(plot));
    }
    out.add("vary_d.csv", table({"panel", "d_total", "role"}, rows));
    out.add("vary_d_best.csv", best_csv);
}

void pf_ps_surface(const RunConfig& c, OutputSet& out, std::ostream& log) {
    struct Panel {
        double q, r, lambda;
    };
    std::vector<Panel> panels{{0.2, 5, 0.56}, {0.5, 2, 0.95}};
    if (c.has("q_fast") || c.has("speed_ratio") || c.has("lambda")) panels = {{c.q_fast, c.speed_ratio, c.lambda}};
    const Family family = c.has("family") ? c.family : Family::JSQ;
    const int n = 32;

    std::vector<OptJob> jobs;
    for (const auto& p : panels) jobs.push_back({p.lambda, p.q, p.r, family, 2, 2});
    optimize_all(jobs, c.threads);

    std::vector<Row> rows;
    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const auto& p = panels[pi];
        const std::string label = "qf" + tag(p.q) + "_r" + tag(p.r) + "_lam" + tag(p.lambda);
        for (int iy = 0; iy <= n; ++iy)
            for (int ix = 0; ix <= n; ++ix) {
                rows.push_back({{label, "grid"}, analytic_spec(jobs[pi], ix / double(n), iy / double(n)), {}});
            }
        if (jobs[pi].result) rows.push_back({{label, "optimum"}, optimized_spec(jobs[pi]), {}});
    }
    evaluate(rows, c.threads);
    out.add("pf_ps_surface.csv", table({"panel", "role"}, rows));

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const auto& p = panels[pi];
        const std::string label = "qf" + tag(p.q) + "_r" + tag(p.r) + "_lam" + tag(p.lambda);
        svg::Heatmap map;
        map.title = std::string(to_string(family)) + "-(2,2) E[T] over (pF, pS), " + label;
        map.x_label = "p_F";
        map.y_label = "p_S";
        for (int i = 0; i <= n; ++i) {
            map.xs.push_back(i / double(n));
            map.ys.push_back(i / double(n));
        }
        map.z.assign(n + 1, std::vector<std::optional<double>>(n + 1));
        double best = std::numeric_limits<double>::infinity();
        for (const auto& row : rows) {
            if (row.prefix[0] != label || row.prefix[1] != "grid" || !row.result.feasible) continue;
            const int ix = static_cast<int>(std::lround(row.spec.policy.p_fast * n));
            const int iy = static_cast<int>(std::lround(row.spec.policy.p_slow * n));
            map.z[iy][ix] = row.result.mean_response;
            best = std::min(best, row.result.mean_response);
        }
        if (std::isfinite(best)) map.z_max = 3.0 * best;
        if (jobs[pi].result) {
            map.mark = std::make_pair(jobs[pi].result->p_fast_opt, jobs[pi].result->p_slow_opt);
            log_line(log, "%s optimum pF=%.4f pS=%.4f E[T]=%.4f feasible fraction %.3f", label.c_str(),
                     jobs[pi].result->p_fast_opt, jobs[pi].result->p_slow_opt, jobs[pi].result->et_opt,
                     jobs[pi].result->feasible_fraction);
        }
        out.add("pf_ps_surface_" + label + ".svg", svg::render(map));
    }
}

void heuristic_table(const RunConfig& c, OutputSet& out, std::ostream& log) {
    const double qf = c.has("q_fast") ? c.q_fast : 0.2;
    const double r = c.has("speed_ratio") ? c.speed_ratio : 5.0;
    const int df = c.has("d") ? c.d_fast : 2, ds = c.has("d") ? c.d_slow : 2;
    const auto lams = lambda_grid(c, {0.14, 0.24, 0.34, 0.44, 0.54, 0.64, 0.74, 0.84, 0.90, 0.98});

    std::vector<OptJob> jobs;
    for (double lam : lams)
        for (Family f : {Family::JIQ, Family::JSQ})
            for (bool h : {false, true}) {
                OptJob j{lam, qf, r, f, df, ds};
                j.heuristic = h;
                jobs.push_back(j);
            }
    optimize_all(jobs, c.threads);

    std::vector<Row> rows;
    for (const auto& j : jobs) {
        if (j.result) rows.push_back({{j.heuristic ? "heuristic" : "optimal"}, optimized_spec(j), {}});
    }
    evaluate(rows, c.threads);
    out.add("heuristic_table.csv", table({"method"}, rows));

    std::string summary =
        "lambda,family,p_fast_opt,p_slow_opt,et_opt,p_fast_heur,p_slow_heur,et_heur,pct_error\n";
    svg::LinePlot plot;
    plot.title = "Optimal vs heuristic, qF=" + tag(qf) + ", r=" + tag(r);
    plot.x_label = "lambda";
    plot.y_label = "E[T]";
    plot.log_y = true;
    for (Family f : {Family::JIQ, Family::JSQ}) {
        svg::Series opt{std::string(to_string(f)) + " optimal", {}, {}, true};
        svg::Series heur{std::string(to_string(f)) + " heuristic", {}, {}, true};
        for (std::size_t i = 0; i + 1 < jobs.size(); i += 2) {
            const auto& o = jobs[i];
            const auto& h = jobs[i + 1];
            if (o.family != f || !o.result || !h.result) continue;
            const double err = 100.0 * (h.result->et_opt - o.result->et_opt) / o.result->et_opt;
            summary += join_csv({format_double(o.lambda), std::string(to_string(f)),
                                 format_double(o.result->p_fast_opt), format_double(o.result->p_slow_opt),
                                 format_double(o.result->et_opt), format_double(h.result->p_fast_opt),
                                 format_double(h.result->p_slow_opt), format_double(h.result->et_opt),
                                 format_double(err)}) +
                       "\n";
            opt.x.push_back(o.lambda);
            opt.y.push_back(o.result->et_opt);
            heur.x.push_back(o.lambda);
            heur.y.push_back(h.result->et_opt);
            const bool pf_any = o.result->p_slow_opt == 0.0;
            log_line(log, "%s lambda=%.2f opt pF=%s pS=%.3f E[T]=%.3f | heur pF=%.3f pS=%.3f E[T]=%.3f | %.3f%%",
                     std::string(to_string(f)).c_str(), o.lambda,
                     pf_any ? "any  " : tag(std::round(o.result->p_fast_opt * 1000) / 1000).c_str(),
                     o.result->p_slow_opt, o.result->et_opt, h.result->p_fast_opt, h.result->p_slow_opt,
                     h.result->et_opt, err);
        }
        plot.series.push_back(opt);
        plot.series.push_back(heur);
    }
    out.add("heuristic_table_summary.csv", summary);
    out.add("heuristic_table.svg", svg::render(plot));
}

}  // namespace

void run_experiment(const std::string& recipe, const RunConfig& config, OutputSet& out, std::ostream& log) {
    if (recipe == "convergence") return convergence(config, out, log);
    if (recipe == "response_grid") return response_grid(config, out, log);
    if (recipe == "queue_dists") return queue_dists(config, out, log);
    if (recipe == "power_of_two") return power_of_two(config, out, log);
    if (recipe == "vary_d") return vary_d(config, out, log);
    if (recipe == "pf_ps_surface") return pf_ps_surface(config, out, log);
    if (recipe == "heuristic_table") return heuristic_table(config, out, log);
    std::string names;
    for (const auto& n : recipe_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown recipe '" + recipe + "' (expected one of: " + names + ")");
}

}  // namespace hetlb::cli

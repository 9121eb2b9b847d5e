#include "hetlb/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hetlb/errors.hpp"
#include "hetlb/experiments.hpp"
#include "hetlb/fixedpoint.hpp"
#include "hetlb/optimizer.hpp"
#include "hetlb/oracle.hpp"
#include "hetlb/parallel.hpp"
#include "hetlb/simulator.hpp"

namespace hetlb::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

std::optional<int> parse_k(const std::string& text) {
    if (text == "inf") return std::nullopt;
    std::size_t used = 0;
    int k = 0;
    try {
        k = std::stoi(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || k <= 0) throw ConfigError("--k expects a positive integer or 'inf', got '" + text + "'");
    return k;
}

ServiceDistribution service_from_json(const std::string& kind, std::optional<double> cv2) {
    if (kind == "exp" || kind == "exponential") return ServiceDistribution::exponential();
    if (kind == "det" || kind == "deterministic") return ServiceDistribution::deterministic();
    if (kind == "erlang") {
        if (!cv2 || *cv2 <= 0.0 || *cv2 > 1.0) throw ConfigError("erlang service needs service_cv2 in (0, 1]");
        return ServiceDistribution::erlang(static_cast<int>(std::lround(1.0 / *cv2)));
    }
    if (kind == "hyper" || kind == "hyperexponential") {
        if (!cv2) throw ConfigError("hyper service needs service_cv2 > 1");
        return ServiceDistribution::hyperexponential(*cv2);
    }
    throw ConfigError("unknown service_kind '" + kind + "' (expected exp, det, erlang, hyper)");
}

void require_out(const RunConfig& c, const char* what) {
    if (c.out.empty()) throw ConfigError(std::string(what) + " needs --out DIR");
}

nlohmann::ordered_json tolerances() {
    const SolveOptions s;
    const OptimizeOptions o;
    const OracleOptions q;
    nlohmann::ordered_json t;
    t["fixed_point_tolerance"] = s.tolerance;
    t["fixed_point_max_iterations"] = s.max_iterations;
    t["fixed_point_damping"] = s.damping;
    t["fixed_point_min_damping"] = s.min_damping;
    t["stability_margin"] = s.stability_margin;
    t["optimizer_grid_divisions"] = o.grid_divisions;
    t["optimizer_refine_passes"] = o.refine_passes;
    t["optimizer_refine_factor"] = o.refine_factor;
    t["oracle_truncation_limit"] = q.truncation_limit;
    t["oracle_tolerance"] = q.tolerance;
    return t;
}

std::string manifest_text(const std::string& command, const std::string& recipe, const RunConfig& c,
                          const std::map<std::string, std::string>& hashes) {
    nlohmann::ordered_json m;
    m["version"] = kVersion;
    m["command"] = command;
    if (!recipe.empty()) m["recipe"] = recipe;
    m["config"] = to_json(c);
    m["tolerances"] = tolerances();
    nlohmann::ordered_json h = nlohmann::ordered_json::object();
    for (const auto& [name, hash] : hashes) h[name] = hash;
    m["outputs"] = h;
    return m.dump(2) + "\n";
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------

int cmd_solve(const RunConfig& c, OutputSet& files, std::ostream& out) {
    PointSpec spec;
    spec.policy = c.dispatch_policy();
    spec.lambda = c.lambda;
    spec.q_fast = c.q_fast;
    spec.speed_ratio = c.speed_ratio;
    spec.service = c.service;
    spec.cap = c.cap;
    if (c.k) {
        // A finite k is answered by the exact chain.
        spec.source = Source::Oracle;
        spec.k = c.k;
    }
    const PointResult r = evaluate_point(spec);
    std::string body;
    if (c.format == "csv") {
        body = join_csv(point_columns()) + "\n" + join_csv(point_cells(spec, r)) + "\n";
    } else if (c.format == "json") {
        nlohmann::ordered_json j;
        const auto cols = point_columns();
        const auto cells = point_cells(spec, r);
        for (std::size_t i = 0; i < cols.size(); ++i) j[cols[i]] = cells[i];
        body = j.dump(2) + "\n";
    } else {
        body = "E[T]=" + fmt("%.3f", r.mean_response) + "\n";
        body += "rho_fast=" + fmt("%.6f", r.rho_fast) + " rho_slow=" + fmt("%.6f", r.rho_slow) + "\n";
    }
    out << body;
    files.add(c.format == "json" ? "solve.json" : "solve.csv",
              c.format == "json" ? body : join_csv(point_columns()) + "\n" + join_csv(point_cells(spec, r)) + "\n");
    return 0;
}

std::string opt_csv(const std::vector<std::pair<std::string, OptResult>>& rows, const RunConfig& c) {
    std::string s = "method,family,lambda,q_fast,speed_ratio,d_fast,d_slow,p_fast,p_slow,mean_response,ties,feasible_fraction\n";
    for (const auto& [method, r] : rows) {
        s += join_csv({method, std::string(to_string(c.family)), format_double(c.lambda), format_double(c.q_fast),
                       format_double(c.speed_ratio), std::to_string(c.d_fast), std::to_string(c.d_slow),
                       format_double(r.p_fast_opt), format_double(r.p_slow_opt), format_double(r.et_opt),
                       std::to_string(r.ties), format_double(r.feasible_fraction)}) +
             "\n";
    }
    return s;
}

OptimizeOptions opt_options(const RunConfig& c) {
    OptimizeOptions o;
    o.service = c.service;
    o.threads = c.threads;
    return o;
}

int cmd_optimize(const RunConfig& c, OutputSet& files, std::ostream& out) {
    const auto r = optimize(c.system(), c.family, c.d_fast, c.d_slow, opt_options(c));
    const auto csv = opt_csv({{"optimal", r}}, c);
    if (c.format == "csv") {
        out << csv;
    } else if (c.format == "json") {
        nlohmann::ordered_json j;
        j["p_fast"] = r.p_fast_opt;
        j["p_slow"] = r.p_slow_opt;
        j["mean_response"] = r.et_opt;
        j["ties"] = r.ties;
        j["feasible_fraction"] = r.feasible_fraction;
        out << j.dump(2) << "\n";
    } else {
        out << "pF*=" << fmt("%.4f", r.p_fast_opt) << " pS*=" << fmt("%.4f", r.p_slow_opt)
            << " E[T]=" << fmt("%.4f", r.et_opt);
        if (r.ties > 1) out << " (" << r.ties << " tied grid points)";
        out << "\n";
    }
    files.add("optimize.csv", csv);
    return 0;
}

int cmd_heuristic(const RunConfig& c, OutputSet& files, std::ostream& out) {
    const auto o = optimize(c.system(), c.family, c.d_fast, c.d_slow, opt_options(c));
    const auto h = heuristic(c.system(), c.family, c.d_fast, c.d_slow, opt_options(c));
    const double err = 100.0 * (h.et_opt - o.et_opt) / o.et_opt;
    const auto csv = opt_csv({{"optimal", o}, {"heuristic", h}}, c);
    if (c.format == "csv") {
        out << csv;
    } else if (c.format == "json") {
        nlohmann::ordered_json j;
        j["optimal"] = {{"p_fast", o.p_fast_opt}, {"p_slow", o.p_slow_opt}, {"mean_response", o.et_opt}};
        j["heuristic"] = {{"p_fast", h.p_fast_opt}, {"p_slow", h.p_slow_opt}, {"mean_response", h.et_opt}};
        j["pct_error"] = err;
        out << j.dump(2) << "\n";
    } else {
        out << "optimal   pF=" << fmt("%.4f", o.p_fast_opt) << " pS=" << fmt("%.4f", o.p_slow_opt)
            << " E[T]=" << fmt("%.4f", o.et_opt) << "\n";
        out << "heuristic pF=" << fmt("%.4f", h.p_fast_opt) << " pS=" << fmt("%.4f", h.p_slow_opt)
            << " E[T]=" << fmt("%.4f", h.et_opt) << "\n";
        out << "error " << fmt("%.3f", err) << "%\n";
    }
    files.add("heuristic.csv", csv);
    return 0;
}

int cmd_simulate(const RunConfig& c, OutputSet& files, std::ostream& out) {
    if (!c.k) throw ConfigError("simulate needs a finite --k");
    const auto config = c.system();
    const auto policy = c.dispatch_policy();
    const auto rep = run(config, policy, c.service, c.arrivals, c.warmup_or_default(), c.seed);
    std::ostringstream hist;
    write_histogram_csv(hist, rep);
    const std::string json = to_json(rep) + "\n";
    if (c.format == "json") {
        out << json;
    } else if (c.format == "csv") {
        out << hist.str();
    } else {
        out << rep.policy << " k=" << *c.k << " E[T]=" << fmt("%.4f", rep.mean_T) << " +- "
            << fmt("%.4f", rep.ci_halfwidth_99) << " (99%)\n";
        out << "busy_fast=" << fmt("%.4f", rep.busy_fast) << " busy_slow=" << fmt("%.4f", rep.busy_slow)
            << " arrivals=" << rep.arrivals_processed << "\n";
        if (rep.unstable_flag) out << "unstable: batch means keep growing\n";
    }
    files.add("simulate.json", json);
    files.add("histogram.csv", hist.str());
    return rep.unstable_flag ? 2 : 0;
}

int cmd_experiment(const std::string& recipe, const RunConfig& c, OutputSet& files, std::ostream& out) {
    run_experiment(recipe, c, files, out);
    return 0;
}

// Re-evaluates every row of a point CSV and reports output columns that differ.
int cmd_recheck(const std::string& path, const RunConfig& c, std::ostream& out) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw ConfigError(path + " is empty");
    const auto cols = point_columns();
    const auto& header = rows[0];
    std::size_t offset = header.size();
    for (std::size_t i = 0; i + cols.size() <= header.size(); ++i) {
        if (std::equal(cols.begin(), cols.end(), header.begin() + i)) {
            offset = i;
            break;
        }
    }
    if (offset == header.size()) throw ConfigError(path + " has no point columns");
    std::vector<int> bad(rows.size(), 0);
    parallel_for(rows.size() - 1, c.threads, [&](std::size_t r) {
        const auto& row = rows[r + 1];
        const std::vector<std::string> cells(row.begin() + offset, row.end());
        const auto spec = parse_point(cells);
        const auto again = point_cells(spec, evaluate_point_noexcept_infeasible(spec));
        bad[r + 1] = again != cells;
    });
    int mismatches = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (bad[r]) {
            ++mismatches;
            out << "row " << r << " differs\n";
        }
    }
    out << rows.size() - 1 << " rows, " << mismatches << " mismatched\n";
    return mismatches == 0 ? 0 : 1;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// Raw flag values; applied over the config file in a fixed order.
struct Flags {
    std::string config, lambda, qf, r, k, d, pf, ps, family, policy, service, seed, arrivals, warmup, out, format,
        lambdas, cap, threads;
};

void add_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON config file");
    app->add_option("--lambda", f.lambda, "per-server arrival rate");
    app->add_option("--qf", f.qf, "fraction of fast servers");
    app->add_option("--r", f.r, "speed ratio muF/muS");
    app->add_option("--k", f.k, "number of servers or 'inf'");
    app->add_option("--d", f.d, "queries 'dF,dS', or 'd' for jsq-d/sed-d/wjsq-d");
    app->add_option("--pf", f.pf, "p_fast");
    app->add_option("--ps", f.ps, "p_slow");
    app->add_option("--family", f.family, "jiq or jsq");
    app->add_option("--policy", f.policy, "jiqd, jsqd, jsq-d, sed-d, wjsq-d, jiq-global, random");
    app->add_option("--service", f.service, "exp, det, erlang:K, hyper:CV2");
    app->add_option("--seed", f.seed, "master seed");
    app->add_option("--arrivals", f.arrivals, "simulated arrivals including warmup");
    app->add_option("--warmup", f.warmup, "arrivals discarded before measuring");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--format", f.format, "text, csv or json");
    app->add_option("--lambdas", f.lambdas, "comma-separated lambda sweep");
    app->add_option("--cap", f.cap, "oracle queue cap (0 searches)");
    app->add_option("--threads", f.threads, "worker threads (0 = all cores)");
}

double to_double(const std::string& flag, const std::string& v) {
    std::size_t used = 0;
    double x = 0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw ConfigError(flag + " expects a number, got '" + v + "'");
    return x;
}

std::int64_t to_int(const std::string& flag, const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw ConfigError(flag + " expects an integer, got '" + v + "'");
    return x;
}

RunConfig resolve(const Flags& f) {
    RunConfig c;
    if (!f.config.empty()) apply_json(c, read_json_file(f.config));
    auto mark = [&](const char* key) { c.given.insert(key); };
    if (!f.lambda.empty()) c.lambda = to_double("--lambda", f.lambda), mark("lambda");
    if (!f.qf.empty()) c.q_fast = to_double("--qf", f.qf), mark("q_fast");
    if (!f.r.empty()) c.speed_ratio = to_double("--r", f.r), mark("speed_ratio");
    if (!f.k.empty()) c.k = parse_k(f.k), mark("k");
    if (!f.d.empty()) apply_d(c, f.d);
    if (!f.pf.empty()) c.p_fast = to_double("--pf", f.pf), mark("p_fast");
    if (!f.ps.empty()) c.p_slow = to_double("--ps", f.ps), mark("p_slow");
    if (!f.family.empty()) {
        try {
            c.family = parse_family(f.family);
        } catch (const Error&) {
            throw ConfigError("--family expects jiq or jsq, got '" + f.family + "'");
        }
        mark("family");
    }
    if (!f.policy.empty()) c.policy = parse_policy_kind(f.policy), mark("policy");
    if (!f.service.empty()) {
        try {
            c.service = ServiceDistribution::parse(f.service);
        } catch (const Error& e) {
            throw ConfigError(std::string("--service: ") + e.what());
        }
        mark("service");
    }
    if (!f.seed.empty()) c.seed = static_cast<std::uint64_t>(to_int("--seed", f.seed)), mark("seed");
    if (!f.arrivals.empty()) c.arrivals = to_int("--arrivals", f.arrivals), mark("arrivals");
    if (!f.warmup.empty()) c.warmup = to_int("--warmup", f.warmup), mark("warmup");
    if (!f.lambdas.empty()) c.lambdas = parse_list(f.lambdas), mark("lambdas");
    if (!f.cap.empty()) c.cap = static_cast<int>(to_int("--cap", f.cap)), mark("cap");
    if (!f.threads.empty()) c.threads = static_cast<unsigned>(to_int("--threads", f.threads));
    c.out = f.out;
    if (!f.format.empty()) c.format = f.format;
    if (c.format != "text" && c.format != "csv" && c.format != "json") {
        throw ConfigError("--format expects text, csv or json, got '" + c.format + "'");
    }
    return c;
}

int dispatch_command(const std::string& command, const std::string& recipe, const RunConfig& c, OutputSet& files,
                     std::ostream& out) {
    if (command == "solve") return cmd_solve(c, files, out);
    if (command == "optimize") return cmd_optimize(c, files, out);
    if (command == "heuristic") return cmd_heuristic(c, files, out);
    if (command == "simulate") return cmd_simulate(c, files, out);
    if (command == "experiment") return cmd_experiment(recipe, c, files, out);
    throw ConfigError("unknown command '" + command + "'");
}

// Runs one command; when --out is set the files and a manifest are written
// together, otherwise nothing touches disk.
int execute(const std::string& command, const std::string& recipe, const RunConfig& c, std::ostream& out) {
    OutputSet files(c.out);
    const int status = dispatch_command(command, recipe, c, files, out);
    if (!c.out.empty()) {
        auto hashes = files.commit();
        const auto manifest = manifest_text(command, recipe, c, hashes);
        std::ofstream m(std::filesystem::path(c.out) / "manifest.json", std::ios::binary);
        m << manifest;
        if (!m) throw Error("cannot write manifest in " + c.out);
        out << "wrote " << hashes.size() << " files and manifest.json to " << c.out << "\n";
    }
    return status;
}

int cmd_replay(const std::string& path, unsigned threads, std::ostream& out) {
    const auto m = read_json_file(path);
    if (!m.contains("command") || !m.contains("config") || !m.contains("outputs")) {
        throw ConfigError(path + " is not a run manifest");
    }
    RunConfig c;
    apply_json(c, m["config"]);
    c.threads = threads;
    std::ostringstream sink;
    OutputSet files("");
    dispatch_command(m["command"].get<std::string>(), m.value("recipe", std::string()), c, files, sink);
    int mismatches = 0;
    for (const auto& [name, hash] : m["outputs"].items()) {
        const auto it = files.files().find(name);
        const std::string now = it == files.files().end() ? "missing" : content_hash(it->second);
        const bool same = now == hash.get<std::string>();
        mismatches += same ? 0 : 1;
        out << (same ? "same " : "DIFF ") << name << "\n";
    }
    out << (mismatches == 0 ? "replay identical\n" : "replay differs\n");
    return mismatches == 0 ? 0 : 1;
}

}  // namespace

SystemConfig RunConfig::system() const { return SystemConfig::create(lambda, q_fast, speed_ratio, k); }

PolicyParams RunConfig::params() const { return {d_fast, d_slow, p_fast, p_slow, family}; }

DispatchPolicy RunConfig::dispatch_policy() const {
    if (!policy) return DispatchPolicy::from_params(params());
    const int dd = d ? *d : 2;
    switch (*policy) {
        case PolicyKind::JiqDfDs: return DispatchPolicy::from_params({d_fast, d_slow, p_fast, p_slow, Family::JIQ});
        case PolicyKind::JsqDfDs: return DispatchPolicy::from_params({d_fast, d_slow, p_fast, p_slow, Family::JSQ});
        case PolicyKind::JsqD: return DispatchPolicy::jsq_d(dd);
        case PolicyKind::SedD: return DispatchPolicy::sed_d(dd);
        case PolicyKind::WjsqD: return DispatchPolicy::wjsq_d(dd);
        case PolicyKind::JiqGlobal: return DispatchPolicy::jiq_global();
        case PolicyKind::Random: {
            // Without --pf, route in proportion to capacity.
            const auto rates = derive_rates(q_fast, speed_ratio);
            return DispatchPolicy::random(has("p_fast") ? p_fast : rates.mu_fast * q_fast);
        }
    }
    throw ConfigError("unknown policy");
}

void apply_json(RunConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    auto num = [&](const char* key, double& dst) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
        dst = j[key].get<double>();
        c.given.insert(key);
    };
    auto integer = [&](const char* key, auto& dst) {
        if (!j.contains(key)) return;
        if (!j[key].is_number_integer()) throw ConfigError(std::string("config key '") + key + "' must be an integer");
        dst = j[key].get<std::remove_reference_t<decltype(dst)>>();
        c.given.insert(key);
    };
    num("lambda", c.lambda);
    num("q_fast", c.q_fast);
    num("speed_ratio", c.speed_ratio);
    num("p_fast", c.p_fast);
    num("p_slow", c.p_slow);
    if (j.contains("k")) {
        const auto& k = j["k"];
        if (k.is_string()) c.k = parse_k(k.get<std::string>());
        else if (k.is_number_integer()) c.k = parse_k(std::to_string(k.get<long long>()));
        else if (k.is_null()) c.k.reset();
        else throw ConfigError("config key 'k' must be an integer or \"inf\"");
        c.given.insert("k");
    }
    integer("d_fast", c.d_fast);
    integer("d_slow", c.d_slow);
    if (j.contains("d_fast") || j.contains("d_slow")) c.given.insert("d");
    if (j.contains("d") && !j["d"].is_null()) {
        c.d = j["d"].get<int>();
        c.given.insert("d");
    }
    if (j.contains("family")) {
        c.family = parse_family(j["family"].get<std::string>());
        c.given.insert("family");
    }
    if (j.contains("policy") && !j["policy"].is_null()) {
        c.policy = parse_policy_kind(j["policy"].get<std::string>());
        c.given.insert("policy");
    }
    if (j.contains("service_kind")) {
        std::optional<double> cv2;
        if (j.contains("service_cv2") && j["service_cv2"].is_number()) cv2 = j["service_cv2"].get<double>();
        c.service = service_from_json(j["service_kind"].get<std::string>(), cv2);
        c.given.insert("service");
    }
    if (j.contains("seed")) {
        c.seed = j["seed"].get<std::uint64_t>();
        c.given.insert("seed");
    }
    integer("arrivals", c.arrivals);
    if (j.contains("warmup") && !j["warmup"].is_null()) {
        c.warmup = j["warmup"].get<std::int64_t>();
        c.given.insert("warmup");
    }
    if (j.contains("lambdas")) {
        c.lambdas = j["lambdas"].get<std::vector<double>>();
        if (!c.lambdas.empty()) c.given.insert("lambdas");
    }
    integer("cap", c.cap);
    if (j.contains("given")) {
        // Manifests carry the explicit-key set so replays resolve recipe
        // defaults the same way.
        c.given.clear();
        for (const auto& g : j["given"]) c.given.insert(g.get<std::string>());
    }
}

nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["lambda"] = c.lambda;
    j["q_fast"] = c.q_fast;
    j["speed_ratio"] = c.speed_ratio;
    if (c.k) j["k"] = *c.k;
    else j["k"] = "inf";
    j["d_fast"] = c.d_fast;
    j["d_slow"] = c.d_slow;
    j["p_fast"] = c.p_fast;
    j["p_slow"] = c.p_slow;
    j["family"] = std::string(to_string(c.family));
    switch (c.service.kind()) {
        case ServiceKind::Exponential: j["service_kind"] = "exp"; break;
        case ServiceKind::Deterministic: j["service_kind"] = "det"; break;
        case ServiceKind::Erlang:
            j["service_kind"] = "erlang";
            j["service_cv2"] = 1.0 / c.service.erlang_stages();
            break;
        case ServiceKind::Hyperexponential2:
            j["service_kind"] = "hyper";
            j["service_cv2"] = c.service.scv();
            break;
    }
    if (c.policy) j["policy"] = std::string(to_string(*c.policy));
    if (c.d) j["d"] = *c.d;
    j["seed"] = c.seed;
    j["arrivals"] = c.arrivals;
    if (c.warmup) j["warmup"] = *c.warmup;
    j["lambdas"] = c.lambdas;
    j["cap"] = c.cap;
    j["given"] = std::vector<std::string>(c.given.begin(), c.given.end());
    return j;
}

void apply_d(RunConfig& c, const std::string& text) {
    const auto comma = text.find(',');
    auto parse = [&](const std::string& s) {
        const auto v = to_int("--d", s);
        if (v < 1) throw ConfigError("--d values must be >= 1, got '" + text + "'");
        return static_cast<int>(v);
    };
    if (comma == std::string::npos) {
        c.d = parse(text);
    } else {
        c.d_fast = parse(text.substr(0, comma));
        c.d_slow = parse(text.substr(comma + 1));
    }
    c.given.insert("d");
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(to_double("--lambdas", item));
    }
    if (out.empty()) throw ConfigError("--lambdas expects a comma-separated list");
    return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char ch = line[i];
            if (quoted) {
                if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') cell += '"', ++i;
                else if (ch == '"') quoted = false;
                else cell += ch;
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                cells.push_back(std::move(cell));
                cell.clear();
            } else {
                cell += ch;
            }
        }
        cells.push_back(std::move(cell));
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::string join_csv(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        const auto& c = cells[i];
        if (c.find_first_of(",\"\n") == std::string::npos) {
            out += c;
        } else {
            out += '"';
            for (char ch : c) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            out += '"';
        }
    }
    return out;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean-field load balancing for two-speed server farms"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Flags flags;
    std::string recipe, target;
    struct Sub {
        std::string name;
        CLI::App* app;
    };
    std::vector<Sub> subs;
    for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
             {"solve", "evaluate one policy (analytic, or exact chain when --k is finite)"},
             {"optimize", "grid-search (pF, pS) for a family"},
             {"heuristic", "compare the heuristic choice with the optimum"},
             {"simulate", "simulate a finite system"},
             {"experiment", "run a named sweep and write CSV/SVG files"}}) {
        auto* sub = app.add_subcommand(name, help);
        add_flags(sub, flags);
        if (name == "experiment") {
            std::string names;
            for (const auto& n : recipe_names()) names += (names.empty() ? "" : ", ") + n;
            sub->add_option("recipe", recipe, "one of: " + names)->required();
        }
        subs.push_back({name, sub});
    }
    auto* replay = app.add_subcommand("replay", "re-run a manifest and compare output hashes");
    replay->add_option("manifest", target, "manifest.json")->required();
    replay->add_option("--threads", flags.threads, "worker threads");
    auto* recheck = app.add_subcommand("recheck", "re-evaluate every row of a point CSV");
    recheck->add_option("csv", target, "CSV file")->required();
    recheck->add_option("--threads", flags.threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, eo;
        const int code = app.exit(e, o, eo);
        out << o.str();
        err << eo.str();
        return code == 0 ? 0 : 1;
    }

    try {
        const unsigned threads = flags.threads.empty() ? 0u : static_cast<unsigned>(to_int("--threads", flags.threads));
        if (replay->parsed()) return cmd_replay(target, threads, out);
        if (recheck->parsed()) {
            RunConfig c;
            c.threads = threads;
            return cmd_recheck(target, c, out);
        }
        for (const auto& s : subs) {
            if (!s.app->parsed()) continue;
            const RunConfig c = resolve(flags);
            if (s.name != "experiment" && c.lambda >= 1.0) {
                throw InfeasibleError("lambda >= 1 overloads the system (capacity is normalized to 1)");
            }
            if (s.name == "experiment") require_out(c, "experiment");
            return execute(s.name, recipe, c, out);
        }
        return 1;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << "error: bad config value: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace hetlb::cli

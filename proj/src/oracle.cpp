#include "hetlb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <Eigen/SparseLU>

#include "hetlb/errors.hpp"

namespace hetlb {

std::vector<int> CtmcSpec::decode(std::size_t state) const {
    std::vector<int> n(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        n[static_cast<std::size_t>(i)] = static_cast<int>(state % static_cast<std::size_t>(cap + 1));
        state /= static_cast<std::size_t>(cap + 1);
    }
    return n;
}

namespace {

struct QuerySet {
    std::vector<int> servers;
    double prob;
};

void combinations(int first, int count, int choose, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
    if (choose == 0) {
        out.push_back(cur);
        return;
    }
    for (int i = first; i <= first + count - choose; ++i) {
        cur.push_back(i);
        combinations(i + 1, first + count - i - 1, choose - 1, cur, out);
        cur.pop_back();
    }
}

std::vector<std::vector<int>> choose(int first, int count, int m) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    combinations(first, count, m, cur, out);
    return out;
}

// Every possible query set with its probability.
std::vector<QuerySet> query_sets(const SystemConfig& config, const DispatchPolicy& policy) {
    const int k = config.k();
    const int kf = config.k_fast();
    std::vector<QuerySet> out;
    switch (policy.kind) {
        case PolicyKind::JiqDfDs:
        case PolicyKind::JsqDfDs: {
            const auto fast = choose(0, kf, policy.d_fast);
            const auto slow = choose(kf, k - kf, policy.d_slow);
            const double p = 1.0 / static_cast<double>(fast.size() * slow.size());
            for (const auto& f : fast) {
                for (const auto& s : slow) {
                    QuerySet q{f, p};
                    q.servers.insert(q.servers.end(), s.begin(), s.end());
                    out.push_back(std::move(q));
                }
            }
            break;
        }
        case PolicyKind::JsqD:
        case PolicyKind::SedD: {
            const auto sets = choose(0, k, policy.d);
            for (const auto& s : sets) out.push_back({s, 1.0 / static_cast<double>(sets.size())});
            break;
        }
        case PolicyKind::WjsqD: {
            // Sequential draws proportional to speed among servers not yet drawn.
            std::map<std::vector<int>, double> sets;
            std::vector<int> cur;
            std::vector<bool> used(static_cast<std::size_t>(k), false);
            auto speed = [&](int i) { return i < kf ? config.mu_fast() : config.mu_slow(); };
            std::function<void(double)> rec = [&](double p) {
                if (static_cast<int>(cur.size()) == policy.d) {
                    auto key = cur;
                    std::sort(key.begin(), key.end());
                    sets[key] += p;
                    return;
                }
                double total = 0.0;
                for (int i = 0; i < k; ++i) {
                    if (!used[static_cast<std::size_t>(i)]) total += speed(i);
                }
                for (int i = 0; i < k; ++i) {
                    if (used[static_cast<std::size_t>(i)]) continue;
                    used[static_cast<std::size_t>(i)] = true;
                    cur.push_back(i);
                    rec(p * speed(i) / total);
                    cur.pop_back();
                    used[static_cast<std::size_t>(i)] = false;
                }
            };
            rec(1.0);
            for (auto& [s, p] : sets) out.push_back({s, p});
            break;
        }
        case PolicyKind::JiqGlobal:
        case PolicyKind::Random: {
            QuerySet all{{}, 1.0};
            for (int i = 0; i < k; ++i) all.servers.push_back(i);
            out.push_back(std::move(all));
            break;
        }
    }
    return out;
}

}  // namespace

CtmcSpec build_ctmc(const SystemConfig& config, const DispatchPolicy& policy, int cap,
                    const OracleOptions& options) {
    policy.validate(config);
    if (cap < 1) throw DomainError("cap must be >= 1");
    const int k = config.k();
    if (k > 8) throw StateSpaceTooLarge("the exact chain supports at most 8 servers");
    double states_d = std::pow(cap + 1.0, k);
    if (states_d > static_cast<double>(options.max_states)) {
        throw StateSpaceTooLarge("(cap + 1)^k = " + std::to_string(states_d) + " states exceeds the limit of " +
                                 std::to_string(options.max_states));
    }

    CtmcSpec spec;
    spec.k = k;
    spec.k_fast = config.k_fast();
    spec.cap = cap;
    spec.states = static_cast<std::size_t>(states_d);
    spec.arrival_rate = config.lambda() * k;
    spec.blocked_rate.assign(spec.states, 0.0);

    std::vector<std::size_t> stride(static_cast<std::size_t>(k));
    stride[0] = 1;
    for (int i = 1; i < k; ++i) {
        stride[static_cast<std::size_t>(i)] = stride[static_cast<std::size_t>(i - 1)] * static_cast<std::size_t>(cap + 1);
    }
    auto mu = [&](int i) { return i < spec.k_fast ? config.mu_fast() : config.mu_slow(); };

    const auto sets = query_sets(config, policy);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(spec.states * static_cast<std::size_t>(2 * k + 1));
    std::vector<QueriedServer> snapshot;
    std::vector<double> probs;
    std::vector<double> to_server(static_cast<std::size_t>(k));

    for (std::size_t s = 0; s < spec.states; ++s) {
        const auto n = spec.decode(s);
        std::fill(to_server.begin(), to_server.end(), 0.0);
        for (const auto& q : sets) {
            snapshot.clear();
            for (int i : q.servers) {
                snapshot.push_back({i, n[static_cast<std::size_t>(i)],
                                    i < spec.k_fast ? ServerClass::Fast : ServerClass::Slow});
            }
            probs.resize(snapshot.size());
            destination_probabilities(policy, config, snapshot, probs);
            for (std::size_t j = 0; j < snapshot.size(); ++j) {
                to_server[static_cast<std::size_t>(snapshot[j].index)] += q.prob * probs[j];
            }
        }
        double out_rate = 0.0;
        for (int i = 0; i < k; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const double arrival = spec.arrival_rate * to_server[ui];
            if (arrival > 0.0) {
                if (n[ui] < cap) {
                    triplets.emplace_back(static_cast<int>(s), static_cast<int>(s + stride[ui]), arrival);
                    out_rate += arrival;
                } else {
                    spec.blocked_rate[s] += arrival;
                }
            }
            if (n[ui] > 0) {
                triplets.emplace_back(static_cast<int>(s), static_cast<int>(s - stride[ui]), mu(i));
                out_rate += mu(i);
            }
        }
        triplets.emplace_back(static_cast<int>(s), static_cast<int>(s), -out_rate);
    }
    const auto dim = static_cast<Eigen::Index>(spec.states);
    spec.generator.resize(dim, dim);
    spec.generator.setFromTriplets(triplets.begin(), triplets.end());
    spec.generator.makeCompressed();
    return spec;
}

namespace {

double balance_residual(const CtmcSpec& spec, const std::vector<double>& pi) {
    double worst = 0.0;
    const auto& q = spec.generator;
    for (Eigen::Index j = 0; j < q.outerSize(); ++j) {
        double sum = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(q, j); it; ++it) {
            sum += pi[static_cast<std::size_t>(it.row())] * it.value();
        }
        worst = std::max(worst, std::abs(sum));
    }
    return worst;
}

std::vector<double> solve_direct(const CtmcSpec& spec) {
    // pi Q = 0 with the last balance equation replaced by sum(pi) = 1.
    const auto n = static_cast<Eigen::Index>(spec.states);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(spec.generator.nonZeros() + n));
    for (Eigen::Index j = 0; j < spec.generator.outerSize(); ++j) {
        if (j == n - 1) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(spec.generator, j); it; ++it) {
            triplets.emplace_back(static_cast<int>(j), static_cast<int>(it.row()), it.value());
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(static_cast<int>(n - 1), static_cast<int>(i), 1.0);
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw Error("sparse LU factorization of the generator failed");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    const Eigen::VectorXd x = lu.solve(b);
    std::vector<double> pi(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pi[static_cast<std::size_t>(i)] = std::max(0.0, x(i));
    return pi;
}

std::vector<double> solve_gauss_seidel(const CtmcSpec& spec, const OracleOptions& options, int* sweeps) {
    const auto& q = spec.generator;
    std::vector<double> pi(spec.states, 1.0 / static_cast<double>(spec.states));
    std::vector<double> diag(spec.states, 0.0);
    for (Eigen::Index j = 0; j < q.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(q, j); it; ++it) {
            if (it.row() == j) diag[static_cast<std::size_t>(j)] = -it.value();
        }
    }
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        double change = 0.0;
        double top = 0.0;
        for (Eigen::Index j = 0; j < q.outerSize(); ++j) {
            const auto uj = static_cast<std::size_t>(j);
            double inflow = 0.0;
            for (Eigen::SparseMatrix<double>::InnerIterator it(q, j); it; ++it) {
                if (it.row() != j) inflow += pi[static_cast<std::size_t>(it.row())] * it.value();
            }
            const double next = diag[uj] > 0.0 ? inflow / diag[uj] : pi[uj];
            change = std::max(change, std::abs(next - pi[uj]));
            top = std::max(top, next);
            pi[uj] = next;
        }
        double total = 0.0;
        for (double v : pi) total += v;
        for (double& v : pi) v /= total;
        if (change <= options.tolerance * top) {
            *sweeps = sweep;
            return pi;
        }
    }
    throw Error("Gauss-Seidel did not converge within " + std::to_string(options.max_sweeps) + " sweeps");
}

}  // namespace

std::vector<double> stationary_distribution(const CtmcSpec& spec, const OracleOptions& options,
                                            StationaryInfo* info) {
    StationaryInfo local;
    std::vector<double> pi;
    if (spec.states <= options.direct_limit) {
        local.direct = true;
        pi = solve_direct(spec);
    } else {
        pi = solve_gauss_seidel(spec, options, &local.sweeps);
    }
    double total = 0.0;
    for (double v : pi) total += v;
    for (double& v : pi) v /= total;
    local.residual = balance_residual(spec, pi);
    if (info) *info = local;
    return pi;
}

ExactMetrics exact_metrics(const SystemConfig& config, const DispatchPolicy& policy, int cap,
                           const OracleOptions& options) {
    const CtmcSpec spec = build_ctmc(config, policy, cap, options);
    ExactMetrics m;
    const auto pi = stationary_distribution(spec, options, &m.solve);
    m.states = spec.states;
    m.cap = cap;
    m.pmf_fast.assign(static_cast<std::size_t>(cap + 1), 0.0);
    m.pmf_slow.assign(static_cast<std::size_t>(cap + 1), 0.0);
    const int kf = spec.k_fast;
    const int ks = spec.k - kf;
    double blocked = 0.0;
    for (std::size_t s = 0; s < spec.states; ++s) {
        const double p = pi[s];
        if (p == 0.0) continue;
        const auto n = spec.decode(s);
        bool at_cap = false;
        for (int i = 0; i < spec.k; ++i) {
            const int ni = n[static_cast<std::size_t>(i)];
            m.mean_jobs += p * ni;
            at_cap = at_cap || ni == cap;
            auto& pmf = i < kf ? m.pmf_fast : m.pmf_slow;
            pmf[static_cast<std::size_t>(ni)] += p / (i < kf ? kf : ks);
        }
        if (at_cap) m.cap_mass += p;
        blocked += p * spec.blocked_rate[s];
    }
    m.blocking = blocked / spec.arrival_rate;
    m.busy_fast = 1.0 - m.pmf_fast[0];
    m.busy_slow = 1.0 - m.pmf_slow[0];
    m.mean_response = m.mean_jobs / (spec.arrival_rate - blocked);
    if (m.cap_mass >= options.truncation_limit) {
        throw TruncationTooSmall("probability mass at the cap is " + std::to_string(m.cap_mass) +
                                 " >= " + std::to_string(options.truncation_limit) + "; raise cap above " +
                                 std::to_string(cap));
    }
    return m;
}

ExactMetrics exact_metrics(const SystemConfig& config, const PolicyParams& policy, int cap,
                           const OracleOptions& options) {
    return exact_metrics(config, DispatchPolicy::from_params(policy), cap, options);
}

}  // namespace hetlb

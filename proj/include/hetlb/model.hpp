#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace hetlb {

// Service rates (mu_fast, mu_slow) normalized so that
// mu_fast * q_fast + mu_slow * (1 - q_fast) = 1, with mu_fast = r * mu_slow.
struct ServiceRates {
    double mu_fast;
    double mu_slow;
};

ServiceRates derive_rates(double q_fast, double speed_ratio);

// Two-speed server farm. Per-server arrival intensity lambda (the system sees
// lambda * k), a fraction q_fast of fast servers, and speed ratio r = muF / muS.
// num_servers == nullopt selects the k -> infinity (mean-field) regime.
class SystemConfig {
public:
    static SystemConfig create(double lambda, double q_fast, double speed_ratio,
                               std::optional<int> num_servers = std::nullopt);

    double lambda() const { return lambda_; }
    double q_fast() const { return q_fast_; }
    double q_slow() const { return 1.0 - q_fast_; }
    double speed_ratio() const { return speed_ratio_; }
    double mu_fast() const { return mu_fast_; }
    double mu_slow() const { return mu_slow_; }

    std::optional<int> num_servers() const { return num_servers_; }
    bool is_finite() const { return num_servers_.has_value(); }
    // Requires a finite config.
    int k() const;
    int k_fast() const;
    int k_slow() const;

    SystemConfig with_lambda(double lambda) const;
    SystemConfig with_servers(std::optional<int> num_servers) const;

    // Throws DomainError unless 0 < lambda < 1.
    void require_stable_load() const;

private:
    SystemConfig() = default;

    double lambda_ = 0.0;
    double q_fast_ = 0.0;
    double speed_ratio_ = 1.0;
    double mu_fast_ = 1.0;
    double mu_slow_ = 1.0;
    std::optional<int> num_servers_;
    int k_fast_ = 0;
};

enum class Family { JIQ, JSQ };

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

// A member of JIQ-(dF,dS) or JSQ-(dF,dS).
struct PolicyParams {
    int d_fast = 2;
    int d_slow = 2;
    double p_fast = 1.0;  // queue at a fast server when all queried are busy
    double p_slow = 1.0;  // use an idle slow server when all queried fast are busy
    Family family = Family::JIQ;

    // Range checks; when config is finite also requires d_fast <= kF, d_slow <= kS.
    void validate(const SystemConfig& config) const;
};

enum class ServiceKind { Exponential, Deterministic, Erlang, Hyperexponential2 };

// Service-time law. Fast and slow classes share the shape and differ only in
// mean, so the squared coefficient of variation is class-independent.
class ServiceDistribution {
public:
    static ServiceDistribution exponential(double mean = 1.0);
    static ServiceDistribution deterministic(double mean = 1.0);
    static ServiceDistribution erlang(int stages, double mean = 1.0);
    // Two-branch hyperexponential with balanced means, cv2 > 1.
    static ServiceDistribution hyperexponential(double cv2, double mean = 1.0);

    // Parses "exp", "det", "erlang:K", "hyper:CV2".
    static ServiceDistribution parse(std::string_view text);
    std::string to_string() const;

    ServiceKind kind() const { return kind_; }
    double mean() const { return mean_; }
    int erlang_stages() const { return stages_; }
    double scv() const;
    double second_moment() const;

    ServiceDistribution with_mean(double mean) const;

    // Branch probability and rates of the balanced-means H2 representation.
    struct H2Branches {
        double p1, rate1, rate2;
    };
    H2Branches h2_branches() const;

    bool operator==(const ServiceDistribution&) const = default;

private:
    ServiceDistribution(ServiceKind kind, double mean, int stages, double cv2);

    ServiceKind kind_;
    double mean_;
    int stages_;
    double cv2_;
};

}  // namespace hetlb

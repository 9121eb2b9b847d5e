#include "hetlb/model.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "hetlb/errors.hpp"

namespace hetlb {

ServiceRates derive_rates(double q_fast, double speed_ratio) {
    if (!(q_fast > 0.0 && q_fast < 1.0)) {
        throw DomainError("q_fast must lie in (0,1)");
    }
    if (!(speed_ratio >= 1.0) || !std::isfinite(speed_ratio)) {
        throw DomainError("speed_ratio must be >= 1");
    }
    const double mu_slow = 1.0 / (q_fast * speed_ratio + 1.0 - q_fast);
    return {speed_ratio * mu_slow, mu_slow};
}

SystemConfig SystemConfig::create(double lambda, double q_fast, double speed_ratio,
                                  std::optional<int> num_servers) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw DomainError("lambda must be positive");
    }
    const auto rates = derive_rates(q_fast, speed_ratio);
    SystemConfig c;
    c.lambda_ = lambda;
    c.q_fast_ = q_fast;
    c.speed_ratio_ = speed_ratio;
    c.mu_fast_ = rates.mu_fast;
    c.mu_slow_ = rates.mu_slow;
    c.num_servers_ = num_servers;
    if (num_servers) {
        if (*num_servers < 2) {
            throw ConfigError("k must be at least 2 (one server of each class)");
        }
        const double kf = q_fast * *num_servers;
        const double rounded = std::round(kf);
        if (std::abs(kf - rounded) > 1e-9 * std::max(1.0, kf)) {
            std::ostringstream msg;
            msg << "q_fast * k = " << kf << " is not an integer";
            throw ConfigError(msg.str());
        }
        c.k_fast_ = static_cast<int>(rounded);
        if (c.k_fast_ < 1 || c.k_fast_ >= *num_servers) {
            throw ConfigError("need at least one fast and one slow server");
        }
    }
    return c;
}

int SystemConfig::k() const {
    if (!num_servers_) throw ConfigError("config has infinitely many servers");
    return *num_servers_;
}

int SystemConfig::k_fast() const {
    k();
    return k_fast_;
}

int SystemConfig::k_slow() const { return k() - k_fast_; }

SystemConfig SystemConfig::with_lambda(double lambda) const {
    return create(lambda, q_fast_, speed_ratio_, num_servers_);
}

SystemConfig SystemConfig::with_servers(std::optional<int> num_servers) const {
    return create(lambda_, q_fast_, speed_ratio_, num_servers);
}

void SystemConfig::require_stable_load() const {
    if (!(lambda_ < 1.0)) {
        throw DomainError("lambda must be < 1 (total capacity is normalized to 1)");
    }
}

std::string_view to_string(Family family) {
    return family == Family::JIQ ? "jiq" : "jsq";
}

Family parse_family(std::string_view text) {
    if (text == "jiq" || text == "JIQ") return Family::JIQ;
    if (text == "jsq" || text == "JSQ") return Family::JSQ;
    throw ConfigError("unknown family '" + std::string(text) + "' (expected jiq or jsq)");
}

void PolicyParams::validate(const SystemConfig& config) const {
    if (d_fast < 1 || d_slow < 1) throw DomainError("d_fast and d_slow must be >= 1");
    if (!(p_fast >= 0.0 && p_fast <= 1.0)) throw DomainError("p_fast must lie in [0,1]");
    if (!(p_slow >= 0.0 && p_slow <= 1.0)) throw DomainError("p_slow must lie in [0,1]");
    if (config.is_finite()) {
        if (d_fast > config.k_fast() || d_slow > config.k_slow()) {
            throw ConfigError("d exceeds class size (servers are queried without replacement)");
        }
    }
}

ServiceDistribution::ServiceDistribution(ServiceKind kind, double mean, int stages, double cv2)
    : kind_(kind), mean_(mean), stages_(stages), cv2_(cv2) {
    if (!(mean > 0.0) || !std::isfinite(mean)) throw DomainError("service mean must be positive");
}

ServiceDistribution ServiceDistribution::exponential(double mean) {
    return {ServiceKind::Exponential, mean, 1, 1.0};
}

ServiceDistribution ServiceDistribution::deterministic(double mean) {
    return {ServiceKind::Deterministic, mean, 0, 0.0};
}

ServiceDistribution ServiceDistribution::erlang(int stages, double mean) {
    if (stages < 1) throw DomainError("Erlang stage count must be >= 1");
    return {ServiceKind::Erlang, mean, stages, 1.0 / stages};
}

ServiceDistribution ServiceDistribution::hyperexponential(double cv2, double mean) {
    if (!(cv2 > 1.0) || !std::isfinite(cv2)) throw DomainError("hyperexponential needs cv2 > 1");
    return {ServiceKind::Hyperexponential2, mean, 2, cv2};
}

namespace {

double parse_number(std::string_view text, std::string_view what) {
    try {
        std::size_t used = 0;
        const std::string s(text);
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    }
}

}  // namespace

ServiceDistribution ServiceDistribution::parse(std::string_view text) {
    if (text == "exp" || text == "exponential") return exponential();
    if (text == "det" || text == "deterministic") return deterministic();
    const auto colon = text.find(':');
    if (colon != std::string_view::npos) {
        const auto head = text.substr(0, colon);
        const auto arg = text.substr(colon + 1);
        if (head == "erlang") {
            int stages = 0;
            auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), stages);
            if (ec != std::errc{} || ptr != arg.data() + arg.size()) {
                throw ConfigError("cannot parse Erlang stage count from '" + std::string(arg) + "'");
            }
            return erlang(stages);
        }
        if (head == "hyper") return hyperexponential(parse_number(arg, "cv2"));
    }
    throw ConfigError("unknown service '" + std::string(text) +
                      "' (expected exp, det, erlang:K or hyper:CV2)");
}

std::string ServiceDistribution::to_string() const {
    switch (kind_) {
        case ServiceKind::Exponential: return "exp";
        case ServiceKind::Deterministic: return "det";
        case ServiceKind::Erlang: return "erlang:" + std::to_string(stages_);
        case ServiceKind::Hyperexponential2: {
            std::ostringstream out;
            out.precision(17);
            out << "hyper:" << cv2_;
            return out.str();
        }
    }
    return "?";
}

double ServiceDistribution::scv() const { return cv2_; }

double ServiceDistribution::second_moment() const {
    switch (kind_) {
        case ServiceKind::Exponential: return 2.0 * mean_ * mean_;
        case ServiceKind::Deterministic: return mean_ * mean_;
        case ServiceKind::Erlang: return (stages_ + 1.0) / stages_ * mean_ * mean_;
        case ServiceKind::Hyperexponential2: return (1.0 + cv2_) * mean_ * mean_;
    }
    return 0.0;
}

ServiceDistribution ServiceDistribution::with_mean(double mean) const {
    return {kind_, mean, stages_, cv2_};
}

ServiceDistribution::H2Branches ServiceDistribution::h2_branches() const {
    // Balanced means: p1 / rate1 = p2 / rate2 = mean / 2.
    const double p1 = 0.5 * (1.0 + std::sqrt((cv2_ - 1.0) / (cv2_ + 1.0)));
    return {p1, 2.0 * p1 / mean_, 2.0 * (1.0 - p1) / mean_};
}

}  // namespace hetlb

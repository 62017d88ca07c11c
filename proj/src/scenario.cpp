#include "knnids/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "knnids/error.hpp"

namespace knnids::streams {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidSpec(msg);
}

void require_len(const std::vector<double>& v, std::size_t d, const std::string& what) {
    require(v.size() == d, what + " has " + std::to_string(v.size()) + " entries, expected d=" + std::to_string(d));
}

void require_finite(const std::vector<double>& v, const std::string& what) {
    for (double x : v) require(std::isfinite(x), what + " contains a non-finite value");
}

double poisson_count(double mean, std::mt19937_64& rng) {
    if (!(mean > 0.0)) return 0.0;
    std::poisson_distribution<long long> pois(mean);
    return static_cast<double>(pois(rng));
}

struct Drawer {
    std::size_t d;
    std::mt19937_64& rng;

    std::vector<double> operator()(const UniformBox& g) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> v(d);
        for (std::size_t n = 0; n < d; ++n) v[n] = g.lo[n] + (g.hi[n] - g.lo[n]) * u(rng);
        return v;
    }

    std::vector<double> operator()(const GaussianMixture& g) const {
        std::vector<double> w;
        w.reserve(g.components.size());
        for (const auto& c : g.components) w.push_back(c.weight);
        std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
        const auto& c = g.components[pick(rng)];
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> v(d);
        for (std::size_t n = 0; n < d; ++n) v[n] = c.mean[n] + c.stddev[n] * z(rng);
        return v;
    }

    std::vector<double> operator()(const NegativeBinomialRates& g) const {
        std::vector<double> v(d);
        if (g.shared_intensity) {
            std::gamma_distribution<double> gam(g.r.front(), 1.0);
            const double shared = gam(rng);
            for (std::size_t n = 0; n < d; ++n) v[n] = poisson_count(shared * (1.0 - g.p[n]) / g.p[n], rng);
        } else {
            for (std::size_t n = 0; n < d; ++n) {
                std::gamma_distribution<double> gam(g.r[n], (1.0 - g.p[n]) / g.p[n]);
                v[n] = poisson_count(g.p[n] < 1.0 ? gam(rng) : 0.0, rng);
            }
        }
        return v;
    }

    std::vector<double> operator()(const GaussianRates& g) const {
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> v(d);
        for (std::size_t n = 0; n < d; ++n) v[n] = std::max(0.0, std::round(g.mean[n] + g.stddev[n] * z(rng)));
        return v;
    }
};

struct Validator {
    std::size_t d;

    void operator()(const UniformBox& g) const {
        require_len(g.lo, d, "uniform_box.lo");
        require_len(g.hi, d, "uniform_box.hi");
        require_finite(g.lo, "uniform_box.lo");
        require_finite(g.hi, "uniform_box.hi");
        for (std::size_t n = 0; n < d; ++n) require(g.lo[n] < g.hi[n], "uniform_box: lo must be < hi");
    }

    void operator()(const GaussianMixture& g) const {
        require(!g.components.empty(), "gaussian_mixture: no components");
        double total = 0.0;
        for (const auto& c : g.components) {
            require(c.weight >= 0.0 && std::isfinite(c.weight), "gaussian_mixture: weights must be >= 0");
            require_len(c.mean, d, "gaussian_mixture.mean");
            require_len(c.stddev, d, "gaussian_mixture.stddev");
            require_finite(c.mean, "gaussian_mixture.mean");
            require_finite(c.stddev, "gaussian_mixture.stddev");
            for (double sd : c.stddev) require(sd > 0.0, "gaussian_mixture: stddev must be > 0");
            total += c.weight;
        }
        require(std::abs(total - 1.0) <= 1e-9, "gaussian_mixture: weights sum to " + std::to_string(total));
    }

    void operator()(const NegativeBinomialRates& g) const {
        require_len(g.r, d, "negative_binomial_rates.r");
        require_len(g.p, d, "negative_binomial_rates.p");
        for (std::size_t n = 0; n < d; ++n) {
            require(g.r[n] > 0.0 && std::isfinite(g.r[n]), "negative_binomial_rates: r must be > 0");
            require(g.p[n] > 0.0 && g.p[n] <= 1.0, "negative_binomial_rates: p must lie in (0,1]");
        }
        if (g.shared_intensity) {
            for (double r : g.r) require(r == g.r.front(), "negative_binomial_rates: shared_intensity needs equal r");
        }
    }

    void operator()(const GaussianRates& g) const {
        require_len(g.mean, d, "gaussian_rates.mean");
        require_len(g.stddev, d, "gaussian_rates.stddev");
        require_finite(g.mean, "gaussian_rates.mean");
        require_finite(g.stddev, "gaussian_rates.stddev");
        for (double sd : g.stddev) require(sd >= 0.0, "gaussian_rates: stddev must be >= 0");
    }
};

struct MeanOf {
    std::size_t d;

    std::vector<double> operator()(const UniformBox& g) const {
        std::vector<double> m(d);
        for (std::size_t n = 0; n < d; ++n) m[n] = 0.5 * (g.lo[n] + g.hi[n]);
        return m;
    }
    std::vector<double> operator()(const GaussianMixture& g) const {
        std::vector<double> m(d, 0.0);
        for (const auto& c : g.components) {
            for (std::size_t n = 0; n < d; ++n) m[n] += c.weight * c.mean[n];
        }
        return m;
    }
    std::vector<double> operator()(const NegativeBinomialRates& g) const {
        std::vector<double> m(d);
        for (std::size_t n = 0; n < d; ++n) m[n] = g.r[n] * (1.0 - g.p[n]) / g.p[n];
        return m;
    }
    std::vector<double> operator()(const GaussianRates& g) const { return g.mean; }
};

template <class T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw InvalidSpec(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidSpec(where + "." + key + ": " + e.what());
    }
}

}  // namespace

void validate_generator(const Generator& g, std::size_t d) {
    require(d >= 1, "d must be >= 1");
    std::visit(Validator{d}, g);
}

void ScenarioSpec::validate() const {
    validate_generator(generator, d);
    require(horizon >= 1, "horizon must be >= 1");
    if (attack) {
        const auto& a = *attack;
        require(!a.target_dims.empty(), "attack.target_dims is empty");
        std::set<std::size_t> seen;
        for (auto n : a.target_dims) {
            require(n < d, "attack.target_dims entry " + std::to_string(n) + " out of range for d=" + std::to_string(d));
            require(seen.insert(n).second, "attack.target_dims has duplicate " + std::to_string(n));
        }
        require(a.start >= 1 && a.start <= a.end && a.end <= horizon,
                "attack.window [" + std::to_string(a.start) + ", " + std::to_string(a.end) +
                    "] must satisfy 1 <= start <= end <= horizon=" + std::to_string(horizon));
        require(a.magnitude >= 0.0 && std::isfinite(a.magnitude), "attack.magnitude must be >= 0");
    }
}

GroundTruth::GroundTruth(std::size_t d, core::Tick horizon, const std::optional<AttackSpec>& attack)
    : d_(d), horizon_(horizon), cells_(static_cast<std::size_t>(horizon) * d, 0) {
    if (!attack) return;
    targets_ = attack->target_dims;
    for (core::Tick t = attack->start; t <= attack->end; ++t) {
        for (auto n : targets_) cells_[static_cast<std::size_t>(t - 1) * d_ + n] = 1;
    }
}

bool GroundTruth::attacked(core::Tick t, std::size_t dim) const {
    if (t < 1 || t > horizon_ || dim >= d_) return false;
    return cells_[static_cast<std::size_t>(t - 1) * d_ + dim] != 0;
}

bool GroundTruth::tick_attacked(core::Tick t) const {
    for (std::size_t n = 0; n < d_; ++n) {
        if (attacked(t, n)) return true;
    }
    return false;
}

std::vector<double> draw(const Generator& g, std::size_t d, std::mt19937_64& rng) {
    return std::visit(Drawer{d, rng}, g);
}

std::vector<double> nominal_means(const Generator& g, std::size_t d) { return std::visit(MeanOf{d}, g); }

Scenario generate(const ScenarioSpec& spec) {
    spec.validate();
    Scenario out;
    out.truth = GroundTruth(spec.d, spec.horizon, spec.attack);
    out.stream.reserve(static_cast<std::size_t>(spec.horizon));

    std::mt19937_64 rng(spec.seed);
    for (core::Tick t = 1; t <= spec.horizon; ++t) {
        out.stream.push_back({draw(spec.generator, spec.d, rng), t, spec.source_id});
    }
    if (!spec.attack) return out;

    const auto& a = *spec.attack;
    std::mt19937_64 attack_rng(core::derive_seed(spec.seed, 1));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto means = nominal_means(spec.generator, spec.d);
    for (core::Tick t = a.start; t <= a.end; ++t) {
        auto& values = out.stream[static_cast<std::size_t>(t - 1)].values;
        for (auto n : a.target_dims) {
            const double draw01 = u(attack_rng);
            if (a.kind == AttackKind::fdi_uniform) {
                values[n] += a.magnitude * std::abs(values[n]) * (2.0 * draw01 - 1.0);
            } else {
                values[n] += std::round(2.0 * a.magnitude * means[n] * draw01);
            }
        }
    }
    return out;
}

Generator generator_from_json(const json& j, std::size_t d, const std::string& where) {
    const auto type = field<std::string>(j, "type", where);
    Generator g;
    if (type == "uniform_box") {
        g = UniformBox{field<std::vector<double>>(j, "lo", where), field<std::vector<double>>(j, "hi", where)};
    } else if (type == "gaussian_mixture") {
        GaussianMixture gm;
        const auto comps = field<json>(j, "components", where);
        if (!comps.is_array()) throw InvalidSpec(where + ".components: expected an array");
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const auto w = where + ".components[" + std::to_string(i) + "]";
            gm.components.push_back({field<double>(comps[i], "weight", w), field<std::vector<double>>(comps[i], "mean", w),
                                     field<std::vector<double>>(comps[i], "stddev", w)});
        }
        g = std::move(gm);
    } else if (type == "negative_binomial_rates") {
        g = NegativeBinomialRates{field<std::vector<double>>(j, "r", where), field<std::vector<double>>(j, "p", where),
                                  j.value("shared_intensity", false)};
    } else if (type == "gaussian_rates") {
        g = GaussianRates{field<std::vector<double>>(j, "mean", where), field<std::vector<double>>(j, "stddev", where)};
    } else {
        throw InvalidSpec(where + ".type: unknown generator '" + type + "'");
    }
    try {
        validate_generator(g, d);
    } catch (const InvalidSpec& e) {
        throw InvalidSpec(where + ": " + e.what());
    }
    return g;
}

AttackSpec attack_from_json(const json& j, const std::string& where) {
    AttackSpec a;
    const auto kind = field<std::string>(j, "kind", where);
    if (kind == "fdi_uniform") {
        a.kind = AttackKind::fdi_uniform;
    } else if (kind == "ddos_rate_increase") {
        a.kind = AttackKind::ddos_rate_increase;
    } else {
        throw InvalidSpec(where + ".kind: unknown attack kind '" + kind + "'");
    }
    a.target_dims = field<std::vector<std::size_t>>(j, "target_dims", where);
    const auto window = field<std::vector<core::Tick>>(j, "window", where);
    if (window.size() != 2) throw InvalidSpec(where + ".window: expected [start, end]");
    a.start = window[0];
    a.end = window[1];
    a.magnitude = field<double>(j, "magnitude", where);
    return a;
}

ScenarioSpec scenario_from_json(const json& j, const std::string& where) {
    ScenarioSpec s;
    s.d = field<std::size_t>(j, "d", where);
    s.generator = generator_from_json(field<json>(j, "generator", where), s.d, where + ".generator");
    s.horizon = field<core::Tick>(j, "horizon", where);
    s.seed = field<std::uint64_t>(j, "seed", where);
    s.source_id = j.value("source_id", std::string("sim"));
    if (j.contains("attack") && !j.at("attack").is_null()) {
        s.attack = attack_from_json(j.at("attack"), where + ".attack");
    }
    try {
        s.validate();
    } catch (const InvalidSpec& e) {
        throw InvalidSpec(where + ": " + e.what());
    }
    return s;
}

namespace {

struct ToJson {
    json operator()(const UniformBox& g) const { return {{"type", "uniform_box"}, {"lo", g.lo}, {"hi", g.hi}}; }
    json operator()(const GaussianMixture& g) const {
        json comps = json::array();
        for (const auto& c : g.components) {
            comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"stddev", c.stddev}});
        }
        return {{"type", "gaussian_mixture"}, {"components", comps}};
    }
    json operator()(const NegativeBinomialRates& g) const {
        return {{"type", "negative_binomial_rates"}, {"r", g.r}, {"p", g.p}, {"shared_intensity", g.shared_intensity}};
    }
    json operator()(const GaussianRates& g) const {
        return {{"type", "gaussian_rates"}, {"mean", g.mean}, {"stddev", g.stddev}};
    }
};

}  // namespace

json to_json(const Generator& g) { return std::visit(ToJson{}, g); }

json to_json(const AttackSpec& a) {
    return {{"kind", a.kind == AttackKind::fdi_uniform ? "fdi_uniform" : "ddos_rate_increase"},
            {"target_dims", a.target_dims},
            {"window", {a.start, a.end}},
            {"magnitude", a.magnitude}};
}

json to_json(const ScenarioSpec& s) {
    json j{{"generator", to_json(s.generator)}, {"d", s.d},     {"horizon", s.horizon},
           {"seed", s.seed},                    {"source_id", s.source_id}};
    j["attack"] = s.attack ? to_json(*s.attack) : json(nullptr);
    return j;
}

}  // namespace knnids::streams

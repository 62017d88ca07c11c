#include "knnids/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <regex>
#include <sstream>

#include "knnids/baselines.hpp"
#include "knnids/calibrate.hpp"
#include "knnids/error.hpp"
#include "knnids/io.hpp"
#include "knnids/model_io.hpp"

namespace knnids::bench {

namespace {

using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw InvalidSpec(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidSpec(where + "." + key + ": " + e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    return get<T>(j, key, where);
}

void check_name(const std::string& name, const std::string& where) {
    static const std::regex ok("[A-Za-z0-9_.-]+");
    if (!std::regex_match(name, ok)) throw InvalidSpec(where + ".name: '" + name + "' must match [A-Za-z0-9_.-]+");
}

detector::Hyperparams params_from_json(const json& j, const std::string& where) {
    detector::Hyperparams p;
    p.k = get<std::size_t>(j, "k", where);
    p.s = get<std::size_t>(j, "s", where);
    p.gamma = get<double>(j, "gamma", where);
    p.alpha = get<double>(j, "alpha", where);
    p.h = get_or<double>(j, "h", 1.0, where);
    try {
        p.validate();
    } catch (const InvalidSpec& e) {
        throw InvalidSpec(where + ": " + e.what());
    }
    return p;
}

// Per-trial statistic path for one method, plus per-dimension contributions for knn.
struct TrialPath {
    std::vector<double> stat;
    std::vector<std::vector<double>> per_dim;
};

struct Trained {
    std::optional<detector::TrainedModel> knn;
    std::optional<baselines::GaussianCusumSpec> gcusum;
    double omega0 = kNaN;
};

TrialPath knn_path(const std::vector<core::DataInstance>& stream, const detector::TrainedModel& model, bool keep_dims) {
    TrialPath p;
    p.stat.reserve(stream.size());
    std::vector<double> x(model.d);
    double s = 0.0;
    for (const auto& raw : stream) {
        core::normalize_into(raw.values, model.bounds, x);
        auto ev = detector::evidence(x, model);
        s = std::max(s + ev.D, 0.0);
        p.stat.push_back(s);
        if (keep_dims) p.per_dim.push_back(std::move(ev.per_dim));
    }
    return p;
}

TrialPath method_path(const std::string& method, const std::vector<core::DataInstance>& stream, const Trained& tr,
                      bool keep_dims) {
    if (method == "knn") return knn_path(stream, *tr.knn, keep_dims);
    if (method == "gcusum") return {baselines::gcusum_path(stream, *tr.gcusum), {}};
    return {baselines::total_rate_path(stream), {}};
}

std::vector<core::DataInstance> nominal_stream(const ScenarioConfig& sc, core::Tick horizon, std::uint64_t seed) {
    streams::ScenarioSpec spec;
    spec.generator = sc.nominal;
    spec.d = sc.d;
    spec.horizon = horizon;
    spec.seed = seed;
    spec.source_id = sc.name;
    return streams::generate(spec).stream;
}

std::vector<core::DataInstance> attacked_stream(const ScenarioConfig& sc, std::uint64_t seed) {
    streams::ScenarioSpec spec;
    spec.generator = sc.nominal;
    spec.d = sc.d;
    spec.horizon = sc.horizon;
    spec.attack = sc.attack;
    spec.seed = seed;
    spec.source_id = sc.name;
    return streams::generate(spec).stream;
}

Trained train_methods(const ScenarioConfig& sc, const BenchConfig& cfg, std::uint64_t scenario_seed) {
    Trained tr;
    bool need_knn = false, need_gcusum = false;
    for (const auto& m : cfg.methods) {
        need_knn = need_knn || m.name == "knn";
        need_gcusum = need_gcusum || m.name == "gcusum";
    }
    if (!need_knn && !need_gcusum) return tr;
    std::vector<core::DataInstance> training;
    if (sc.training.n > 0) training = nominal_stream(sc, sc.training.n, core::derive_seed(scenario_seed, 0));
    if (need_knn) {
        if (sc.training.model_path) {
            tr.knn = streams::load_model(*sc.training.model_path).model;
            if (tr.knn->d != sc.d) throw DimensionMismatch("scenario '" + sc.name + "': model dimension differs from d");
        } else {
            tr.knn = detector::fit(training, sc.training.params, sc.training.ratio, core::derive_seed(scenario_seed, 1));
        }
        try {
            tr.omega0 = calibrate::solve_omega0(*tr.knn).omega0;
        } catch (const CalibrationError&) {
            tr.omega0 = kNaN;
        }
    }
    if (need_gcusum) {
        if (!sc.attack) throw InvalidSpec("scenario '" + sc.name + "': gcusum needs an attack to know its parameters");
        const auto means = streams::nominal_means(sc.nominal, sc.d);
        tr.gcusum = baselines::informed_gcusum(training, *sc.attack, means, 1.0);
    }
    return tr;
}

double peak(const std::vector<double>& path) {
    return path.empty() ? -std::numeric_limits<double>::infinity() : *std::max_element(path.begin(), path.end());
}

BenchResult evaluate(const MethodConfig& m, const ScenarioConfig& sc, const BenchConfig& cfg, double thr,
                     double target_far, const std::vector<double>& far_peaks, const std::vector<TrialPath>& attack_paths,
                     double omega0) {
    BenchResult r;
    r.method = m.name;
    r.scenario = sc.name;
    r.threshold = thr;
    r.target_far = target_far;
    r.far_trials = far_peaks.size();
    r.far_window = cfg.far_window;
    const auto far_alarms = std::count_if(far_peaks.begin(), far_peaks.end(), [&](double p) { return p >= thr; });
    r.empirical_far = far_peaks.empty() ? 0.0 : static_cast<double>(far_alarms) / static_cast<double>(far_peaks.size());
    r.far_bound = m.name == "knn" && std::isfinite(omega0) ? std::exp(-omega0 * thr) : kNaN;

    r.trials = attack_paths.size();
    r.avg_detection_delay = kNaN;
    if (!sc.attack || attack_paths.empty()) {
        r.miss_rate = kNaN;
        r.pre_alarm_rate = kNaN;
        return r;
    }
    const auto& a = *sc.attack;
    const core::Tick last = a.end + cfg.grace.value_or(a.length());
    std::uint64_t delay_sum = 0;
    std::size_t pre = 0;
    std::vector<localize::LabelledContributions> located;
    for (const auto& p : attack_paths) {
        const auto T = first_crossing(p.stat, thr);
        if (!T) continue;
        if (*T < a.start) {
            ++pre;
            continue;
        }
        if (*T > last) continue;
        ++r.detected;
        delay_sum += *T - a.start;
        if (!p.per_dim.empty()) {
            core::Tick q = 0;
            for (core::Tick t = *T - 1; t >= 1; --t) {
                if (p.stat[t - 1] == 0.0) {
                    q = t;
                    break;
                }
            }
            std::vector<double> mean(p.per_dim.front().size(), 0.0);
            for (core::Tick t = q + 1; t <= *T; ++t) {
                for (std::size_t n = 0; n < mean.size(); ++n) mean[n] += p.per_dim[t - 1][n];
            }
            for (auto& v : mean) v /= static_cast<double>(*T - q);
            located.push_back({std::move(mean), a.target_dims});
        }
    }
    const double n = static_cast<double>(r.trials);
    if (r.detected) r.avg_detection_delay = static_cast<double>(delay_sum) / static_cast<double>(r.detected);
    r.pre_alarm_rate = static_cast<double>(pre) / n;
    r.miss_rate = static_cast<double>(r.trials - r.detected - pre) / n;
    if (!located.empty()) {
        const auto grid = localize::exact_lambda_grid(located);
        r.roc_points = localize::roc_sweep(located, grid);
    }
    return r;
}

std::string csv_field(double x) { return streams::format_double(x); }

void write_header(std::ostream& out, const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
}

void write_row(std::ostream& out, const BenchResult& r) {
    out << r.method << ',' << r.scenario << ',' << csv_field(r.threshold) << ',' << csv_field(r.target_far) << ','
        << r.trials << ',' << r.detected << ',' << csv_field(r.avg_detection_delay) << ',' << csv_field(r.miss_rate)
        << ',' << csv_field(r.pre_alarm_rate) << ',' << csv_field(r.empirical_far) << ',' << r.far_trials << ','
        << r.far_window << ',' << csv_field(r.far_bound) << '\n';
}

void close_checked(std::ofstream& out, const std::filesystem::path& p) {
    out.flush();
    if (!out) throw DataError("write to '" + p.string() + "' failed");
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_num(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(line, "bad number '" + s + "'");
    return v;
}

std::size_t parse_count(const std::string& s, std::size_t line) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(line, "bad count '" + s + "'");
    return v;
}

}  // namespace

BenchConfig bench_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw InvalidSpec("config: expected a JSON object");
    BenchConfig c;
    c.master_seed = get<std::uint64_t>(j, "master_seed", "config");
    c.trials = get_or<std::size_t>(j, "trials", c.trials, "config");
    c.far_trials = get_or<std::size_t>(j, "far_trials", c.far_trials, "config");
    c.far_window = get_or<core::Tick>(j, "far_window", c.far_window, "config");
    if (c.far_window < 1) throw InvalidSpec("config.far_window: must be >= 1");
    if (j.contains("grace") && !j["grace"].is_null()) c.grace = get<core::Tick>(j, "grace", "config");

    const auto scenarios = get<json>(j, "scenarios", "config");
    if (!scenarios.is_array() || scenarios.empty()) throw InvalidSpec("config.scenarios: expected a non-empty array");
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto where = "scenarios[" + std::to_string(i) + "]";
        const auto& s = scenarios[i];
        ScenarioConfig sc;
        sc.name = get<std::string>(s, "name", where);
        check_name(sc.name, where);
        sc.d = get<std::size_t>(s, "d", where);
        if (sc.d < 1) throw InvalidSpec(where + ".d: must be >= 1");
        sc.nominal = streams::generator_from_json(get<json>(s, "generator", where), sc.d, where + ".generator");
        sc.horizon = get<core::Tick>(s, "horizon", where);
        if (sc.horizon < 1) throw InvalidSpec(where + ".horizon: must be >= 1");
        if (s.contains("attack") && !s["attack"].is_null()) {
            sc.attack = streams::attack_from_json(s["attack"], where + ".attack");
            streams::ScenarioSpec probe{sc.nominal, sc.d, sc.horizon, sc.attack, 0, sc.name};
            try {
                probe.validate();
            } catch (const InvalidSpec& e) {
                throw InvalidSpec(where + ".attack: " + e.what());
            }
        }
        const auto tw = where + ".training";
        const auto t = get<json>(s, "training", where);
        sc.training.n = get_or<std::size_t>(t, "n", 0, tw);
        sc.training.ratio = get_or<double>(t, "ratio", sc.training.ratio, tw);
        if (!(sc.training.ratio > 0.0 && sc.training.ratio < 1.0)) throw InvalidSpec(tw + ".ratio: must lie in (0,1)");
        sc.training.params = params_from_json(get<json>(t, "params", tw), tw + ".params");
        if (t.contains("model")) {
            std::filesystem::path p = get<std::string>(t, "model", tw);
            sc.training.model_path = p.is_relative() ? base_dir / p : p;
        } else if (sc.training.n < 2) {
            throw InvalidSpec(tw + ".n: need at least 2 training instances or a model path");
        }
        c.scenarios.push_back(std::move(sc));
    }

    const auto methods = get<json>(j, "methods", "config");
    if (!methods.is_array() || methods.empty()) throw InvalidSpec("config.methods: expected a non-empty array");
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const auto where = "methods[" + std::to_string(i) + "]";
        const auto& m = methods[i];
        MethodConfig mc;
        mc.name = get<std::string>(m, "name", where);
        if (mc.name != "knn" && mc.name != "gcusum" && mc.name != "data_filter") {
            throw InvalidSpec(where + ".name: unknown method '" + mc.name + "' (knn, gcusum, data_filter)");
        }
        if (m.contains("thresholds")) {
            const auto& th = m["thresholds"];
            if (th.is_string() && th.get<std::string>() == "auto") {
                mc.far_levels = kDefaultFarLevels;
            } else {
                mc.thresholds = get<std::vector<double>>(m, "thresholds", where);
                for (double x : mc.thresholds) {
                    if (std::isnan(x)) throw InvalidSpec(where + ".thresholds: NaN entry");
                }
            }
        }
        if (m.contains("far_levels")) {
            mc.far_levels = get<std::vector<double>>(m, "far_levels", where);
            for (double b : mc.far_levels) {
                if (!(b >= 0.0 && b <= 1.0)) throw InvalidSpec(where + ".far_levels: entries must lie in [0,1]");
            }
        }
        if (mc.thresholds.empty() && mc.far_levels.empty()) mc.far_levels = kDefaultFarLevels;
        c.methods.push_back(std::move(mc));
    }
    return c;
}

std::optional<core::Tick> first_crossing(const std::vector<double>& path, double h) {
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i] >= h) return static_cast<core::Tick>(i + 1);
    }
    return std::nullopt;
}

std::vector<double> thresholds_for_far_levels(std::vector<double> peaks, const std::vector<double>& levels) {
    std::vector<double> out;
    if (peaks.empty()) return out;
    std::sort(peaks.begin(), peaks.end(), std::greater<>());
    const double inf = std::numeric_limits<double>::infinity();
    for (double level : levels) {
        const auto allowed = core::guarded_floor(level * static_cast<double>(peaks.size()));
        out.push_back(allowed >= peaks.size() ? peaks.back() : std::nextafter(peaks[allowed], inf));
    }
    return out;
}

std::vector<BenchResult> run_bench(const BenchConfig& cfg) {
    std::vector<BenchResult> results;
    for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
        const auto& sc = cfg.scenarios[si];
        const auto scenario_seed = core::derive_seed(cfg.master_seed, 1000 + si);
        const auto tr = train_methods(sc, cfg, scenario_seed);

        std::vector<std::vector<core::DataInstance>> far_streams, attack_streams;
        for (std::size_t i = 0; i < cfg.far_trials; ++i) {
            far_streams.push_back(nominal_stream(sc, cfg.far_window, core::derive_seed(scenario_seed, 200000 + i)));
        }
        if (sc.attack) {
            for (std::size_t i = 0; i < cfg.trials; ++i) {
                attack_streams.push_back(attacked_stream(sc, core::derive_seed(scenario_seed, 100000 + i)));
            }
        }

        for (const auto& m : cfg.methods) {
            std::vector<double> far_peaks;
            for (const auto& s : far_streams) far_peaks.push_back(peak(method_path(m.name, s, tr, false).stat));
            std::vector<TrialPath> attack_paths;
            for (const auto& s : attack_streams) attack_paths.push_back(method_path(m.name, s, tr, m.name == "knn"));

            std::vector<std::pair<double, double>> grid;  // threshold, target FAR
            for (double h : m.thresholds) grid.emplace_back(h, kNaN);
            const auto auto_h = thresholds_for_far_levels(far_peaks, m.far_levels);
            for (std::size_t i = 0; i < auto_h.size(); ++i) grid.emplace_back(auto_h[i], m.far_levels[i]);
            std::stable_sort(grid.begin(), grid.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            grid.erase(std::unique(grid.begin(), grid.end(),
                                   [](const auto& a, const auto& b) { return a.first == b.first; }),
                       grid.end());
            for (const auto& [h, level] : grid) {
                results.push_back(evaluate(m, sc, cfg, h, level, far_peaks, attack_paths, tr.omega0));
            }
        }
    }
    return results;
}

std::vector<std::filesystem::path> export_results(const std::vector<BenchResult>& results,
                                                  const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());

    std::vector<std::filesystem::path> written;
    const auto summary = dir / "summary.csv";
    {
        auto out = streams::open_out(summary);
        write_header(out, kDelayFarColumns);
        for (const auto& r : results) write_row(out, r);
        close_checked(out, summary);
    }
    written.push_back(summary);

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& r : results) {
        const std::pair key{r.scenario, r.method};
        if (std::find(pairs.begin(), pairs.end(), key) == pairs.end()) pairs.push_back(key);
    }
    for (const auto& [scenario, method] : pairs) {
        const auto stem = scenario + "__" + method + ".csv";
        const auto df = dir / ("delay_far__" + stem);
        {
            auto out = streams::open_out(df);
            write_header(out, kDelayFarColumns);
            for (const auto& r : results) {
                if (r.scenario == scenario && r.method == method) write_row(out, r);
            }
            close_checked(out, df);
        }
        written.push_back(df);

        const bool has_roc = std::any_of(results.begin(), results.end(), [&](const BenchResult& r) {
            return r.scenario == scenario && r.method == method && !r.roc_points.empty();
        });
        if (!has_roc) continue;
        const auto roc = dir / ("roc__" + stem);
        {
            auto out = streams::open_out(roc);
            write_header(out, kRocColumns);
            for (const auto& r : results) {
                if (r.scenario != scenario || r.method != method) continue;
                for (const auto& p : r.roc_points) {
                    out << method << ',' << scenario << ',' << csv_field(r.threshold) << ',' << csv_field(p.lambda)
                        << ',' << csv_field(p.tpr) << ',' << csv_field(p.fpr) << '\n';
                }
            }
            close_checked(out, roc);
        }
        written.push_back(roc);
    }
    return written;
}

std::vector<BenchResult> read_delay_far_csv(const std::filesystem::path& path) {
    auto in = streams::open_in(path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<BenchResult> out;
    while (std::getline(in, line)) {
        ++line_no;
        const auto cells = split(line);
        if (line_no == 1) {
            if (cells != kDelayFarColumns) throw ParseError(1, "unexpected header");
            continue;
        }
        if (line.empty()) continue;
        if (cells.size() != kDelayFarColumns.size()) throw ParseError(line_no, "wrong number of columns");
        BenchResult r;
        r.method = cells[0];
        r.scenario = cells[1];
        r.threshold = parse_num(cells[2], line_no);
        r.target_far = parse_num(cells[3], line_no);
        r.trials = parse_count(cells[4], line_no);
        r.detected = parse_count(cells[5], line_no);
        r.avg_detection_delay = parse_num(cells[6], line_no);
        r.miss_rate = parse_num(cells[7], line_no);
        r.pre_alarm_rate = parse_num(cells[8], line_no);
        r.empirical_far = parse_num(cells[9], line_no);
        r.far_trials = parse_count(cells[10], line_no);
        r.far_window = parse_count(cells[11], line_no);
        r.far_bound = parse_num(cells[12], line_no);
        out.push_back(std::move(r));
    }
    if (line_no == 0) throw ParseError(1, "missing header");
    return out;
}

std::vector<std::pair<double, localize::RocPoint>> read_roc_csv(const std::filesystem::path& path) {
    auto in = streams::open_in(path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::pair<double, localize::RocPoint>> out;
    while (std::getline(in, line)) {
        ++line_no;
        const auto cells = split(line);
        if (line_no == 1) {
            if (cells != kRocColumns) throw ParseError(1, "unexpected header");
            continue;
        }
        if (line.empty()) continue;
        if (cells.size() != kRocColumns.size()) throw ParseError(line_no, "wrong number of columns");
        out.push_back({parse_num(cells[2], line_no),
                       {parse_num(cells[3], line_no), parse_num(cells[4], line_no), parse_num(cells[5], line_no)}});
    }
    return out;
}

}  // namespace knnids::bench

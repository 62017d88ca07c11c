#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "knnids/error.hpp"
#include "knnids/io.hpp"
#include "knnids/model_io.hpp"
#include "knnids/presets.hpp"
#include "knnids/scenario.hpp"

using namespace knnids;
using namespace knnids::streams;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("knnids_streams_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct Moments {
    double mean = 0.0, var = 0.0;
};

Moments moments(const std::vector<core::DataInstance>& xs, std::size_t n) {
    Moments m;
    for (const auto& x : xs) m.mean += x.values[n];
    m.mean /= static_cast<double>(xs.size());
    for (const auto& x : xs) m.var += (x.values[n] - m.mean) * (x.values[n] - m.mean);
    m.var /= static_cast<double>(xs.size() - 1);
    return m;
}

ScenarioSpec box_spec(core::Tick horizon, std::uint64_t seed) {
    ScenarioSpec s;
    s.generator = UniformBox{{0.0, -1.0}, {1.0, 3.0}};
    s.d = 2;
    s.horizon = horizon;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(Generate, DeterministicAndCleanWithoutAttack) {
    const auto spec = fdi_road_scenario(5, 200, false);
    const auto a = generate(spec), b = generate(spec);
    EXPECT_EQ(a.stream, b.stream);
    ASSERT_EQ(a.stream.size(), 200u);
    EXPECT_EQ(a.stream.front().t, 1u);
    EXPECT_EQ(a.stream.back().t, 200u);
    for (core::Tick t = 1; t <= 200; ++t) EXPECT_FALSE(a.truth.tick_attacked(t));
    EXPECT_NE(generate(fdi_road_scenario(6, 200, false)).stream, a.stream);
}

TEST(Generate, AttackTouchesOnlyTargetCellsInsideTheWindow) {
    for (const auto& attacked : {fdi_road_scenario(9), ddos_segments_scenario(9)}) {
        auto clean = attacked;
        clean.attack.reset();
        const auto x = generate(attacked), y = generate(clean);
        const auto& a = *attacked.attack;
        for (core::Tick t = 1; t <= attacked.horizon; ++t) {
            for (std::size_t n = 0; n < attacked.d; ++n) {
                const bool target = t >= a.start && t <= a.end &&
                                    std::find(a.target_dims.begin(), a.target_dims.end(), n) != a.target_dims.end();
                EXPECT_EQ(x.truth.attacked(t, n), target);
                if (!target) {
                    ASSERT_EQ(x.stream[t - 1].values[n], y.stream[t - 1].values[n]) << t << "," << n;
                }
            }
        }
    }
}

TEST(Generate, FdiValuesStayWithinTheFalsificationBand) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto spec = fdi_road_scenario(seed);
        auto clean = spec;
        clean.attack.reset();
        const auto x = generate(spec), y = generate(clean);
        for (core::Tick t = 101; t <= 120; ++t) {
            const double nominal = y.stream[t - 1].values[0];
            EXPECT_LE(std::abs(x.stream[t - 1].values[0] - nominal), 0.3 * std::abs(nominal) + 1e-12);
        }
    }
}

TEST(Generate, DdosExtraTrafficHasTheRequestedMean) {
    const auto means = nominal_means(segment_rate_model(), kSegments);
    double extra = 0.0, expected = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto spec = ddos_segments_scenario(seed);
        auto clean = spec;
        clean.attack.reset();
        const auto x = generate(spec), y = generate(clean);
        for (core::Tick t = 181; t <= 200; ++t) {
            for (auto n : spec.attack->target_dims) {
                const double e = x.stream[t - 1].values[n] - y.stream[t - 1].values[n];
                EXPECT_GE(e, 0.0);
                EXPECT_EQ(e, std::round(e));
                extra += e;
                expected += 0.3 * means[n];
            }
        }
    }
    EXPECT_NEAR(extra / expected, 1.0, 0.1);
}

TEST(Generate, UniformBoxMoments) {
    const auto xs = generate(box_spec(20000, 3)).stream;
    const auto m0 = moments(xs, 0), m1 = moments(xs, 1);
    EXPECT_NEAR(m0.mean, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / 20000));
    EXPECT_NEAR(m1.mean, 1.0, 3.0 * std::sqrt(16.0 / 12.0 / 20000));
    EXPECT_NEAR(m1.var, 16.0 / 12.0, 0.05 * 16.0 / 12.0);
    for (const auto& x : xs) {
        EXPECT_GE(x.values[0], 0.0);
        EXPECT_LT(x.values[0], 1.0);
    }
}

TEST(Generate, MixtureMoments) {
    ScenarioSpec s;
    s.generator = GaussianMixture{{{0.25, {-2.0}, {0.5}}, {0.75, {2.0}, {1.0}}}};
    s.d = 1;
    s.horizon = 20000;
    s.seed = 4;
    const auto m = moments(generate(s).stream, 0);
    const double mean = 0.25 * -2.0 + 0.75 * 2.0;
    const double var = 0.25 * (0.25 + 4.0) + 0.75 * (1.0 + 4.0) - mean * mean;
    EXPECT_NEAR(m.mean, mean, 3.0 * std::sqrt(var / 20000));
    EXPECT_NEAR(m.var, var, 0.05 * var);
}

TEST(Generate, NegativeBinomialMoments) {
    for (bool shared : {false, true}) {
        ScenarioSpec s;
        s.generator = NegativeBinomialRates{{4.0, 4.0}, {0.2, 0.5}, shared};
        s.d = 2;
        s.horizon = 20000;
        s.seed = 5;
        const auto xs = generate(s).stream;
        for (std::size_t n = 0; n < 2; ++n) {
            const double p = n == 0 ? 0.2 : 0.5;
            const double mean = 4.0 * (1 - p) / p, var = 4.0 * (1 - p) / (p * p);
            const auto m = moments(xs, n);
            EXPECT_NEAR(m.mean, mean, 3.0 * std::sqrt(var / 20000)) << shared;
            EXPECT_NEAR(m.var, var, 0.08 * var) << shared;
            for (const auto& x : xs) ASSERT_EQ(x.values[n], std::round(x.values[n]));
        }
    }
}

TEST(Generate, GaussianRatesAreRoundedAndNonNegative) {
    ScenarioSpec s;
    s.generator = GaussianRates{{50.0, 0.5}, {5.0, 2.0}};
    s.d = 2;
    s.horizon = 20000;
    s.seed = 6;
    const auto xs = generate(s).stream;
    const auto m = moments(xs, 0);
    EXPECT_NEAR(m.mean, 50.0, 3.0 * std::sqrt(25.0 / 20000) + 0.01);
    for (const auto& x : xs) {
        ASSERT_GE(x.values[1], 0.0);
        ASSERT_EQ(x.values[0], std::round(x.values[0]));
    }
}

TEST(ScenarioSpec, InvalidSpecsAreRejected) {
    auto s = box_spec(10, 1);
    s.horizon = 0;
    EXPECT_THROW(generate(s), InvalidSpec);
    s = box_spec(10, 1);
    s.attack = AttackSpec{AttackKind::fdi_uniform, {0}, 5, 11, 0.3};
    EXPECT_THROW(generate(s), InvalidSpec);
    s.attack = AttackSpec{AttackKind::fdi_uniform, {2}, 5, 6, 0.3};
    EXPECT_THROW(generate(s), InvalidSpec);
    s.attack = AttackSpec{AttackKind::fdi_uniform, {}, 5, 6, 0.3};
    EXPECT_THROW(generate(s), InvalidSpec);
    s.attack = AttackSpec{AttackKind::fdi_uniform, {0}, 0, 6, 0.3};
    EXPECT_THROW(generate(s), InvalidSpec);
    s = box_spec(10, 1);
    s.generator = GaussianMixture{{{0.5, {0.0, 0.0}, {1.0, 1.0}}, {0.4, {0.0, 0.0}, {1.0, 1.0}}}};
    EXPECT_THROW(generate(s), InvalidSpec);
    s.generator = NegativeBinomialRates{{1.0, 2.0}, {0.5, 0.5}, true};
    EXPECT_THROW(generate(s), InvalidSpec);
    s.generator = UniformBox{{0.0}, {1.0}};
    EXPECT_THROW(generate(s), InvalidSpec);
}

TEST(ScenarioJson, RoundTripReproducesTheStream) {
    for (const auto& spec : {fdi_road_scenario(3), ddos_segments_scenario(4), box_spec(30, 2)}) {
        const auto back = scenario_from_json(nlohmann::json::parse(to_json(spec).dump()));
        EXPECT_EQ(generate(back).stream, generate(spec).stream);
    }
}

TEST(ScenarioJson, ErrorsNameTheLocation) {
    auto j = to_json(fdi_road_scenario(3));
    j["attack"]["window"] = {150, 250};
    try {
        scenario_from_json(j);
        FAIL();
    } catch (const InvalidSpec& e) {
        EXPECT_NE(std::string(e.what()).find("attack.window"), std::string::npos) << e.what();
    }
    j = to_json(fdi_road_scenario(3));
    j["generator"]["type"] = "cauchy";
    EXPECT_THROW(scenario_from_json(j), InvalidSpec);
}

TEST(Ingest, CsvShapeAndHeader) {
    std::istringstream in("# speed,heading\n1.5,2\n3,4e1\n\n-5,6.25\n");
    const auto xs = read_csv(in);
    ASSERT_EQ(xs.size(), 3u);
    EXPECT_EQ(xs[1].values, (std::vector<double>{3.0, 40.0}));
    EXPECT_EQ(xs[2].t, 3u);
}

TEST(Ingest, CsvErrorsCarryLineNumbers) {
    std::istringstream bad("1,2\n3,x\n");
    try {
        read_csv(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream ragged("1,2\n3,4,5\n");
    EXPECT_THROW(read_csv(ragged), DimensionMismatch);
    std::istringstream nan("1,nan\n");
    EXPECT_THROW(read_csv(nan), ParseError);
}

TEST(Ingest, JsonlSchemaViolations) {
    std::istringstream missing("{\"t\":1,\"source_id\":\"a\",\"values\":[1,2]}\n{\"t\":2,\"source_id\":\"a\"}\n");
    try {
        read_jsonl(missing);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream garbage("{\"t\":1,");
    EXPECT_THROW(read_jsonl(garbage), ParseError);
    std::istringstream ragged("{\"t\":1,\"source_id\":\"a\",\"values\":[1,2]}\n{\"t\":2,\"source_id\":\"a\",\"values\":[1]}\n");
    EXPECT_THROW(read_jsonl(ragged), DimensionMismatch);
}

TEST(Ingest, ExportThenIngestRoundTrips) {
    const auto dir = temp_dir("roundtrip");
    for (const auto& spec : {fdi_road_scenario(12), ddos_segments_scenario(13), box_spec(100, 14)}) {
        const auto xs = generate(spec).stream;
        export_stream(dir / "s.jsonl", xs, Format::jsonl_stream);
        EXPECT_EQ(ingest(dir / "s.jsonl", Format::jsonl_stream), xs);
        export_stream(dir / "s.csv", xs, Format::csv_matrix);
        const auto back = ingest(dir / "s.csv", Format::csv_matrix);
        ASSERT_EQ(back.size(), xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            EXPECT_EQ(back[i].values, xs[i].values);
            EXPECT_EQ(back[i].t, xs[i].t);
        }
    }
    EXPECT_THROW(ingest(dir / "missing.csv", Format::csv_matrix), DataError);
}

TEST(Reports, LineSchemaRoundTrips) {
    const ReportRecord r{"veh-7", 112, 103, 2.25, {0}, {0.5, 0.0625, 0.1, 1e-9}};
    const auto line = report_line(r);
    EXPECT_EQ(line.rfind("{\"source_id\":\"veh-7\",\"T\":112,\"q\":103,\"final_stat\":2.25,\"flagged_dims\":[0]", 0), 0u);
    EXPECT_EQ(parse_report_line(line), r);
}

namespace {

ModelFile small_model(bool calibrated) {
    const auto train = generate(box_spec(300, 8)).stream;
    ModelFile mf{detector::fit(train, {1, 1, 1.0, 0.05, 1.5}, 1.0 / 3.0, 3), std::nullopt};
    if (calibrated) mf.calibration = calibrate::Calibration{0.05, 3.14, 0.5, mf.model.evidence_bound_phi, 12.5, 0.24};
    return mf;
}

}  // namespace

TEST(ModelFile, SaveLoadIsLossless) {
    const auto dir = temp_dir("model");
    for (bool cal : {false, true}) {
        const auto mf = small_model(cal);
        save_model(mf, dir / "m.json");
        EXPECT_EQ(load_model(dir / "m.json"), mf);
    }
}

TEST(ModelFile, TruncationAndTamperingAreDetected) {
    const auto text = model_to_string(small_model(true));
    EXPECT_THROW(model_from_string(text.substr(0, text.size() / 2)), CorruptModel);
    auto j = nlohmann::json::parse(text);
    j["baseline_LM"] = j["baseline_LM"].get<double>() * 1.0000001;
    EXPECT_THROW(model_from_string(j.dump()), CorruptModel);
    j = nlohmann::json::parse(text);
    j.erase("checksum");
    EXPECT_THROW(model_from_string(j.dump()), CorruptModel);
}

TEST(ModelFile, UnknownVersionIsRejected) {
    auto j = nlohmann::json::parse(model_to_string(small_model(false)));
    j["version"] = "knnids-model/99";
    EXPECT_THROW(model_from_string(j.dump()), VersionMismatch);
}

TEST(ModelFile, FieldNamesAreFixed) {
    const auto j = nlohmann::json::parse(model_to_string(small_model(true)));
    for (const char* key : {"version", "d", "params", "bounds", "reference", "baseline_LM", "phi", "calibration", "checksum"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    for (const char* key : {"k", "s", "gamma", "alpha", "h"}) EXPECT_TRUE(j["params"].contains(key)) << key;
    for (const char* key : {"beta", "v_d", "theta", "omega0", "h"}) EXPECT_TRUE(j["calibration"].contains(key)) << key;
}

TEST(ModelFile, ReloadedModelGivesTheSameDetectionReport) {
    const auto dir = temp_dir("e2e");
    const auto train = generate(fdi_road_scenario(100, 3000, false)).stream;
    ModelFile mf{detector::fit(train, fdi_params(), 1.0 / 3.0, 42), std::nullopt};
    save_model(mf, dir / "m.json");
    const auto loaded = load_model(dir / "m.json");
    const auto stream = generate(fdi_road_scenario(7)).stream;
    const auto a = detector::run_stream(stream, mf.model);
    const auto b = detector::run_stream(stream, loaded.model);
    ASSERT_TRUE(a.has_value());
    ASSERT_TRUE(b.has_value());
    EXPECT_EQ(a->alarm_time_T, b->alarm_time_T);
    EXPECT_EQ(a->onset_q, b->onset_q);
    EXPECT_EQ(a->final_stat, b->final_stat);
    ASSERT_EQ(a->evidence_window.size(), b->evidence_window.size());
    for (std::size_t i = 0; i < a->evidence_window.size(); ++i) {
        EXPECT_EQ(a->evidence_window[i].per_dim, b->evidence_window[i].per_dim);
    }
}

// knnids command-line entry point: train, calibrate, detect, simulate, bench.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "knnids/bench.hpp"
#include "knnids/calibrate.hpp"
#include "knnids/detector.hpp"
#include "knnids/error.hpp"
#include "knnids/io.hpp"
#include "knnids/localize.hpp"
#include "knnids/model_io.hpp"
#include "knnids/scenario.hpp"

namespace fs = std::filesystem;
using namespace knnids;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kCalibration = 3 };

streams::Format format_for(const fs::path& p, const char* flag) {
    const auto f = streams::format_from_extension(p);
    if (!f) throw ConfigError(std::string(flag) + ": expected a .csv or .jsonl path, got '" + p.string() + "'");
    return *f;
}

nlohmann::json read_json_file(const fs::path& p) {
    auto in = streams::open_in(p);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

struct TrainArgs {
    std::string data, out;
    detector::Hyperparams params;
    double ratio = core::kDefaultPartitionRatio;
    std::uint64_t seed = 0;
};

void cmd_train(const TrainArgs& a) {
    a.params.validate();
    const auto fmt = format_for(a.data, "--data");
    const auto training = streams::ingest(a.data, fmt);
    streams::ModelFile mf{detector::fit(training, a.params, a.ratio, a.seed), std::nullopt};
    streams::save_model(mf, a.out);
}

struct CalibrateArgs {
    std::string model, out;
    double beta = 0.0;
};

void cmd_calibrate(const CalibrateArgs& a) {
    auto mf = streams::load_model(a.model);
    if (!calibrate::in_closed_form_regime(mf.model.params)) {
        std::cerr << "warning: closed-form calibration assumes k = s = 1 and gamma = 1; threshold is approximate\n";
    }
    const auto cal = calibrate::threshold_for_far(mf.model, a.beta);
    mf.calibration = cal;
    mf.model.params.h = cal.h;
    streams::save_model(mf, a.out);
    nlohmann::ordered_json j;
    j["beta"] = cal.beta;
    j["omega0"] = cal.omega0;
    j["h"] = cal.h;
    std::cout << j.dump() << '\n';
}

struct DetectArgs {
    std::string model, stream, report;
    bool localize = false;
    double lambda = 0.0;
};

void cmd_detect(const DetectArgs& a) {
    const auto mf = streams::load_model(a.model);
    const auto instances = streams::ingest(a.stream, format_for(a.stream, "--stream"));
    auto out = streams::open_out(a.report);

    std::map<std::string, detector::Detector> detectors;
    for (const auto& x : instances) {
        auto it = detectors.find(x.source_id);
        if (it == detectors.end()) it = detectors.emplace(x.source_id, detector::Detector(mf.model, x.source_id)).first;
        if (it->second.finished()) continue;
        const auto rep = it->second.observe(x);
        if (!rep) continue;
        streams::ReportRecord rec{rep->source_id, rep->alarm_time_T, rep->onset_q, rep->final_stat, {},
                                  localize::mean_contributions(*rep)};
        if (a.localize) rec.flagged_dims = localize::flag(rec.mean_contributions, a.lambda);
        out << streams::report_line(rec) << '\n';
        out.flush();
    }
    if (!out) throw DataError("write to '" + a.report + "' failed");
}

struct SimulateArgs {
    std::string spec, out, truth;
};

void cmd_simulate(const SimulateArgs& a) {
    const auto spec = streams::scenario_from_json(read_json_file(a.spec));
    const auto fmt = format_for(a.out, "--out");
    const auto sc = streams::generate(spec);
    streams::export_stream(a.out, sc.stream, fmt);
    if (!a.truth.empty()) {
        auto out = streams::open_out(a.truth);
        out << streams::truth_to_json(spec).dump() << '\n';
    }
}

struct BenchArgs {
    std::string config, out_dir;
};

void cmd_bench(const BenchArgs& a) {
    const auto cfg = bench::bench_config_from_json(read_json_file(a.config), fs::path(a.config).parent_path());
    const auto results = bench::run_bench(cfg);
    for (const auto& p : bench::export_results(results, a.out_dir)) std::cout << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kNN-distance sequential intrusion detector"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Fit a model from nominal training data");
    t->set_help_flag("--help", "Print this help message and exit");
    t->add_option("--data", train.data, "Training data (.csv or .jsonl)")->required();
    t->add_option("--k", train.params.k, "Neighbors searched")->check(CLI::PositiveNumber);
    t->add_option("--s", train.params.s, "Neighbors summed (ranks k-s+1..k)")->check(CLI::PositiveNumber);
    t->add_option("--gamma", train.params.gamma, "Distance exponent");
    t->add_option("--alpha", train.params.alpha, "Significance level for the baseline");
    t->add_option("--h", train.params.h, "Decision threshold before calibration");
    t->add_option("--ratio", train.ratio, "Fraction of training data in the first partition");
    t->add_option("--seed", train.seed, "Partition seed");
    t->add_option("--out", train.out, "Model file to write")->required();

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Set the threshold for a target false alarm rate");
    c->add_option("--model", cal.model, "Model file")->required()->check(CLI::ExistingFile);
    c->add_option("--beta", cal.beta, "Target false alarm rate in (0,1)")->required();
    c->add_option("--out", cal.out, "Calibrated model file to write")->required();

    DetectArgs det;
    auto* d = app.add_subcommand("detect", "Run one detector per source over a stream");
    d->add_option("--model", det.model, "Model file")->required()->check(CLI::ExistingFile);
    d->add_option("--stream", det.stream, "Stream (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
    auto* loc = d->add_flag("--localize", det.localize, "Flag attacked dimensions");
    d->add_option("--lambda", det.lambda, "Localization threshold")->needs(loc);
    d->add_option("--report", det.report, "Report JSONL to write")->required();

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Generate a scenario stream");
    s->add_option("--spec", sim.spec, "Scenario spec (JSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--out", sim.out, "Output stream (.jsonl or .csv)")->required();
    s->add_option("--truth", sim.truth, "Optional ground-truth JSON to write");

    BenchArgs bn;
    auto* b = app.add_subcommand("bench", "Run the benchmark harness");
    b->add_option("--config", bn.config, "Bench config (JSON)")->required()->check(CLI::ExistingFile);
    b->add_option("--out-dir", bn.out_dir, "Directory for result CSVs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*t && !(train.ratio > 0.0 && train.ratio < 1.0)) {
            std::cerr << "error: --ratio must lie in (0,1), got " << train.ratio << '\n';
            return kUsage;
        }
        if (*c && !(cal.beta > 0.0 && cal.beta < 1.0)) {
            std::cerr << "error: --beta must lie in (0,1), got " << cal.beta << '\n';
            return kUsage;
        }
        if (*d && det.localize && d->count("--lambda") == 0) {
            std::cerr << "error: --localize requires --lambda\n";
            return kUsage;
        }
        if (*t) cmd_train(train);
        if (*c) cmd_calibrate(cal);
        if (*d) cmd_detect(det);
        if (*s) cmd_simulate(sim);
        if (*b) cmd_bench(bn);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << '\n';
        return kCalibration;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    }
    return kOk;
}

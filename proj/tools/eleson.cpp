#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "eleson/benchmark.hpp"
#include "eleson/dataset_io.hpp"
#include "eleson/pipeline.hpp"

namespace fs = std::filesystem;
using namespace eleson;

namespace {

std::array<double, 3> parse_mix(const std::string& s) {
    std::array<double, 3> mix{};
    std::stringstream ss(s);
    std::string tok;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, tok, ',')) throw ConfigError("--mix needs three comma-separated proportions");
        mix[static_cast<size_t>(i)] = std::stod(tok);
    }
    return mix;
}

BehaviorMix parse_behavior_mix(const std::string& s) {
    BehaviorMix mix;
    mix.weights = {0, 0, 0, 0, 0, 0, 0};
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const size_t colon = tok.find(':');
        if (colon == std::string::npos) throw ConfigError("behavior mix entries look like name:weight");
        mix[behavior_kind_from_name(tok.substr(0, colon))] = std::stod(tok.substr(colon + 1));
    }
    return mix;
}

int run_synth(const std::string& out_dir, int sessions, const std::string& mix_str,
              std::uint64_t seed, const std::string& behavior_mix_str, const std::string& scenario_dir,
              const std::string& split_str, bool benchmark_split, const std::string& emit_session) {
    fs::create_directories(out_dir);

    if (!emit_session.empty()) {
        // single demo session for the infer CLI
        ScenarioConfig cfg;
        cfg.profile = ConveyorProfile::elevator_default();
        cfg.behavior = BehaviorProcess::defaults(BehaviorKind::Browsing);
        cfg.seed_behavior = seed_split(seed, 1);
        cfg.seed_unobserved = seed_split(seed, 2);
        SessionData s = gen_session(cfg);
        write_session_file(emit_session, s.samples, cfg.sample_rate);
        std::cout << "wrote " << emit_session << " (" << s.samples.size() << " samples)\n";
    }

    if (benchmark_split) {
        BenchmarkSpec spec;
        spec.seed = seed;
        BenchmarkData data = make_benchmark(spec);
        write_dataset_file(out_dir + "/train.txt", data.train);
        write_dataset_file(out_dir + "/valid.txt", data.valid);
        write_dataset_file(out_dir + "/test.txt", data.test);
        std::cout << "benchmark: train=" << data.train.records.size()
                  << " valid=" << data.valid.records.size() << " test=" << data.test.records.size()
                  << " windows\n";
        return 0;
    }

    if (!scenario_dir.empty()) {
        // one session per scenario file, windowed into a single dataset
        Dataset ds;
        int idx = 0;
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(scenario_dir))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw ConfigError("no scenario files in " + scenario_dir);
        for (const auto& path : files) {
            ScenarioConfig cfg = parse_scenario_file(path.string());
            SessionData s = gen_session(cfg);
            auto windows = window_labeled_session(s.samples, s.labels, 2.0, 2.0, cfg.sample_rate,
                                                  "s" + std::to_string(idx), "loc0");
            for (auto& w : windows) {
                w.vp_flag = auto_label_vp(w.window);
                ds.records.push_back(std::move(w));
            }
            ++idx;
        }
        ds.meta.generator_seed = seed;
        ds.refresh_proportions();
        write_dataset_file(out_dir + "/dataset.txt", ds);
        std::cout << "wrote " << ds.records.size() << " windows from " << idx << " scenarios\n";
        return 0;
    }

    const auto mix = parse_mix(mix_str);
    BehaviorMix bmix = behavior_mix_str.empty() ? BehaviorMix::uniform_everyday()
                                                : parse_behavior_mix(behavior_mix_str);
    Dataset ds = gen_dataset(sessions, mix, bmix, seed);

    std::array<double, 3> split{0.7, 0.1, 0.2};
    if (!split_str.empty()) split = parse_mix(split_str);
    Dataset rest;
    Dataset train = split_sessions(ds, split[0], seed_split(seed, 51), &rest);
    Dataset valid = split_sessions(rest, split[1] / std::max(1e-9, split[1] + split[2]),
                                   seed_split(seed, 52), &rest);
    write_dataset_file(out_dir + "/train.txt", train);
    write_dataset_file(out_dir + "/valid.txt", valid);
    write_dataset_file(out_dir + "/test.txt", rest);
    std::cout << "wrote train=" << train.records.size() << " valid=" << valid.records.size()
              << " test=" << rest.records.size() << " windows to " << out_dir << "\n";
    return 0;
}

int run_train(const std::string& config_path, const std::string& data_dir, const std::string& out_path,
              int cv_folds) {
    TrainConfig config =
        config_path.empty() ? TrainConfig{} : parse_train_config_file(config_path);
    Dataset train_set = read_dataset_file(data_dir + "/train.txt");
    Dataset valid_set = read_dataset_file(data_dir + "/valid.txt");

    if (cv_folds > 1) {
        Dataset all = train_set;
        for (auto& r : valid_set.records) all.records.push_back(r);
        all.refresh_proportions();
        auto reports = cross_validate(config, all, cv_folds);
        double mean = 0;
        for (size_t f = 0; f < reports.size(); ++f) {
            std::cout << "fold " << f << ": mean_f1=" << reports[f].mean_f1
                      << " auroc=" << reports[f].auroc << "\n";
            mean += reports[f].mean_f1;
        }
        std::cout << "cv mean_f1=" << mean / static_cast<double>(reports.size()) << "\n";
        return 0;
    }

    TrainOutcome out = train(config, train_set, valid_set);
    save_bundle(out_path, out.bundle);
    std::cout << "trained " << out.epoch_train_loss.size() << " epochs (best epoch " << out.best_epoch
              << "), model written to " << out_path << "\n";
    return 0;
}

int run_eval(const std::string& model_path, const std::string& data_dir, double tau,
             const std::string& report_path, const std::string& data_file) {
    ModelBundle bundle = load_bundle(model_path);
    const std::string path = data_file.empty() ? data_dir + "/test.txt" : data_file;
    Dataset test = read_dataset_file(path);
    MetricsReport report = evaluate(bundle, test, tau);
    print_report(std::cout, report);
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        if (!f) throw DataError("cannot open report file: " + report_path);
        print_report(f, report);
    }
    return 0;
}

int run_infer(const std::string& model_path, const std::string& input_path) {
    ModelBundle bundle = load_bundle(model_path);
    auto [samples, rate] = read_session_file(input_path);
    if (std::abs(rate - bundle.config.sample_rate) > 1e-9)
        throw DataError("session rate does not match the model's configured rate");
    VectorSampleSource source(samples);
    const auto decisions = infer_stream(bundle, source, bundle.config.tau);
    for (const auto& sd : decisions) {
        write_decision_line(std::cout, sd.window_index, sd.decision);
        if (sd.decision.gap) std::cout << ", gap";
        std::cout << "\n";
    }
    return 0;
}

int run_bench(const std::string& model_path) {
    ModelBundle bundle = load_bundle(model_path);
    BenchReport r = bench(bundle);
    std::cout << "serialized_bytes=" << r.serialized_bytes << " (" << r.serialized_bytes / (1024.0 * 1024.0)
              << " MiB)\n";
    std::cout << "parameters=" << r.parameter_count << "\n";
    std::cout << "latency p50=" << r.latency_p50_ms << "ms p95=" << r.latency_p95_ms << "ms\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conveyor-state classification pipeline"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate labeled synthetic datasets");
    std::string out_dir = "data", mix_str = "0.2,0.2,0.6", behavior_mix_str, scenario_dir, split_str,
                emit_session;
    int sessions = 200;
    std::uint64_t seed = 1;
    bool benchmark_split = false;
    synth->add_option("--out", out_dir, "output directory");
    synth->add_option("--sessions", sessions, "number of sessions to simulate");
    synth->add_option("--mix", mix_str, "window class proportions a,b,c");
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--behavior-mix", behavior_mix_str, "behavior weights, e.g. still:1,walking:2");
    synth->add_option("--scenarios", scenario_dir, "directory of scenario key=value files");
    synth->add_option("--split", split_str, "train,valid,test fractions (default 0.7,0.1,0.2)");
    synth->add_flag("--benchmark", benchmark_split, "emit the behavior/location-shifted benchmark splits");
    synth->add_option("--emit-session", emit_session, "also write one raw session file");

    auto* train_cmd = app.add_subcommand("train", "train the full pipeline");
    std::string config_path, data_dir = "data", model_out = "model.elsn";
    int cv_folds = 0;
    train_cmd->add_option("--config", config_path, "key=value training config file");
    train_cmd->add_option("--data", data_dir, "directory with train.txt and valid.txt");
    train_cmd->add_option("--out", model_out, "output model path");
    train_cmd->add_option("--cv", cv_folds, "run k-fold session-level cross-validation instead");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
    std::string model_path = "model.elsn", report_path, data_file;
    double tau = 0.5;
    eval_cmd->add_option("--model", model_path, "model path");
    eval_cmd->add_option("--data", data_dir, "directory with test.txt");
    eval_cmd->add_option("--file", data_file, "explicit dataset file (overrides --data)");
    eval_cmd->add_option("--tau", tau, "confidence threshold");
    eval_cmd->add_option("--report", report_path, "also write the report to this file");

    auto* infer_cmd = app.add_subcommand("infer", "stream decisions over a raw session file");
    std::string input_path = "session.txt";
    infer_cmd->add_option("--model", model_path, "model path");
    infer_cmd->add_option("--input", input_path, "session file");

    auto* bench_cmd = app.add_subcommand("bench", "size and latency report");
    bench_cmd->add_option("--model", model_path, "model path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return run_synth(out_dir, sessions, mix_str, seed, behavior_mix_str, scenario_dir, split_str,
                             benchmark_split, emit_session);
        if (train_cmd->parsed()) return run_train(config_path, data_dir, model_out, cv_folds);
        if (eval_cmd->parsed()) return run_eval(model_path, data_dir, tau, report_path, data_file);
        if (infer_cmd->parsed()) return run_infer(model_path, input_path);
        if (bench_cmd->parsed()) return run_bench(model_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

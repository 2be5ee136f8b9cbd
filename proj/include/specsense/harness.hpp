#pragma once

#include "specsense/fed.hpp"
#include "specsense/featex.hpp"
#include "specsense/iqgen.hpp"
#include "specsense/learn.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace specsense::harness {

struct Scenario {
    learn::ModelKind kind = learn::ModelKind::Logistic;
    std::set<int> faulty;
};

struct BaselineParams {
    double pfa = 0.01;
    int kfold = 5;
    double learning_rate = 0.5;
    int epochs = 800; // n_rounds * epochs_per_batch
    double init_scale = 0.5;
    int mlp_hidden = 4;
};

struct AppConfig {
    std::uint64_t master_seed = 20230001;
    iqgen::SynthConfig synth;
    featex::FeatureParams features;
    BaselineParams baseline;
    fed::FedConfig fedsim; // shape.kind/faulty_ids replaced per scenario
    std::vector<Scenario> scenarios;
};

AppConfig default_config();

// Parses the JSON config file; every key is optional, unknown keys are
// rejected by name. An empty path yields the defaults.
AppConfig load_config(const std::filesystem::path& path);

// Re-derives the seeds every module consumes from the master seed.
void reseed(AppConfig& config, std::uint64_t master_seed);

// Raises the synthesis counts to the recorded-dataset magnitudes
// (10'000 noise windows, 1'000 windows per gain).
void apply_paper_scale(AppConfig& config);

// generate: one IQ file + sidecar per capture plus a manifest.
void cmd_generate(const AppConfig& config, const std::filesystem::path& out_dir);

// extract: balanced single-channel dataset CSV + stats sidecar from a
// directory of IQ captures. Returns the rows it wrote.
std::vector<FeatureRow> cmd_extract(const AppConfig& config,
                                    const std::filesystem::path& iq_dir,
                                    const std::filesystem::path& out_dir);

struct BaselineReport {
    double energy_threshold = 0.0;
    double energy_accuracy = 0.0;
    double centralized_logistic = 0.0;
    double centralized_mlp = 0.0;
    std::vector<double> kfold_logistic;
    std::vector<double> kfold_mlp;
};

BaselineReport cmd_baseline(const AppConfig& config,
                            const std::filesystem::path& dataset_csv,
                            const std::filesystem::path& out_dir);

struct ScenarioSummary {
    std::string name;
    learn::ModelKind kind = learn::ModelKind::Logistic;
    std::size_t n_faulty = 0;
    double mean_fed = 0.0;
    double mean_shadow = 0.0;
    double gap = 0.0;
};

std::vector<ScenarioSummary> cmd_fedsim(const AppConfig& config,
                                        const std::filesystem::path& dataset_csv,
                                        const std::filesystem::path& out_dir);

// report: per-scenario accuracy-vs-round CSV plus an aligned text table.
void cmd_report(const std::vector<std::filesystem::path>& report_files,
                const std::filesystem::path& out_dir, std::ostream& table_out);

// ExperimentReport JSON + companion per-round CSV.
void write_experiment_report(const fed::ExperimentReport& report,
                             const std::filesystem::path& json_path,
                             const std::filesystem::path& rounds_csv_path);
fed::ExperimentReport read_experiment_report(const std::filesystem::path& json_path);

std::string scenario_name(const Scenario& scenario);

} // namespace specsense::harness

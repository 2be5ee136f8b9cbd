#include "specsense/errors.hpp"
#include "specsense/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool paper_scale = false;
};

specsense::harness::AppConfig resolve_config(const CommonOpts& opts) {
    auto cfg = specsense::harness::load_config(opts.config_path);
    if (opts.seed_set) specsense::harness::reseed(cfg, opts.seed);
    if (opts.paper_scale) specsense::harness::apply_paper_scale(cfg);
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "master seed override")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_flag("--paper-scale", opts.paper_scale,
                  "use recorded-dataset synthesis magnitudes");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated spectrum occupancy detection simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string iq_dir = "out/captures";
    std::string dataset = "out/dataset.csv";
    std::vector<std::string> report_files;

    auto* generate = app.add_subcommand("generate", "synthesize IQ captures");
    add_common(generate, opts);

    auto* extract = app.add_subcommand("extract", "captures -> balanced feature CSV");
    add_common(extract, opts);
    extract->add_option("--iq-dir", iq_dir, "directory of .iq captures");

    auto* baseline = app.add_subcommand("baseline", "energy + centralized ML baselines");
    add_common(baseline, opts);
    baseline->add_option("--dataset", dataset, "dataset CSV");

    auto* fedsim = app.add_subcommand("fedsim", "federated learning scenarios");
    add_common(fedsim, opts);
    fedsim->add_option("--dataset", dataset, "dataset CSV");

    auto* report = app.add_subcommand("report", "plot data from experiment reports");
    add_common(report, opts);
    report->add_option("files", report_files, "experiment report JSON files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        namespace harness = specsense::harness;
        const auto cfg = resolve_config(opts);
        if (generate->parsed()) {
            harness::cmd_generate(cfg, std::filesystem::path(opts.out_dir) / "captures");
        } else if (extract->parsed()) {
            harness::cmd_extract(cfg, iq_dir, opts.out_dir);
        } else if (baseline->parsed()) {
            harness::cmd_baseline(cfg, dataset, opts.out_dir);
        } else if (fedsim->parsed()) {
            harness::cmd_fedsim(cfg, dataset, opts.out_dir);
        } else if (report->parsed()) {
            std::vector<std::filesystem::path> files(report_files.begin(),
                                                     report_files.end());
            harness::cmd_report(files, opts.out_dir, std::cout);
        }
    } catch (const specsense::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const specsense::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

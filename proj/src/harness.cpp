#include "specsense/harness.hpp"

#include "specsense/errors.hpp"
#include "specsense/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace specsense::harness {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t kGenerateStream = 0x6E11;
constexpr std::uint64_t kFedStream = 0xFED0;
constexpr std::uint64_t kInitStream = 0x1111;
constexpr std::uint64_t kBaselineStream = 0xBA5E;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void require_keys(const json& j, const std::string& section,
                  std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok)
            throw ConfigError("unknown config key '" + section + "." + it.key() + "'");
    }
}

template <typename T>
void read_key(const json& j, const std::string& section, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for config key '" + section + "." + key + "'");
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    return f;
}

// Deterministic stratified train/test split; returns (train, test) rows.
std::pair<std::vector<FeatureRow>, std::vector<FeatureRow>> stratified_split(
    const std::vector<FeatureRow>& rows, double train_fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx0, idx1;
    for (std::size_t i = 0; i < rows.size(); ++i)
        (rows[i].label == 0 ? idx0 : idx1).push_back(i);
    Rng rng(seed);
    auto shuffle = [&](std::vector<std::size_t>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.below(i));
            std::swap(v[i - 1], v[j]);
        }
    };
    shuffle(idx0);
    shuffle(idx1);
    std::vector<bool> in_train(rows.size(), false);
    const auto take = [&](const std::vector<std::size_t>& v) {
        const auto t = static_cast<std::size_t>(
            std::floor(static_cast<double>(v.size()) * train_fraction + 0.5));
        for (std::size_t i = 0; i < t && i < v.size(); ++i) in_train[v[i]] = true;
    };
    take(idx0);
    take(idx1);
    std::pair<std::vector<FeatureRow>, std::vector<FeatureRow>> out;
    for (std::size_t i = 0; i < rows.size(); ++i)
        (in_train[i] ? out.first : out.second).push_back(rows[i]);
    return out;
}

std::vector<learn::Example> to_examples(const std::vector<FeatureRow>& rows,
                                        const featex::NormStats& stats) {
    std::vector<learn::Example> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        learn::Example ex;
        ex.x = {(r.power - stats.mean[0]) / stats.stddev[0],
                (r.acf_kurtosis - stats.mean[1]) / stats.stddev[1],
                (r.acf_skewness - stats.mean[2]) / stats.stddev[2]};
        ex.y = r.label;
        out.push_back(std::move(ex));
    }
    return out;
}

ordered_json synth_config_json(const iqgen::SynthConfig& c) {
    ordered_json j;
    j["noise_windows"] = c.noise_windows;
    j["windows_per_gain"] = c.windows_per_gain;
    j["gains_db"] = c.gains_db;
    j["samples_per_symbol"] = c.gmsk.samples_per_symbol;
    j["bt"] = c.gmsk.bt;
    j["pulse_span_symbols"] = c.gmsk.pulse_span_symbols;
    j["sample_rate_hz"] = c.sample_rate_hz;
    j["center_freq_hz"] = c.center_freq_hz;
    j["n_channels"] = c.n_channels;
    j["signal_channel"] = c.signal_channel;
    j["master_seed"] = c.master_seed;
    return j;
}

ordered_json fed_config_json(const fed::FedConfig& c) {
    ordered_json j;
    j["n_sensors"] = c.n_sensors;
    j["n_rounds"] = c.n_rounds;
    j["faulty_ids"] = std::vector<int>(c.faulty_ids.begin(), c.faulty_ids.end());
    j["experiment_seed"] = c.experiment_seed;
    j["shuffle_seed"] = c.effective_shuffle_seed();
    j["train_fraction"] = c.train_fraction;
    j["outlier_z"] = c.outlier_z;
    j["exclude_flagged"] = c.exclude_flagged;
    j["pfa"] = c.pfa;
    j["model"] = learn::kind_name(c.shape.kind);
    j["n_inputs"] = c.shape.n_inputs;
    j["n_hidden"] = c.shape.n_hidden;
    j["learning_rate"] = c.train.learning_rate;
    j["epochs_per_batch"] = c.train.epochs_per_batch;
    j["init_seed"] = c.train.init_seed;
    j["init_scale"] = c.train.init_scale;
    return j;
}

} // namespace

std::string scenario_name(const Scenario& scenario) {
    std::string name = learn::kind_name(scenario.kind) + "_f";
    if (scenario.faulty.empty()) return name + "none";
    bool first = true;
    for (int id : scenario.faulty) {
        if (!first) name += "-";
        name += std::to_string(id);
        first = false;
    }
    return name;
}

AppConfig default_config() {
    AppConfig cfg;
    cfg.fedsim.shape = learn::ModelShape{learn::ModelKind::Logistic, 3, 4};
    cfg.scenarios = {
        {learn::ModelKind::Logistic, {}},      {learn::ModelKind::Logistic, {0}},
        {learn::ModelKind::Logistic, {0, 1}},  {learn::ModelKind::Mlp, {}},
        {learn::ModelKind::Mlp, {0}},          {learn::ModelKind::Mlp, {0, 1}},
    };
    reseed(cfg, cfg.master_seed);
    return cfg;
}

void reseed(AppConfig& config, std::uint64_t master_seed) {
    config.master_seed = master_seed;
    config.synth.master_seed = derive_seed(master_seed, kGenerateStream);
    config.fedsim.experiment_seed = derive_seed(master_seed, kFedStream);
    config.fedsim.shuffle_seed = 0; // derive from experiment seed
    config.fedsim.train.init_seed = derive_seed(master_seed, kInitStream);
}

void apply_paper_scale(AppConfig& config) {
    config.synth.noise_windows = 10000;
    config.synth.windows_per_gain = 1000;
}

AppConfig load_config(const std::filesystem::path& path) {
    AppConfig cfg = default_config();
    if (path.empty()) return cfg;

    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    require_keys(j, "", {"master_seed", "generate", "extract", "baseline", "fedsim"});

    std::uint64_t master = cfg.master_seed;
    read_key(j, "", "master_seed", master);
    reseed(cfg, master);

    if (j.contains("generate")) {
        const json& g = j.at("generate");
        require_keys(g, "generate",
                     {"noise_windows", "windows_per_gain", "gains_db", "samples_per_symbol",
                      "bt", "pulse_span_symbols", "sample_rate_hz", "center_freq_hz"});
        read_key(g, "generate", "noise_windows", cfg.synth.noise_windows);
        read_key(g, "generate", "windows_per_gain", cfg.synth.windows_per_gain);
        read_key(g, "generate", "gains_db", cfg.synth.gains_db);
        read_key(g, "generate", "samples_per_symbol", cfg.synth.gmsk.samples_per_symbol);
        read_key(g, "generate", "bt", cfg.synth.gmsk.bt);
        read_key(g, "generate", "pulse_span_symbols", cfg.synth.gmsk.pulse_span_symbols);
        read_key(g, "generate", "sample_rate_hz", cfg.synth.sample_rate_hz);
        read_key(g, "generate", "center_freq_hz", cfg.synth.center_freq_hz);
    }
    if (j.contains("extract")) {
        const json& e = j.at("extract");
        require_keys(e, "extract", {"n_channels", "channel_index", "max_lag"});
        read_key(e, "extract", "n_channels", cfg.features.n_channels);
        read_key(e, "extract", "channel_index", cfg.features.channel_index);
        read_key(e, "extract", "max_lag", cfg.features.max_lag);
        cfg.synth.n_channels = cfg.features.n_channels;
        cfg.synth.signal_channel = cfg.features.channel_index;
    }
    if (j.contains("baseline")) {
        const json& b = j.at("baseline");
        require_keys(b, "baseline",
                     {"pfa", "kfold", "learning_rate", "epochs", "init_scale", "mlp_hidden"});
        read_key(b, "baseline", "pfa", cfg.baseline.pfa);
        read_key(b, "baseline", "kfold", cfg.baseline.kfold);
        read_key(b, "baseline", "learning_rate", cfg.baseline.learning_rate);
        read_key(b, "baseline", "epochs", cfg.baseline.epochs);
        read_key(b, "baseline", "init_scale", cfg.baseline.init_scale);
        read_key(b, "baseline", "mlp_hidden", cfg.baseline.mlp_hidden);
    }
    if (j.contains("fedsim")) {
        const json& s = j.at("fedsim");
        require_keys(s, "fedsim",
                     {"n_sensors", "n_rounds", "train_fraction", "outlier_z",
                      "exclude_flagged", "pfa", "learning_rate", "epochs_per_batch",
                      "init_scale", "mlp_hidden", "scenarios"});
        read_key(s, "fedsim", "n_sensors", cfg.fedsim.n_sensors);
        read_key(s, "fedsim", "n_rounds", cfg.fedsim.n_rounds);
        read_key(s, "fedsim", "train_fraction", cfg.fedsim.train_fraction);
        read_key(s, "fedsim", "outlier_z", cfg.fedsim.outlier_z);
        read_key(s, "fedsim", "exclude_flagged", cfg.fedsim.exclude_flagged);
        read_key(s, "fedsim", "pfa", cfg.fedsim.pfa);
        read_key(s, "fedsim", "learning_rate", cfg.fedsim.train.learning_rate);
        read_key(s, "fedsim", "epochs_per_batch", cfg.fedsim.train.epochs_per_batch);
        read_key(s, "fedsim", "init_scale", cfg.fedsim.train.init_scale);
        read_key(s, "fedsim", "mlp_hidden", cfg.fedsim.shape.n_hidden);
        if (s.contains("scenarios")) {
            cfg.scenarios.clear();
            for (const auto& sc : s.at("scenarios")) {
                require_keys(sc, "fedsim.scenarios[]", {"model", "faulty"});
                Scenario scenario;
                std::string model = "logistic";
                read_key(sc, "fedsim.scenarios[]", "model", model);
                scenario.kind = learn::kind_from_name(model);
                std::vector<int> faulty;
                read_key(sc, "fedsim.scenarios[]", "faulty", faulty);
                scenario.faulty = std::set<int>(faulty.begin(), faulty.end());
                cfg.scenarios.push_back(scenario);
            }
        }
    }
    return cfg;
}

void cmd_generate(const AppConfig& config, const std::filesystem::path& out_dir) {
    iqgen::validate(config.synth);
    std::filesystem::create_directories(out_dir);

    ordered_json manifest;
    manifest["master_seed"] = config.master_seed;
    manifest["synth_config"] = synth_config_json(config.synth);
    manifest["captures"] = ordered_json::array();

    const std::size_t count = iqgen::capture_count(config.synth);
    for (std::size_t i = 0; i < count; ++i) {
        Capture cap = iqgen::synth_capture(config.synth, i);
        char stem[32];
        std::snprintf(stem, sizeof(stem), "capture_%03zu", i);
        const auto iq_path = out_dir / (std::string(stem) + ".iq");
        iqgen::write_iq(cap, iq_path);

        iqgen::CaptureMeta meta;
        meta.gain_db = cap.gain_db;
        meta.sample_rate_hz = cap.sample_rate_hz;
        meta.center_freq_hz = cap.center_freq_hz;
        meta.truth_occupied = cap.truth_occupied;
        meta.seed = cap.seed;
        iqgen::write_sidecar(meta, iqgen::sidecar_path(iq_path));

        ordered_json entry;
        entry["file"] = iq_path.filename().string();
        entry["sidecar"] = iqgen::sidecar_path(iq_path).filename().string();
        if (cap.gain_db.has_value())
            entry["gain_db"] = *cap.gain_db;
        else
            entry["gain_db"] = "noise";
        entry["seed"] = cap.seed;
        entry["windows"] = cap.samples.size() / kWindowLen;
        manifest["captures"].push_back(entry);
    }
    open_out(out_dir / "manifest.json") << manifest.dump(2) << "\n";
}

std::vector<FeatureRow> cmd_extract(const AppConfig& config,
                                    const std::filesystem::path& iq_dir,
                                    const std::filesystem::path& out_dir) {
    std::vector<std::filesystem::path> iq_files;
    if (std::filesystem::is_directory(iq_dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(iq_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".iq")
                iq_files.push_back(entry.path());
    }
    std::sort(iq_files.begin(), iq_files.end());
    if (iq_files.empty()) throw DataError("no IQ captures found in " + iq_dir.string());

    std::filesystem::create_directories(out_dir);
    const featex::FeatureExtractor extractor(config.features);

    std::vector<FeatureRow> rows;
    for (const auto& path : iq_files) {
        const auto meta = iqgen::read_sidecar(iqgen::sidecar_path(path));
        const Capture cap = iqgen::read_iq(path, meta);
        for (const auto& window : featex::window_split(cap))
            rows.push_back(extractor.extract(window));
    }

    const std::vector<FeatureRow> balanced = featex::balance_labels(rows);
    featex::write_dataset_csv(balanced, out_dir / "dataset.csv");

    // Row counts per label and gain, before and after balancing.
    auto gain_key = [](const std::optional<double>& g) {
        return g.has_value() ? fmt17(*g) : std::string("noise");
    };
    std::map<std::string, std::size_t> extracted, kept;
    for (const auto& r : rows) extracted[gain_key(r.gain_db)]++;
    for (const auto& r : balanced) kept[gain_key(r.gain_db)]++;

    ordered_json stats;
    stats["master_seed"] = config.master_seed;
    stats["n_channels"] = config.features.n_channels;
    stats["channel_index"] = config.features.channel_index;
    stats["max_lag"] = config.features.max_lag;
    std::size_t label0 = 0, label1 = 0;
    for (const auto& r : balanced) (r.label == 0 ? label0 : label1)++;
    stats["rows"] = balanced.size();
    stats["label0_rows"] = label0;
    stats["label1_rows"] = label1;
    stats["extracted_per_gain"] = extracted;
    stats["kept_per_gain"] = kept;
    open_out(out_dir / "dataset_stats.json") << stats.dump(2) << "\n";
    return balanced;
}

BaselineReport cmd_baseline(const AppConfig& config,
                            const std::filesystem::path& dataset_csv,
                            const std::filesystem::path& out_dir) {
    const auto rows = featex::read_dataset_csv(dataset_csv);
    if (rows.empty()) throw DataError("dataset is empty: " + dataset_csv.string());
    std::filesystem::create_directories(out_dir);

    BaselineReport rep;
    std::vector<double> noise_powers;
    for (const auto& r : rows)
        if (r.label == 0) noise_powers.push_back(r.power);
    const auto th = detect::calibrate_threshold(noise_powers, config.baseline.pfa);
    rep.energy_threshold = th.threshold;
    rep.energy_accuracy = detect::energy_accuracy(rows, th);

    learn::TrainConfig train_cfg;
    train_cfg.learning_rate = config.baseline.learning_rate;
    train_cfg.epochs_per_batch = config.baseline.epochs;
    train_cfg.init_seed = config.fedsim.train.init_seed;
    train_cfg.init_scale = config.baseline.init_scale;

    const learn::ModelShape lr_shape{learn::ModelKind::Logistic, 3, 0};
    const learn::ModelShape mlp_shape{learn::ModelKind::Mlp, 3, config.baseline.mlp_hidden};

    // Centralized reference: one 80/20 stratified split, evaluate on the
    // full dataset the way every other accuracy in the project is reported.
    {
        const auto [train_rows, test_rows] = stratified_split(
            rows, 0.8, derive_seed(config.master_seed, kBaselineStream));
        const auto stats = featex::normalize_fit(train_rows);
        const auto train_ex = to_examples(train_rows, stats);
        const auto all_ex = to_examples(rows, stats);
        rep.centralized_logistic = learn::accuracy(
            learn::train_batch(learn::init_model(lr_shape, train_cfg), train_ex, train_cfg),
            all_ex);
        rep.centralized_mlp = learn::accuracy(
            learn::train_batch(learn::init_model(mlp_shape, train_cfg), train_ex, train_cfg),
            all_ex);
    }

    // Stratified K-fold cross-validation, held-out accuracy per fold.
    const auto folds = fed::stratified_kfold(rows, config.baseline.kfold,
                                             derive_seed(config.master_seed, kBaselineStream, 1));
    for (const auto& fold : folds) {
        std::vector<FeatureRow> train_rows, val_rows;
        for (auto i : fold.train) train_rows.push_back(rows[i]);
        for (auto i : fold.validation) val_rows.push_back(rows[i]);
        const auto stats = featex::normalize_fit(train_rows);
        const auto train_ex = to_examples(train_rows, stats);
        const auto val_ex = to_examples(val_rows, stats);
        rep.kfold_logistic.push_back(learn::accuracy(
            learn::train_batch(learn::init_model(lr_shape, train_cfg), train_ex, train_cfg),
            val_ex));
        rep.kfold_mlp.push_back(learn::accuracy(
            learn::train_batch(learn::init_model(mlp_shape, train_cfg), train_ex, train_cfg),
            val_ex));
    }

    auto mean_std = [](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= n;
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        return std::pair<double, double>(mean, std::sqrt(var / n));
    };
    const auto [lr_mean, lr_std] = mean_std(rep.kfold_logistic);
    const auto [mlp_mean, mlp_std] = mean_std(rep.kfold_mlp);

    ordered_json j;
    j["master_seed"] = config.master_seed;
    j["energy"] = {{"pfa", config.baseline.pfa},
                   {"threshold", rep.energy_threshold},
                   {"accuracy", rep.energy_accuracy}};
    j["centralized"] = {{"logistic", rep.centralized_logistic},
                        {"mlp", rep.centralized_mlp}};
    j["kfold"] = ordered_json{{"k", config.baseline.kfold},
                              {"logistic", {{"fold_accuracy", rep.kfold_logistic},
                                            {"mean", lr_mean},
                                            {"std", lr_std}}},
                              {"mlp", {{"fold_accuracy", rep.kfold_mlp},
                                       {"mean", mlp_mean},
                                       {"std", mlp_std}}}};
    open_out(out_dir / "baseline_report.json") << j.dump(2) << "\n";
    return rep;
}

void write_experiment_report(const fed::ExperimentReport& report,
                             const std::filesystem::path& json_path,
                             const std::filesystem::path& rounds_csv_path) {
    ordered_json j;
    j["config"] = fed_config_json(report.config);
    j["energy_threshold"] = report.energy_threshold;
    j["energy_baseline"] = report.energy_accuracy;
    j["centralized_accuracy"] = {{"logistic", report.centralized_logistic},
                                 {"mlp", report.centralized_mlp}};
    j["rounds"] = ordered_json::array();
    for (const auto& r : report.rounds) {
        ordered_json jr;
        jr["round"] = r.round;
        jr["mean_fed_accuracy"] = r.mean_fed_accuracy;
        jr["mean_shadow_accuracy"] = r.mean_shadow_accuracy;
        jr["per_sensor"] = ordered_json::array();
        for (const auto& s : r.per_sensor) {
            jr["per_sensor"].push_back(ordered_json{{"sensor_id", s.sensor_id},
                                                    {"fed_accuracy", s.fed_accuracy},
                                                    {"shadow_accuracy", s.shadow_accuracy},
                                                    {"coef_distance", s.coef_distance},
                                                    {"flagged", s.flagged}});
        }
        j["rounds"].push_back(jr);
    }
    j["final"] = {{"mean_fed", report.final_mean_fed},
                  {"mean_shadow", report.final_mean_shadow}};
    open_out(json_path) << j.dump(2) << "\n";

    auto csv = open_out(rounds_csv_path);
    csv << "round,sensor_id,fed_accuracy,shadow_accuracy,coef_distance,flagged\n";
    for (const auto& r : report.rounds)
        for (const auto& s : r.per_sensor)
            csv << r.round << ',' << s.sensor_id << ',' << fmt17(s.fed_accuracy) << ','
                << fmt17(s.shadow_accuracy) << ',' << fmt17(s.coef_distance) << ','
                << (s.flagged ? 1 : 0) << '\n';
}

fed::ExperimentReport read_experiment_report(const std::filesystem::path& json_path) {
    std::ifstream f(json_path);
    if (!f) throw DataError("cannot open report: " + json_path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception&) {
        throw DataError("malformed report: " + json_path.string());
    }
    fed::ExperimentReport rep;
    try {
        const json& c = j.at("config");
        rep.config.n_sensors = c.at("n_sensors").get<int>();
        rep.config.n_rounds = c.at("n_rounds").get<int>();
        const auto faulty = c.at("faulty_ids").get<std::vector<int>>();
        rep.config.faulty_ids = std::set<int>(faulty.begin(), faulty.end());
        rep.config.experiment_seed = c.at("experiment_seed").get<std::uint64_t>();
        rep.config.shuffle_seed = c.at("shuffle_seed").get<std::uint64_t>();
        rep.config.train_fraction = c.at("train_fraction").get<double>();
        rep.config.outlier_z = c.at("outlier_z").get<double>();
        rep.config.exclude_flagged = c.at("exclude_flagged").get<bool>();
        rep.config.pfa = c.at("pfa").get<double>();
        rep.config.shape.kind = learn::kind_from_name(c.at("model").get<std::string>());
        rep.config.shape.n_inputs = c.at("n_inputs").get<int>();
        rep.config.shape.n_hidden = c.at("n_hidden").get<int>();
        rep.config.train.learning_rate = c.at("learning_rate").get<double>();
        rep.config.train.epochs_per_batch = c.at("epochs_per_batch").get<int>();
        rep.config.train.init_seed = c.at("init_seed").get<std::uint64_t>();
        rep.config.train.init_scale = c.at("init_scale").get<double>();
        rep.energy_threshold = j.at("energy_threshold").get<double>();
        rep.energy_accuracy = j.at("energy_baseline").get<double>();
        rep.centralized_logistic = j.at("centralized_accuracy").at("logistic").get<double>();
        rep.centralized_mlp = j.at("centralized_accuracy").at("mlp").get<double>();
        for (const auto& jr : j.at("rounds")) {
            fed::RoundReport r;
            r.round = jr.at("round").get<int>();
            r.mean_fed_accuracy = jr.at("mean_fed_accuracy").get<double>();
            r.mean_shadow_accuracy = jr.at("mean_shadow_accuracy").get<double>();
            for (const auto& js : jr.at("per_sensor")) {
                fed::SensorRound s;
                s.sensor_id = js.at("sensor_id").get<int>();
                s.fed_accuracy = js.at("fed_accuracy").get<double>();
                s.shadow_accuracy = js.at("shadow_accuracy").get<double>();
                s.coef_distance = js.at("coef_distance").get<double>();
                s.flagged = js.at("flagged").get<bool>();
                r.per_sensor.push_back(s);
            }
            rep.rounds.push_back(std::move(r));
        }
        rep.final_mean_fed = j.at("final").at("mean_fed").get<double>();
        rep.final_mean_shadow = j.at("final").at("mean_shadow").get<double>();
    } catch (const json::exception&) {
        throw DataError("malformed report: " + json_path.string());
    }
    return rep;
}

std::vector<ScenarioSummary> cmd_fedsim(const AppConfig& config,
                                        const std::filesystem::path& dataset_csv,
                                        const std::filesystem::path& out_dir) {
    const auto rows = featex::read_dataset_csv(dataset_csv);
    std::filesystem::create_directories(out_dir);
    if (config.scenarios.empty()) throw ConfigError("no fedsim scenarios configured");

    std::vector<ScenarioSummary> summaries;
    for (const auto& scenario : config.scenarios) {
        fed::FedConfig fc = config.fedsim;
        fc.shape.kind = scenario.kind;
        if (scenario.kind == learn::ModelKind::Logistic) fc.shape.n_hidden = 0;
        else if (fc.shape.n_hidden < 1) fc.shape.n_hidden = 4;
        fc.faulty_ids = scenario.faulty;

        const auto report = fed::run_experiment(rows, fc);
        const std::string name = scenario_name(scenario);
        write_experiment_report(report, out_dir / ("fed_" + name + ".json"),
                                out_dir / ("fed_" + name + "_rounds.csv"));

        ScenarioSummary s;
        s.name = name;
        s.kind = scenario.kind;
        s.n_faulty = scenario.faulty.size();
        s.mean_fed = report.final_mean_fed;
        s.mean_shadow = report.final_mean_shadow;
        s.gap = s.mean_fed - s.mean_shadow;
        summaries.push_back(s);
    }

    auto csv = open_out(out_dir / "summary.csv");
    csv << "scenario,model,n_faulty,mean_fed,mean_shadow,gap\n";
    for (const auto& s : summaries)
        csv << s.name << ',' << learn::kind_name(s.kind) << ',' << s.n_faulty << ','
            << fmt17(s.mean_fed) << ',' << fmt17(s.mean_shadow) << ',' << fmt17(s.gap)
            << '\n';

    auto txt = open_out(out_dir / "summary.txt");
    std::ostringstream table;
    table << std::left << std::setw(18) << "scenario" << std::right << std::setw(10)
          << "mean_fed" << std::setw(13) << "mean_shadow" << std::setw(9) << "gap"
          << "\n";
    table << std::fixed << std::setprecision(4);
    for (const auto& s : summaries)
        table << std::left << std::setw(18) << s.name << std::right << std::setw(10)
              << s.mean_fed << std::setw(13) << s.mean_shadow << std::setw(9) << s.gap
              << "\n";
    txt << table.str();
    return summaries;
}

void cmd_report(const std::vector<std::filesystem::path>& report_files,
                const std::filesystem::path& out_dir, std::ostream& table_out) {
    if (report_files.empty()) throw ConfigError("no report files given");
    std::filesystem::create_directories(out_dir);

    table_out << std::left << std::setw(22) << "report" << std::right << std::setw(10)
              << "final_fed" << std::setw(14) << "final_shadow" << std::setw(9) << "gap"
              << std::setw(10) << "energy" << "\n";
    for (const auto& path : report_files) {
        const auto rep = read_experiment_report(path);
        std::string stem = path.stem().string();
        auto csv = open_out(out_dir / (stem + "_curve.csv"));
        csv << "round,mean_fed,mean_shadow\n";
        for (const auto& r : rep.rounds)
            csv << r.round << ',' << fmt17(r.mean_fed_accuracy) << ','
                << fmt17(r.mean_shadow_accuracy) << '\n';

        std::ostringstream line;
        line << std::left << std::setw(22) << stem << std::right << std::fixed
             << std::setprecision(4) << std::setw(10) << rep.final_mean_fed
             << std::setw(14) << rep.final_mean_shadow << std::setw(9)
             << rep.final_mean_fed - rep.final_mean_shadow << std::setw(10)
             << rep.energy_accuracy;
        table_out << line.str() << "\n";
    }
}

} // namespace specsense::harness

#include "specsense/learn.hpp"

#include "specsense/errors.hpp"
#include "specsense/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace specsense::learn {

namespace {

constexpr double kProbClamp = 1e-12;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double clamp_prob(double p) {
    if (p < kProbClamp) return kProbClamp;
    if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return p;
}

// log(1 + e^z) without overflow.
double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

// Coefficient layout offsets for the MLP codec.
struct MlpLayout {
    int d, h;
    std::size_t w1(int unit, int input) const {
        return static_cast<std::size_t>(unit * d + input);
    }
    std::size_t b1(int unit) const { return static_cast<std::size_t>(h * d + unit); }
    std::size_t w2(int unit) const { return static_cast<std::size_t>(h * d + h + unit); }
    std::size_t b2() const { return static_cast<std::size_t>(h * d + 2 * h); }
};

double forward_mlp(const CoefVector& m, std::span<const double> x,
                   std::vector<double>* hidden_out) {
    const MlpLayout L{m.shape.n_inputs, m.shape.n_hidden};
    if (hidden_out) hidden_out->resize(static_cast<std::size_t>(L.h));
    double z2 = m.values[L.b2()];
    for (int u = 0; u < L.h; ++u) {
        double z1 = m.values[L.b1(u)];
        for (int i = 0; i < L.d; ++i) z1 += m.values[L.w1(u, i)] * x[static_cast<std::size_t>(i)];
        const double a = sigmoid(z1);
        if (hidden_out) (*hidden_out)[static_cast<std::size_t>(u)] = a;
        z2 += m.values[L.w2(u)] * a;
    }
    return z2;
}

double raw_output(const CoefVector& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.shape.n_inputs)
        throw DataError("feature vector length does not match model inputs");
    if (m.shape.kind == ModelKind::Logistic) {
        const auto d = static_cast<std::size_t>(m.shape.n_inputs);
        double z = m.values[d];
        for (std::size_t i = 0; i < d; ++i) z += m.values[i] * x[i];
        return z;
    }
    return forward_mlp(m, x, nullptr);
}

void check_batch(const CoefVector& model, std::span<const Example> batch) {
    if (batch.empty()) throw DataError("empty batch");
    for (const auto& ex : batch) {
        if (static_cast<int>(ex.x.size()) != model.shape.n_inputs)
            throw DataError("feature vector length does not match model inputs");
        if (ex.y != 0 && ex.y != 1) throw DataError("labels must be 0 or 1");
    }
}

} // namespace

std::size_t ModelShape::coef_count() const {
    if (kind == ModelKind::Logistic) return static_cast<std::size_t>(n_inputs) + 1;
    return static_cast<std::size_t>(n_inputs + 1) * static_cast<std::size_t>(n_hidden) +
           static_cast<std::size_t>(n_hidden) + 1;
}

void validate(const ModelShape& shape) {
    if (shape.n_inputs < 1) throw ConfigError("n_inputs must be >= 1");
    if (shape.kind == ModelKind::Mlp && shape.n_hidden < 1)
        throw ConfigError("n_hidden must be >= 1 for MLP");
}

void validate(const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (config.epochs_per_batch < 1) throw ConfigError("epochs_per_batch must be >= 1");
    if (config.init_scale < 0.0) throw ConfigError("init_scale must be >= 0");
}

CoefVector init_model(const ModelShape& shape, const TrainConfig& config) {
    validate(shape);
    validate(config);
    CoefVector m;
    m.shape = shape;
    m.values.assign(shape.coef_count(), 0.0);
    if (shape.kind == ModelKind::Mlp) {
        const MlpLayout L{shape.n_inputs, shape.n_hidden};
        Rng rng(derive_seed(config.init_seed, 0x1417));
        for (int u = 0; u < L.h; ++u)
            for (int i = 0; i < L.d; ++i)
                m.values[L.w1(u, i)] = rng.uniform(-config.init_scale, config.init_scale);
        for (int u = 0; u < L.h; ++u)
            m.values[L.w2(u)] = rng.uniform(-config.init_scale, config.init_scale);
        // biases stay zero
    }
    return m;
}

double predict(const CoefVector& model, std::span<const double> features) {
    return clamp_prob(sigmoid(raw_output(model, features)));
}

int classify(const CoefVector& model, std::span<const double> features, double cutoff) {
    if (!(cutoff > 0.0 && cutoff < 1.0)) throw ConfigError("cutoff must be in (0, 1)");
    return predict(model, features) >= cutoff ? 1 : 0;
}

double loss(const CoefVector& model, std::span<const Example> batch) {
    check_batch(model, batch);
    double acc = 0.0;
    for (const auto& ex : batch) {
        const double z = raw_output(model, ex.x);
        acc += softplus(z) - (ex.y ? z : 0.0);
    }
    return acc / static_cast<double>(batch.size());
}

CoefVector gradient(const CoefVector& model, std::span<const Example> batch) {
    check_batch(model, batch);
    CoefVector g;
    g.shape = model.shape;
    g.values.assign(model.values.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    if (model.shape.kind == ModelKind::Logistic) {
        const auto d = static_cast<std::size_t>(model.shape.n_inputs);
        for (const auto& ex : batch) {
            const double p = sigmoid(raw_output(model, ex.x));
            const double resid = (p - static_cast<double>(ex.y)) * inv_n;
            for (std::size_t i = 0; i < d; ++i) g.values[i] += resid * ex.x[i];
            g.values[d] += resid;
        }
        return g;
    }

    const MlpLayout L{model.shape.n_inputs, model.shape.n_hidden};
    std::vector<double> hidden;
    for (const auto& ex : batch) {
        const double z2 = forward_mlp(model, ex.x, &hidden);
        const double p = sigmoid(z2);
        const double d_out = (p - static_cast<double>(ex.y)) * inv_n;
        g.values[L.b2()] += d_out;
        for (int u = 0; u < L.h; ++u) {
            const double a = hidden[static_cast<std::size_t>(u)];
            g.values[L.w2(u)] += d_out * a;
            const double d_hid = d_out * model.values[L.w2(u)] * a * (1.0 - a);
            g.values[L.b1(u)] += d_hid;
            for (int i = 0; i < L.d; ++i)
                g.values[L.w1(u, i)] += d_hid * ex.x[static_cast<std::size_t>(i)];
        }
    }
    return g;
}

CoefVector train_batch(const CoefVector& model, std::span<const Example> batch,
                       const TrainConfig& config) {
    validate(config);
    check_batch(model, batch);
    const double loss_before = loss(model, batch);
    if (!std::isfinite(loss_before)) throw NumericError("diverged");

    double lr = config.learning_rate;
    for (int attempt = 0; attempt <= 8; ++attempt) {
        CoefVector m = model;
        bool finite = true;
        for (int e = 0; e < config.epochs_per_batch && finite; ++e) {
            const CoefVector g = gradient(m, batch);
            for (std::size_t i = 0; i < m.values.size(); ++i) {
                m.values[i] -= lr * g.values[i];
                if (!std::isfinite(m.values[i])) finite = false;
            }
        }
        if (finite) {
            const double loss_after = loss(m, batch);
            if (std::isfinite(loss_after) && loss_after <= loss_before) return m;
        }
        lr *= 0.5;
    }
    return model; // every step made things worse; keep the input coefficients
}

std::vector<double> flatten(const CoefVector& model) { return model.values; }

CoefVector unflatten(const ModelShape& shape, std::span<const double> values) {
    validate(shape);
    if (values.size() != shape.coef_count())
        throw DataError("coefficient count does not match model shape");
    CoefVector m;
    m.shape = shape;
    m.values.assign(values.begin(), values.end());
    return m;
}

double accuracy(const CoefVector& model, std::span<const Example> rows) {
    if (rows.empty()) throw DataError("empty evaluation set");
    std::size_t correct = 0;
    for (const auto& ex : rows)
        if (classify(model, ex.x) == ex.y) ++correct;
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

std::string kind_name(ModelKind kind) {
    return kind == ModelKind::Logistic ? "logistic" : "mlp";
}

ModelKind kind_from_name(const std::string& name) {
    if (name == "logistic") return ModelKind::Logistic;
    if (name == "mlp") return ModelKind::Mlp;
    throw ConfigError("unknown model kind: " + name);
}

void save_model(const CoefVector& model, std::uint64_t init_seed,
                const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(model.shape.kind);
    j["n_inputs"] = model.shape.n_inputs;
    j["n_hidden"] = model.shape.n_hidden;
    j["values"] = model.values;
    j["init_seed"] = init_seed;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    f << j.dump(2) << "\n";
}

LoadedModel load_model(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open model file: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
        LoadedModel out;
        ModelShape shape;
        shape.kind = kind_from_name(j.at("kind").get<std::string>());
        shape.n_inputs = j.at("n_inputs").get<int>();
        shape.n_hidden = j.at("n_hidden").get<int>();
        const auto values = j.at("values").get<std::vector<double>>();
        out.model = unflatten(shape, values);
        out.init_seed = j.at("init_seed").get<std::uint64_t>();
        return out;
    } catch (const nlohmann::json::exception&) {
        throw DataError("corrupt model file: " + path.string());
    }
}

} // namespace specsense::learn

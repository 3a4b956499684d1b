#include "bdaudit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "bdaudit/errors.hpp"
#include "bdaudit/trigger.hpp"

namespace bdaudit {

namespace {

// Standardized design matrix with a trailing bias column of ones.
struct DesignMatrix {
    std::size_t n = 0;
    std::size_t cols = 0;  // d + 1
    std::vector<double> x;

    double* row(std::size_t i) { return x.data() + i * cols; }
    const double* row(std::size_t i) const { return x.data() + i * cols; }
};

DesignMatrix build_design(const Dataset& ds, const std::vector<double>& mean,
                          const std::vector<double>& stddev) {
    const std::size_t n = ds.n_samples();
    const std::size_t d = ds.n_features();
    DesignMatrix m;
    m.n = n;
    m.cols = d + 1;
    m.x.resize(n * m.cols);
    for (std::size_t i = 0; i < n; ++i) {
        double* r = m.row(i);
        for (std::size_t j = 0; j < d; ++j) r[j] = (ds.at(i, j) - mean[j]) / stddev[j];
        r[d] = 1.0;
    }
    return m;
}

// loss + gradient of softmax cross-entropy with L2 on non-bias weights
double pass(const DesignMatrix& xm, const std::vector<int>& y, std::size_t k, double lambda,
            const std::vector<double>& w, std::vector<double>* grad) {
    const std::size_t n = xm.n;
    const std::size_t cols = xm.cols;
    const std::size_t d = cols - 1;
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    std::vector<double> logit(k);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* xr = xm.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double* wc = w.data() + c * cols;
            double z = 0.0;
            for (std::size_t j = 0; j < cols; ++j) z += wc[j] * xr[j];
            logit[c] = z;
            mx = std::max(mx, z);
        }
        double denom = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            logit[c] = std::exp(logit[c] - mx);
            denom += logit[c];
        }
        const auto yi = static_cast<std::size_t>(y[i]);
        loss += -std::log(logit[yi] / denom);
        if (grad) {
            for (std::size_t c = 0; c < k; ++c) {
                const double p = logit[c] / denom;
                const double delta = p - (c == yi ? 1.0 : 0.0);
                double* gc = grad->data() + c * cols;
                for (std::size_t j = 0; j < cols; ++j) gc[j] += delta * xr[j];
            }
        }
    }
    loss /= static_cast<double>(n);
    double reg = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < d; ++j) {
            const double wj = w[c * cols + j];
            reg += wj * wj;
        }
    loss += 0.5 * lambda * reg;
    if (grad) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < cols; ++j) {
                double& g = (*grad)[c * cols + j];
                g *= inv_n;
                if (j < d) g += lambda * w[c * cols + j];
            }
    }
    return loss;
}

}  // namespace

int ClassifierModel::predict(std::span<const double> feature_row) const {
    const auto z = logits(feature_row);
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.size(); ++c)
        if (z[c] > z[best]) best = c;
    return static_cast<int>(best);
}

std::vector<double> ClassifierModel::logits(std::span<const double> feature_row) const {
    if (feature_row.size() != n_features)
        throw ShapeError("predict: feature row length does not match model dimension");
    const std::size_t cols = n_features + 1;
    std::vector<double> z(n_classes, 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double* wc = weights.data() + c * cols;
        double acc = wc[n_features];  // bias
        for (std::size_t j = 0; j < n_features; ++j)
            acc += wc[j] * (feature_row[j] - feature_mean[j]) / feature_std[j];
        z[c] = acc;
    }
    return z;
}

ClassifierModel train(const Dataset& train_set, const TrainConfig& config,
                      const std::vector<int>* target_override, std::size_t n_target_classes) {
    if (!(config.learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
    if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (config.l2_penalty < 0.0) throw ConfigError("train: l2 penalty must be non-negative");
    train_set.validate();

    const std::size_t n = train_set.n_samples();
    const std::size_t d = train_set.n_features();
    const std::vector<int>& y = target_override ? *target_override : train_set.labels;
    const std::size_t k = target_override ? n_target_classes : train_set.n_classes();
    if (k < 2) throw ConfigError("train: need at least 2 target classes");
    if (y.size() != n) throw ShapeError("train: target vector length mismatch");
    std::set<int> populated(y.begin(), y.end());
    if (populated.size() < 2)
        throw DegenerateError("train: targets must cover at least 2 classes");

    ClassifierModel model;
    model.n_classes = k;
    model.n_features = d;
    model.config = config;
    model.feature_mean.assign(d, 0.0);
    model.feature_std.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += train_set.at(i, j);
        const double mean = sum / static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = train_set.at(i, j) - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(n);
        model.feature_mean[j] = mean;
        model.feature_std[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    const DesignMatrix xm = build_design(train_set, model.feature_mean, model.feature_std);
    const std::size_t cols = d + 1;
    model.weights.assign(k * cols, 0.0);
    std::vector<double> grad(k * cols, 0.0);

    double prev_loss = std::numeric_limits<double>::infinity();
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double loss = pass(xm, y, k, config.l2_penalty, model.weights, &grad);
        if (!std::isfinite(loss))
            throw TrainingDivergenceError(
                "train: non-finite loss at epoch " + std::to_string(epoch),
                static_cast<int>(epoch));
        for (std::size_t idx = 0; idx < model.weights.size(); ++idx)
            model.weights[idx] -= config.learning_rate * grad[idx];
        model.epochs_run = epoch + 1;
        model.final_loss = loss;
        if (std::abs(prev_loss - loss) < config.tolerance) break;
        prev_loss = loss;
    }
    // the update after the last measured loss can still have diverged
    const double final_check = pass(xm, y, k, config.l2_penalty, model.weights, nullptr);
    if (!std::isfinite(final_check))
        throw TrainingDivergenceError(
            "train: non-finite loss at epoch " + std::to_string(model.epochs_run),
            static_cast<int>(model.epochs_run));
    model.final_loss = final_check;
    return model;
}

double accuracy(const ClassifierModel& model, const Dataset& dataset) {
    if (dataset.n_samples() == 0) throw SizeError("accuracy: empty dataset");
    if (dataset.n_features() != model.n_features)
        throw ShapeError("accuracy: dataset dimension mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.n_samples(); ++i)
        if (model.predict(dataset.row(i)) == dataset.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(dataset.n_samples());
}

double attack_accuracy(const ClassifierModel& model, const Dataset& test_set,
                       const Trigger& trigger, int target_label) {
    if (test_set.n_samples() == 0) throw SizeError("attack_accuracy: empty test set");
    if (test_set.n_features() != model.n_features)
        throw ShapeError("attack_accuracy: dataset dimension mismatch");
    std::size_t eligible = 0, flipped = 0;
    std::vector<double> row;
    for (std::size_t i = 0; i < test_set.n_samples(); ++i) {
        if (test_set.labels[i] == target_label) continue;
        const auto src = test_set.row(i);
        row.assign(src.begin(), src.end());
        apply_trigger(row, trigger);
        ++eligible;
        if (model.predict(row) == target_label) ++flipped;
    }
    if (eligible == 0) throw SizeError("attack_accuracy: no eligible non-target samples");
    return static_cast<double>(flipped) / static_cast<double>(eligible);
}

LossGradient loss_and_gradient(const ClassifierModel& model, const Dataset& dataset,
                               const std::vector<int>* target_override) {
    if (dataset.n_features() != model.n_features)
        throw ShapeError("loss_and_gradient: dataset dimension mismatch");
    const std::vector<int>& y = target_override ? *target_override : dataset.labels;
    if (y.size() != dataset.n_samples())
        throw ShapeError("loss_and_gradient: target vector length mismatch");
    const DesignMatrix xm = build_design(dataset, model.feature_mean, model.feature_std);
    LossGradient out;
    out.gradient.assign(model.weights.size(), 0.0);
    out.loss = pass(xm, y, model.n_classes, model.config.l2_penalty, model.weights, &out.gradient);
    return out;
}

std::string ClassifierModel::to_json() const {
    nlohmann::json j;
    j["schema_version"] = "1";
    j["n_classes"] = n_classes;
    j["n_features"] = n_features;
    j["weights"] = weights;
    j["feature_mean"] = feature_mean;
    j["feature_std"] = feature_std;
    j["config"] = {{"learning_rate", config.learning_rate},
                   {"epochs", config.epochs},
                   {"l2_penalty", config.l2_penalty},
                   {"tolerance", config.tolerance},
                   {"seed", config.seed}};
    j["final_loss"] = final_loss;
    j["epochs_run"] = epochs_run;
    return j.dump(2);
}

ClassifierModel ClassifierModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ClassifierModel m;
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_std = j.at("feature_std").get<std::vector<double>>();
    const auto& c = j.at("config");
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.epochs = c.at("epochs").get<std::size_t>();
    m.config.l2_penalty = c.at("l2_penalty").get<double>();
    m.config.tolerance = c.at("tolerance").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.final_loss = j.value("final_loss", 0.0);
    m.epochs_run = j.value("epochs_run", std::size_t{0});
    if (m.weights.size() != m.n_classes * (m.n_features + 1))
        throw ShapeError("model json: weight matrix shape mismatch");
    return m;
}

}  // namespace bdaudit

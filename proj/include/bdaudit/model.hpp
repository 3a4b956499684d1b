#ifndef BDAUDIT_MODEL_HPP
#define BDAUDIT_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bdaudit/dataset.hpp"

namespace bdaudit {

struct Trigger;  // trigger.hpp

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 500;
    double l2_penalty = 1e-4;
    double tolerance = 1e-8;  // stop when |loss delta| falls below this
    std::uint64_t seed = 0;
};

// Multinomial logistic regression trained by full-batch gradient descent on
// softmax cross-entropy. Features are standardized per column with statistics
// from the training set, stored in the model.
class ClassifierModel {
public:
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::vector<double> weights;  // k x (d+1), last column is the bias
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    TrainConfig config;
    double final_loss = 0.0;
    std::size_t epochs_run = 0;

    double weight(std::size_t c, std::size_t j) const { return weights[c * (n_features + 1) + j]; }

    // argmax over softmax logits, ties to the lowest class index
    int predict(std::span<const double> feature_row) const;

    std::vector<double> logits(std::span<const double> feature_row) const;

    std::string to_json() const;
    static ClassifierModel from_json(const std::string& text);
};

// Optional target override lets the same trainer fit an attribute instead of
// the class label (needed for the independent attribute model).
ClassifierModel train(const Dataset& train_set, const TrainConfig& config,
                      const std::vector<int>* target_override = nullptr,
                      std::size_t n_target_classes = 0);

double accuracy(const ClassifierModel& model, const Dataset& dataset);

// Fraction of triggered non-target test samples classified as target_label.
// True-target samples are excluded so the metric measures trigger-induced flips.
double attack_accuracy(const ClassifierModel& model, const Dataset& test_set,
                       const Trigger& trigger, int target_label);

struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;  // k x (d+1)
};

// Regularized cross-entropy and its exact analytic gradient at the model's
// current weights, over the (standardized) dataset.
LossGradient loss_and_gradient(const ClassifierModel& model, const Dataset& dataset,
                               const std::vector<int>* target_override = nullptr);

}  // namespace bdaudit

#endif  // BDAUDIT_MODEL_HPP

#pragma once

#include "divrff/features.hpp"
#include "divrff/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace divrff {

using Eigen::MatrixXd;

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
    int epochs = 50;
    int batch = 64;
    double learning_rate = 1e-3;
    double l2 = 0.1;
    double label_smoothing = 0.1;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Adam;
    /// Per-class fraction held out to pick the best epoch. Zero disables
    /// the split and keeps the last epoch.
    double validation_fraction = 0.1;
    /// Z-score features with training-set statistics stored in the model.
    bool standardize = true;

    void validate() const;
};

/// Multinomial logistic regression. Weights act on standardized features.
struct SoftmaxModel {
    MatrixXd weights;  // classes x dim
    RVector bias;      // classes
    std::vector<std::string> classes;
    Extractor trained_on = Extractor::RD_LTF;
    RVector feature_mean;
    RVector feature_scale;
    TrainConfig config;
    int best_epoch = 0;

    Index num_classes() const { return weights.rows(); }
    Index dim() const { return weights.cols(); }
    void validate() const;
};

struct LabeledFeature {
    FeatureVector feature;
    std::string label;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
};

/// Mean label-smoothed cross-entropy over rows of `x` plus l2 * ||W||^2.
/// The bias is not regularized. Gradients are written when non-null.
double loss_and_gradient(const MatrixXd& weights, const RVector& bias, const MatrixXd& x,
                         const std::vector<int>& labels, double l2, double label_smoothing,
                         MatrixXd* grad_weights = nullptr, RVector* grad_bias = nullptr);

/// Classes are ordered by first appearance in `data`. Throws Error(Train).
SoftmaxModel train(const std::vector<LabeledFeature>& data, const TrainConfig& cfg = {},
                   TrainHistory* history = nullptr);

/// Softmax probabilities in class order. Throws Error(Predict).
RVector predict_scores(const SoftmaxModel& model, const FeatureVector& feature);

std::string predict_label(const SoftmaxModel& model, const FeatureVector& feature);

/// Index of the largest entry of a + b; the lowest index wins a tie.
Index fused_argmax(const RVector& a, const RVector& b);

/// Sums both branches' probabilities and returns the arg-max class.
/// Throws Error(Fuse) when the class lists differ.
std::string fuse_and_classify(const SoftmaxModel& stf_model, const SoftmaxModel& ltf_model,
                              const FeatureVector& stf_feature, const FeatureVector& ltf_feature);

/// Fraction of correctly labeled samples. Throws Error(Eval) on empty input.
double evaluate(const SoftmaxModel& model, const std::vector<LabeledFeature>& test);

struct FusedSample {
    FeatureVector stf;
    FeatureVector ltf;
    std::string label;
};

double evaluate_fused(const SoftmaxModel& stf_model, const SoftmaxModel& ltf_model,
                      const std::vector<FusedSample>& test);

/// Versioned JSON document.
std::string model_to_json(const SoftmaxModel& model);
SoftmaxModel model_from_json(const std::string& text);

}  // namespace divrff

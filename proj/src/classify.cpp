// SPDX-License-Identifier: Apache-2.0

#include "divrff/classify.hpp"

#include "divrff/error.hpp"
#include "divrff/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace divrff {
namespace {

using nlohmann::json;

constexpr int kModelFormatVersion = 1;

// Row-wise softmax of logits = x W^T + b, computed stably.
MatrixXd softmax_rows(const MatrixXd& weights, const RVector& bias, const MatrixXd& x) {
    MatrixXd z = x * weights.transpose();
    z.rowwise() += bias.transpose();
    for (Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        z.row(i) = (z.row(i).array() - m).exp();
        z.row(i) /= z.row(i).sum();
    }
    return z;
}

RVector standardize(const SoftmaxModel& m, const RVector& v) {
    return ((v - m.feature_mean).array() / m.feature_scale.array()).matrix();
}

struct Split {
    std::vector<Index> train, validation;
};

Split stratified_split(const std::vector<int>& labels, int num_classes, double fraction, Rng& rng) {
    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));
    Split s;
    for (auto& idx : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(idx.size())));
        if (n_val >= idx.size()) n_val = idx.size() - 1;
        s.validation.insert(s.validation.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.validation.begin(), s.validation.end());
    return s;
}

MatrixXd gather_rows(const MatrixXd& x, const std::vector<Index>& idx, std::size_t begin, std::size_t end) {
    MatrixXd out(static_cast<Index>(end - begin), x.cols());
    for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Index>(i - begin)) = x.row(idx[i]);
    return out;
}

std::vector<int> gather(const std::vector<int>& y, const std::vector<Index>& idx, std::size_t begin,
                        std::size_t end) {
    std::vector<int> out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) out.push_back(y[static_cast<std::size_t>(idx[i])]);
    return out;
}

json matrix_json(const MatrixXd& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const RVector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

RVector vector_from(const json& j) {
    RVector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
    return v;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw Error(ErrorKind::Config, "epochs must be >= 1");
    if (batch < 1) throw Error(ErrorKind::Config, "batch must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw Error(ErrorKind::Config, "learning_rate must be positive");
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error(ErrorKind::Config, "l2 must be nonnegative");
    if (!(label_smoothing >= 0.0 && label_smoothing < 0.5))
        throw Error(ErrorKind::Config, "label_smoothing must lie in [0, 0.5)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw Error(ErrorKind::Config, "validation_fraction must lie in [0, 1)");
}

void SoftmaxModel::validate() const {
    if (classes.empty()) throw Error(ErrorKind::Predict, "model has no classes");
    std::vector<std::string> sorted = classes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error(ErrorKind::Predict, "model class labels are not unique");
    if (weights.rows() != static_cast<Index>(classes.size()) || bias.size() != weights.rows() ||
        feature_mean.size() != weights.cols() || feature_scale.size() != weights.cols())
        throw Error(ErrorKind::Predict, "model parameter shapes are inconsistent");
    if (!weights.allFinite() || !bias.allFinite() || !feature_mean.allFinite() || !feature_scale.allFinite())
        throw Error(ErrorKind::Predict, "model parameters are not finite");
    if ((feature_scale.array() <= 0.0).any()) throw Error(ErrorKind::Predict, "feature scales must be positive");
}

double loss_and_gradient(const MatrixXd& weights, const RVector& bias, const MatrixXd& x,
                         const std::vector<int>& labels, double l2, double label_smoothing,
                         MatrixXd* grad_weights, RVector* grad_bias) {
    const Index n = x.rows();
    const Index c = weights.rows();
    if (n == 0 || static_cast<Index>(labels.size()) != n)
        throw Error(ErrorKind::Train, "loss needs one label per nonempty row");
    const MatrixXd p = softmax_rows(weights, bias, x);
    MatrixXd q = MatrixXd::Constant(n, c, label_smoothing / static_cast<double>(c));
    for (Index i = 0; i < n; ++i) q(i, labels[static_cast<std::size_t>(i)]) += 1.0 - label_smoothing;

    double data_loss = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < c; ++k)
            if (q(i, k) > 0.0) data_loss -= q(i, k) * std::log(std::max(p(i, k), 1e-300));
    data_loss /= static_cast<double>(n);

    if (grad_weights || grad_bias) {
        const MatrixXd diff = (p - q) / static_cast<double>(n);
        if (grad_weights) *grad_weights = diff.transpose() * x + 2.0 * l2 * weights;
        if (grad_bias) *grad_bias = diff.colwise().sum().transpose();
    }
    return data_loss + l2 * weights.squaredNorm();
}

SoftmaxModel train(const std::vector<LabeledFeature>& data, const TrainConfig& cfg, TrainHistory* history) {
    cfg.validate();
    if (data.empty()) throw Error(ErrorKind::Train, "empty training set");

    SoftmaxModel model;
    model.config = cfg;
    model.trained_on = data.front().feature.extractor;
    const Index dim = data.front().feature.values.size();
    if (dim == 0) throw Error(ErrorKind::Train, "zero-dimensional features");

    std::map<std::string, int> class_index;
    std::vector<int> labels;
    labels.reserve(data.size());
    MatrixXd x(static_cast<Index>(data.size()), dim);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = data[i];
        if (s.feature.extractor != model.trained_on)
            throw Error(ErrorKind::Train, "row " + std::to_string(i) + " mixes extractors");
        if (s.feature.values.size() != dim)
            throw Error(ErrorKind::Train, "row " + std::to_string(i) + " has dimension " +
                                              std::to_string(s.feature.values.size()) + ", expected " +
                                              std::to_string(dim));
        if (!s.feature.values.allFinite()) throw Error(ErrorKind::Train, "row " + std::to_string(i) + " is not finite");
        auto [it, inserted] = class_index.try_emplace(s.label, static_cast<int>(model.classes.size()));
        if (inserted) model.classes.push_back(s.label);
        labels.push_back(it->second);
        x.row(static_cast<Index>(i)) = s.feature.values.transpose();
    }
    const int num_classes = static_cast<int>(model.classes.size());
    if (num_classes < 2) throw Error(ErrorKind::Train, "training needs at least two classes");

    Rng rng(cfg.seed);
    const Split split = stratified_split(labels, num_classes, cfg.validation_fraction, rng);

    model.feature_mean = RVector::Zero(dim);
    model.feature_scale = RVector::Ones(dim);
    if (cfg.standardize) {
        const MatrixXd xt = gather_rows(x, split.train, 0, split.train.size());
        model.feature_mean = xt.colwise().mean().transpose();
        const RVector var = (xt.rowwise() - model.feature_mean.transpose()).colwise().squaredNorm().transpose() /
                            static_cast<double>(xt.rows());
        for (Index j = 0; j < dim; ++j) model.feature_scale[j] = var[j] > 1e-24 ? std::sqrt(var[j]) : 1.0;
    }
    const MatrixXd xs = (x.rowwise() - model.feature_mean.transpose()).array().rowwise() /
                        model.feature_scale.transpose().array();

    const MatrixXd x_val = gather_rows(xs, split.validation, 0, split.validation.size());
    const std::vector<int> y_val = gather(labels, split.validation, 0, split.validation.size());
    const MatrixXd x_train = gather_rows(xs, split.train, 0, split.train.size());
    const std::vector<int> y_train = gather(labels, split.train, 0, split.train.size());

    MatrixXd w = MatrixXd::Zero(num_classes, dim);
    RVector b = RVector::Zero(num_classes);
    MatrixXd m_w = MatrixXd::Zero(num_classes, dim), v_w = m_w;
    RVector m_b = RVector::Zero(num_classes), v_b = m_b;
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-7;
    long step = 0;

    MatrixXd best_w = w;
    RVector best_b = b;
    double best_val = INFINITY;
    int best_epoch = 0;

    std::vector<Index> order(split.train.size());
    std::iota(order.begin(), order.end(), Index{0});
    MatrixXd gw;
    RVector gb;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            const MatrixXd xb = gather_rows(x_train, order, start, end);
            const std::vector<int> yb = gather(y_train, order, start, end);
            loss_and_gradient(w, b, xb, yb, cfg.l2, cfg.label_smoothing, &gw, &gb);
            if (cfg.optimizer == Optimizer::Sgd) {
                w -= cfg.learning_rate * gw;
                b -= cfg.learning_rate * gb;
            } else {
                ++step;
                m_w = beta1 * m_w + (1.0 - beta1) * gw;
                v_w = beta2 * v_w + (1.0 - beta2) * gw.cwiseAbs2();
                m_b = beta1 * m_b + (1.0 - beta1) * gb;
                v_b = beta2 * v_b + (1.0 - beta2) * gb.cwiseAbs2();
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                w.array() -= cfg.learning_rate * (m_w.array() / c1) / ((v_w.array() / c2).sqrt() + adam_eps);
                b.array() -= cfg.learning_rate * (m_b.array() / c1) / ((v_b.array() / c2).sqrt() + adam_eps);
            }
        }
        if (!w.allFinite() || !b.allFinite()) throw Error(ErrorKind::Train, "training diverged");
        const double train_loss = loss_and_gradient(w, b, x_train, y_train, cfg.l2, cfg.label_smoothing);
        if (history) history->train_loss.push_back(train_loss);
        if (!y_val.empty()) {
            const double val_loss = loss_and_gradient(w, b, x_val, y_val, cfg.l2, cfg.label_smoothing);
            if (history) history->validation_loss.push_back(val_loss);
            if (val_loss < best_val) {
                best_val = val_loss;
                best_w = w;
                best_b = b;
                best_epoch = epoch;
            }
        }
    }
    if (y_val.empty()) {
        best_w = w;
        best_b = b;
        best_epoch = cfg.epochs;
    }
    model.weights = std::move(best_w);
    model.bias = std::move(best_b);
    model.best_epoch = best_epoch;
    return model;
}

RVector predict_scores(const SoftmaxModel& model, const FeatureVector& feature) {
    if (feature.values.size() != model.dim())
        throw Error(ErrorKind::Predict, "feature dimension " + std::to_string(feature.values.size()) +
                                            " does not match model dimension " + std::to_string(model.dim()));
    if (feature.extractor != model.trained_on)
        throw Error(ErrorKind::Predict, "feature extractor " + std::string(to_string(feature.extractor)) +
                                            " does not match model extractor " +
                                            std::string(to_string(model.trained_on)));
    const MatrixXd row = standardize(model, feature.values).transpose();
    return softmax_rows(model.weights, model.bias, row).row(0).transpose();
}

std::string predict_label(const SoftmaxModel& model, const FeatureVector& feature) {
    const RVector p = predict_scores(model, feature);
    Index best = 0;
    for (Index i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = i;
    return model.classes[static_cast<std::size_t>(best)];
}

Index fused_argmax(const RVector& a, const RVector& b) {
    if (a.size() != b.size() || a.size() == 0) throw Error(ErrorKind::Fuse, "score vectors differ in length");
    const RVector s = a + b;
    Index best = 0;
    for (Index i = 1; i < s.size(); ++i)
        if (s[i] > s[best]) best = i;
    return best;
}

std::string fuse_and_classify(const SoftmaxModel& stf_model, const SoftmaxModel& ltf_model,
                              const FeatureVector& stf_feature, const FeatureVector& ltf_feature) {
    if (stf_model.classes != ltf_model.classes) throw Error(ErrorKind::Fuse, "branch class lists differ");
    const Index k = fused_argmax(predict_scores(stf_model, stf_feature), predict_scores(ltf_model, ltf_feature));
    return stf_model.classes[static_cast<std::size_t>(k)];
}

double evaluate(const SoftmaxModel& model, const std::vector<LabeledFeature>& test) {
    if (test.empty()) throw Error(ErrorKind::Eval, "empty test set");
    std::size_t correct = 0;
    for (const auto& s : test) correct += predict_label(model, s.feature) == s.label ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

double evaluate_fused(const SoftmaxModel& stf_model, const SoftmaxModel& ltf_model,
                      const std::vector<FusedSample>& test) {
    if (test.empty()) throw Error(ErrorKind::Eval, "empty test set");
    std::size_t correct = 0;
    for (const auto& s : test) correct += fuse_and_classify(stf_model, ltf_model, s.stf, s.ltf) == s.label ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::string model_to_json(const SoftmaxModel& model) {
    const auto& c = model.config;
    json j;
    j["format"] = "divrff-softmax-model";
    j["version"] = kModelFormatVersion;
    j["extractor"] = std::string(to_string(model.trained_on));
    j["classes"] = model.classes;
    j["num_classes"] = model.num_classes();
    j["dim"] = model.dim();
    j["weights"] = matrix_json(model.weights);
    j["bias"] = vector_json(model.bias);
    j["feature_mean"] = vector_json(model.feature_mean);
    j["feature_scale"] = vector_json(model.feature_scale);
    j["best_epoch"] = model.best_epoch;
    j["config"] = {{"epochs", c.epochs},
                   {"batch", c.batch},
                   {"learning_rate", c.learning_rate},
                   {"l2", c.l2},
                   {"label_smoothing", c.label_smoothing},
                   {"seed", c.seed},
                   {"optimizer", c.optimizer == Optimizer::Adam ? "adam" : "sgd"},
                   {"validation_fraction", c.validation_fraction},
                   {"standardize", c.standardize}};
    return j.dump(2) + "\n";
}

SoftmaxModel model_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "divrff-softmax-model")
            throw Error(ErrorKind::Io, "not a softmax model document");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw Error(ErrorKind::Io, "unsupported model version " + std::to_string(j.at("version").get<int>()));
        SoftmaxModel m;
        m.trained_on = extractor_from_string(j.at("extractor").get<std::string>());
        m.classes = j.at("classes").get<std::vector<std::string>>();
        const auto rows = j.at("num_classes").get<Index>();
        const auto cols = j.at("dim").get<Index>();
        const json& w = j.at("weights");
        if (static_cast<Index>(w.size()) != rows) throw Error(ErrorKind::Io, "weight row count mismatch");
        m.weights.resize(rows, cols);
        for (Index r = 0; r < rows; ++r) {
            const json& row = w[static_cast<std::size_t>(r)];
            if (static_cast<Index>(row.size()) != cols)
                throw Error(ErrorKind::Io, "weight row " + std::to_string(r) + " has the wrong length");
            for (Index col = 0; col < cols; ++col) m.weights(r, col) = row[static_cast<std::size_t>(col)].get<double>();
        }
        m.bias = vector_from(j.at("bias"));
        m.feature_mean = vector_from(j.at("feature_mean"));
        m.feature_scale = vector_from(j.at("feature_scale"));
        m.best_epoch = j.value("best_epoch", 0);
        if (j.contains("config")) {
            const json& c = j["config"];
            m.config.epochs = c.value("epochs", m.config.epochs);
            m.config.batch = c.value("batch", m.config.batch);
            m.config.learning_rate = c.value("learning_rate", m.config.learning_rate);
            m.config.l2 = c.value("l2", m.config.l2);
            m.config.label_smoothing = c.value("label_smoothing", m.config.label_smoothing);
            m.config.seed = c.value("seed", m.config.seed);
            m.config.optimizer = c.value("optimizer", std::string("adam")) == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
            m.config.validation_fraction = c.value("validation_fraction", m.config.validation_fraction);
            m.config.standardize = c.value("standardize", m.config.standardize);
        }
        try {
            m.validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::Io, e.what());
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("model JSON: ") + e.what());
    }
}

}  // namespace divrff

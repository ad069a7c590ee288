#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "divrff/classify.hpp"
#include "divrff/error.hpp"
#include "support.hpp"

using namespace divrff;

namespace {

FeatureVector fv(const RVector& v, Extractor e = Extractor::DV) {
    FeatureVector f;
    f.extractor = e;
    f.values = v;
    return f;
}

// Gaussian clusters around random unit centres separated by `sep` sigma.
std::vector<LabeledFeature> clusters(int classes, int per_class, Index dim, double sep, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<RVector> centres;
    for (int c = 0; c < classes; ++c) {
        RVector m(dim);
        for (Index i = 0; i < dim; ++i) m[i] = n01(rng);
        centres.push_back(sep * m.normalized());
    }
    std::vector<LabeledFeature> out;
    for (int k = 0; k < per_class; ++k)
        for (int c = 0; c < classes; ++c) {
            RVector x = centres[static_cast<std::size_t>(c)];
            for (Index i = 0; i < dim; ++i) x[i] += n01(rng);
            out.push_back({fv(x), "class" + std::to_string(c)});
        }
    return out;
}

SoftmaxModel manual_model(const MatrixXd& w, const RVector& b) {
    SoftmaxModel m;
    m.weights = w;
    m.bias = b;
    for (Index c = 0; c < w.rows(); ++c) m.classes.push_back("c" + std::to_string(c));
    m.trained_on = Extractor::DV;
    m.feature_mean = RVector::Zero(w.cols());
    m.feature_scale = RVector::Ones(w.cols());
    return m;
}

double train_accuracy(const SoftmaxModel& m, const std::vector<LabeledFeature>& d) { return evaluate(m, d); }

}  // namespace

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(99);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int point = 0; point < 20; ++point) {
        const Index c = 3 + point % 4, d = 5 + point % 7, n = 17;
        MatrixXd w(c, d), x(n, d);
        RVector b(c);
        for (Index i = 0; i < w.size(); ++i) w.data()[i] = n01(rng);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
        for (Index i = 0; i < b.size(); ++i) b[i] = n01(rng);
        std::vector<int> labels;
        for (Index i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(c)));
        const double l2 = 0.05 + 0.1 * (point % 3), smooth = 0.1 * (point % 4);
        MatrixXd gw;
        RVector gb;
        loss_and_gradient(w, b, x, labels, l2, smooth, &gw, &gb);
        const double h = 1e-6;
        double worst = 0.0;
        auto rel = [](double a, double e) { return std::abs(a - e) / std::max(1.0, std::abs(e)); };
        for (Index i = 0; i < w.size(); ++i) {
            MatrixXd wp = w, wm = w;
            wp.data()[i] += h;
            wm.data()[i] -= h;
            const double fd = (loss_and_gradient(wp, b, x, labels, l2, smooth) -
                               loss_and_gradient(wm, b, x, labels, l2, smooth)) / (2 * h);
            worst = std::max(worst, rel(gw.data()[i], fd));
        }
        for (Index i = 0; i < b.size(); ++i) {
            RVector bp = b, bm = b;
            bp[i] += h;
            bm[i] -= h;
            const double fd = (loss_and_gradient(w, bp, x, labels, l2, smooth) -
                               loss_and_gradient(w, bm, x, labels, l2, smooth)) / (2 * h);
            worst = std::max(worst, rel(gb[i], fd));
        }
        CAPTURE(point);
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("loss includes the smoothing and L2 terms") {
    MatrixXd w = MatrixXd::Zero(4, 3);
    RVector b = RVector::Zero(4);
    MatrixXd x = MatrixXd::Ones(2, 3);
    // Uniform predictions: cross-entropy is log(4) for any smoothing.
    CHECK(loss_and_gradient(w, b, x, {0, 1}, 0.0, 0.2) == doctest::Approx(std::log(4.0)));
    w(0, 0) = 2.0;
    const double with_l2 = loss_and_gradient(w, b, x, {0, 1}, 0.5, 0.0);
    const double without = loss_and_gradient(w, b, x, {0, 1}, 0.0, 0.0);
    CHECK(with_l2 - without == doctest::Approx(0.5 * 4.0));
}

TEST_CASE("well separated classes are learned") {
    const auto data = clusters(2, 200, 12, 10.0, 1);
    const auto m = train(data);
    CHECK(train_accuracy(m, data) >= 0.99);
    CHECK(m.classes == std::vector<std::string>{"class0", "class1"});
}

TEST_CASE("one sample per class is memorized without smoothing") {
    auto data = clusters(5, 1, 12, 3.0, 2);
    TrainConfig cfg;
    cfg.label_smoothing = 0.0;
    cfg.l2 = 0.0;
    cfg.epochs = 400;
    cfg.learning_rate = 0.05;
    cfg.validation_fraction = 0.0;
    const auto m = train(data, cfg);
    for (const auto& s : data) CHECK(predict_label(m, s.feature) == s.label);
    CHECK(evaluate(m, data) == 1.0);
}

TEST_CASE("full-batch gradient descent never increases the loss") {
    const auto data = clusters(3, 30, 6, 6.0, 3);
    TrainConfig cfg;
    cfg.optimizer = Optimizer::Sgd;
    cfg.learning_rate = 1e-3;
    cfg.batch = static_cast<int>(data.size());
    cfg.validation_fraction = 0.0;
    cfg.epochs = 200;
    TrainHistory hist;
    train(data, cfg, &hist);
    REQUIRE(hist.train_loss.size() == 200);
    for (std::size_t i = 1; i < hist.train_loss.size(); ++i) CHECK(hist.train_loss[i] <= hist.train_loss[i - 1] + 1e-15);
    CHECK(hist.train_loss.back() < hist.train_loss.front());
}

TEST_CASE("training is deterministic and keeps the best validation epoch") {
    const auto data = clusters(4, 40, 12, 2.0, 4);
    TrainConfig cfg;
    cfg.seed = 17;
    TrainHistory h1;
    const auto a = train(data, cfg, &h1);
    const auto b = train(data, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    REQUIRE(h1.validation_loss.size() == 50);
    const auto best = std::min_element(h1.validation_loss.begin(), h1.validation_loss.end()) - h1.validation_loss.begin();
    CHECK(a.best_epoch == static_cast<int>(best) + 1);
    cfg.seed = 18;
    CHECK(train(data, cfg).weights != a.weights);
}

TEST_CASE("predicted scores") {
    const auto zero = manual_model(MatrixXd::Zero(5, 3), RVector::Zero(5));
    const RVector p = predict_scores(zero, fv(RVector::Ones(3)));
    CHECK((p.array() - 0.2).abs().maxCoeff() < 1e-15);

    Rng rng(5);
    std::normal_distribution<double> n01(0.0, 1.0);
    MatrixXd w(4, 6);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = n01(rng);
    const auto m = manual_model(w, RVector::Zero(4));
    const auto m10 = manual_model(10.0 * w, RVector::Zero(4));
    for (int t = 0; t < 1000; ++t) {
        RVector x(6);
        for (Index i = 0; i < 6; ++i) x[i] = 3.0 * n01(rng);
        const RVector s = predict_scores(m, fv(x));
        REQUIRE(std::abs(s.sum() - 1.0) < 1e-9);
        REQUIRE(predict_label(m, fv(x)) == predict_label(m10, fv(x)));
    }
    CHECK_THROWS_AS(predict_scores(m, fv(RVector::Ones(5))), Error);
    CHECK_THROWS_AS(predict_scores(m, fv(RVector::Ones(6), Extractor::HL)), Error);
}

TEST_CASE("score fusion") {
    RVector flat = RVector::Constant(3, 1.0 / 3.0);
    RVector sure(3);
    sure << 0.05, 0.9, 0.05;
    CHECK(fused_argmax(sure, sure) == 1);
    CHECK(fused_argmax(flat, sure) == 1);
    RVector a(3), b(3);
    a << 0.8, 0.1, 0.1;
    b << 0.1, 0.8, 0.1;
    CHECK(fused_argmax(a, b) == 0);
    CHECK(fused_argmax(b, a) == 0);
    for (int t = 0; t < 100; ++t) {
        Rng rng(static_cast<std::uint64_t>(t));
        RVector v(4);
        for (Index i = 0; i < 4; ++i) v[i] = divrff::uniform(rng, 0.0, 1.0);
        Index single = 0;
        for (Index i = 1; i < 4; ++i)
            if (v[i] > v[single]) single = i;
        CHECK(fused_argmax(v, v) == single);
    }
    CHECK_THROWS_AS(fused_argmax(RVector::Ones(2), RVector::Ones(3)), Error);

    MatrixXd w = MatrixXd::Zero(2, 2);
    w(1, 0) = 5.0;
    auto stf = manual_model(w, RVector::Zero(2));
    auto ltf = manual_model(MatrixXd::Zero(2, 2), RVector::Zero(2));
    stf.trained_on = Extractor::RD_STF;
    ltf.trained_on = Extractor::RD_LTF;
    RVector x(2);
    x << 1.0, 0.0;
    CHECK(fuse_and_classify(stf, ltf, fv(x, Extractor::RD_STF), fv(x, Extractor::RD_LTF)) == "c1");
    ltf.classes = {"c1", "c0"};
    CHECK_THROWS_AS(fuse_and_classify(stf, ltf, fv(x, Extractor::RD_STF), fv(x, Extractor::RD_LTF)), Error);
}

TEST_CASE("evaluation") {
    const auto data = clusters(10, 60, 12, 8.0, 6);
    const auto m = train(data);
    CHECK(evaluate(m, data) > 0.95);

    // Shuffled labels: chance level.
    auto shuffled = data;
    std::vector<std::string> labels;
    for (const auto& s : data) labels.push_back(s.label);
    std::shuffle(labels.begin(), labels.end(), Rng(7));
    for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];
    CHECK(std::abs(evaluate(m, shuffled) - 0.1) < 0.02);

    // A constant predictor scores the prevalence of its class.
    RVector bias = RVector::Zero(3);
    bias[2] = 10.0;
    auto constant = manual_model(MatrixXd::Zero(3, 2), bias);
    std::vector<LabeledFeature> test;
    for (int i = 0; i < 20; ++i) test.push_back({fv(RVector::Ones(2)), i < 5 ? "c2" : "c0"});
    CHECK(evaluate(constant, test) == doctest::Approx(0.25));
    CHECK_THROWS_AS(evaluate(constant, {}), Error);
}

TEST_CASE("training input errors") {
    auto data = clusters(2, 10, 4, 3.0, 8);
    CHECK_THROWS_AS(train({}), Error);
    auto one_class = data;
    for (auto& s : one_class) s.label = "same";
    CHECK_THROWS_AS(train(one_class), Error);
    auto bad_dim = data;
    bad_dim[3].feature.values = RVector::Ones(5);
    try {
        train(bad_dim);
        FAIL("expected TrainError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Train);
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    auto mixed = data;
    mixed[2].feature.extractor = Extractor::HL;
    CHECK_THROWS_AS(train(mixed), Error);
    TrainConfig cfg;
    cfg.label_smoothing = 0.5;
    CHECK_THROWS_AS(train(data, cfg), Error);
}

TEST_CASE("model JSON round trip") {
    const auto data = clusters(3, 20, 5, 4.0, 9);
    const auto m = train(data);
    const auto back = model_from_json(model_to_json(m));
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
    CHECK(back.classes == m.classes);
    CHECK(back.feature_mean == m.feature_mean);
    CHECK(back.feature_scale == m.feature_scale);
    CHECK(back.trained_on == m.trained_on);
    CHECK(model_to_json(back) == model_to_json(m));
    CHECK_THROWS_AS(model_from_json("{}"), Error);
    CHECK_THROWS_AS(model_from_json("not json"), Error);
}

#include <gtest/gtest.h>

#include <random>

#include <clickbait/eval.hpp>
#include <clickbait/plots.hpp>

#include "oracles.hpp"
#include "support.hpp"

using namespace clickbait;

namespace {

constexpr Label C = Label::clickbait;
constexpr Label N = Label::non_clickbait;

std::vector<Label> random_labels(std::mt19937_64& gen, std::size_t n) {
    std::vector<Label> y(n);
    for (auto& l : y) l = gen() % 2 ? C : N;
    y[0] = C;
    y[1] = N;
    std::shuffle(y.begin(), y.end(), gen);
    return y;
}

EvaluationReport sample_report(ModelKind kind, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    const auto y = random_labels(gen, 40);
    std::vector<double> s(40);
    std::vector<Label> pred(40);
    for (std::size_t i = 0; i < 40; ++i) {
        s[i] = std::uniform_real_distribution<double>(0, 1)(gen) + (is_positive(y[i]) ? 0.3 : 0.0);
        s[i] = std::min(s[i], 1.0);
        pred[i] = s[i] >= 0.5 ? C : N;
    }
    EvaluationReport r;
    r.kind = kind;
    r.mask = FeatureMask::all();
    r.dimension = 7;
    r.matrix = confusion(y, pred);
    r.curve = roc(y, s);
    r.calibration = reliability(y, s, 10);
    r.probability_calibrated = kind != ModelKind::svm;
    return r;
}

} // namespace

TEST(Confusion, Examples) {
    const std::vector<Label> truth = {C, C, C, C, C, C, N, N, N, N};
    const auto perfect = confusion(truth, truth);
    EXPECT_EQ(perfect, (ConfusionMatrix{6, 0, 4, 0}));
    EXPECT_EQ(perfect.accuracy(), 1.0);
    const std::vector<Label> none(10, N);
    const auto neg = confusion(truth, none);
    EXPECT_EQ(neg.tp, 0u);
    EXPECT_EQ(neg.fn, 6u);
    EXPECT_EQ(neg.tn, 4u);
    EXPECT_EQ(neg.recall(), 0.0);
    EXPECT_EQ(neg.precision(), 0.0);
    EXPECT_THROW(confusion(truth, std::span<const Label>(none).first(3)), ParameterError);
}

TEST(Confusion, HandTalliedFixture) {
    const std::vector<Label> truth = {C, C, C, C, C, N, N, N, N, N, N, C};
    const std::vector<Label> pred = {C, C, N, C, N, N, C, N, N, C, N, C};
    const auto m = confusion(truth, pred);
    EXPECT_EQ(m, (ConfusionMatrix{4, 2, 4, 2}));
    EXPECT_DOUBLE_EQ(m.accuracy(), 8.0 / 12.0);
    EXPECT_DOUBLE_EQ(m.precision(), 4.0 / 6.0);
    EXPECT_DOUBLE_EQ(m.f1(), 4.0 / 6.0);
}

TEST(Roc, Examples) {
    const std::vector<Label> y = {C, C, N, N};
    EXPECT_EQ(roc(y, std::vector<double>{0.9, 0.8, 0.2, 0.1}).auc, 1.0);
    const auto flat = roc(y, std::vector<double>{0.5, 0.5, 0.5, 0.5});
    ASSERT_EQ(flat.points.size(), 2u);
    EXPECT_EQ(flat.points[0].fpr, 0.0);
    EXPECT_EQ(flat.points[1].tpr, 1.0);
    EXPECT_EQ(flat.auc, 0.5);
    EXPECT_THROW(roc(std::vector<Label>{C, C}, std::vector<double>{0.1, 0.2}), ParameterError);
    EXPECT_THROW(roc(y, std::vector<double>{0.1, 0.2, NAN, 0.0}), NumericError);
}

TEST(Roc, EqualsMannWhitneyAndIsRankInvariant) {
    std::mt19937_64 gen(123);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + gen() % 11;
        const auto y = random_labels(gen, n);
        std::vector<double> s(n);
        for (auto& v : s) v = static_cast<double>(gen() % 5) / 4.0;
        const auto curve = roc(y, s);
        EXPECT_NEAR(curve.auc, oracle::mann_whitney_auc(y, s), 1e-12);
        EXPECT_NEAR(curve.auc, trapezoid_area(curve.points), 0.0);
        for (std::size_t k = 1; k < curve.points.size(); ++k) {
            EXPECT_GE(curve.points[k].fpr, curve.points[k - 1].fpr);
            EXPECT_GE(curve.points[k].tpr, curve.points[k - 1].tpr);
        }
        EXPECT_EQ(curve.points.back().fpr, 1.0);
        EXPECT_EQ(curve.points.back().tpr, 1.0);
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
        EXPECT_NEAR(roc(y, t).auc, curve.auc, 1e-12);
    }
}

TEST(Reliability, PerfectlyCalibratedPredictorLiesOnDiagonal) {
    std::mt19937_64 gen(77);
    std::vector<Label> y;
    std::vector<double> p;
    for (int bin = 0; bin < 10; ++bin) {
        const double q = (bin + 0.5) / 10.0;
        for (int k = 0; k < 100; ++k) {
            p.push_back(q);
            y.push_back(k < static_cast<int>(std::lround(q * 100)) ? C : N);
        }
    }
    const auto r = reliability(y, p, 10);
    EXPECT_EQ(r.total(), y.size());
    for (const auto& b : r.bins) {
        ASSERT_GT(b.count, 0u);
        EXPECT_LE(std::abs(b.mean_predicted - b.positive_fraction), 1.0 / 20.0);
    }
}

TEST(Reliability, ConstantPredictorFillsOneBin) {
    std::vector<Label> y(10);
    for (std::size_t i = 0; i < 10; ++i) y[i] = i % 2 ? C : N;
    const auto r = reliability(y, std::vector<double>(10, 0.9), 10);
    std::size_t used = 0;
    for (const auto& b : r.bins)
        if (b.count) {
            ++used;
            EXPECT_DOUBLE_EQ(b.mean_predicted, 0.9);
            EXPECT_DOUBLE_EQ(b.positive_fraction, 0.5);
            EXPECT_DOUBLE_EQ(b.upper, 0.9);
        }
    EXPECT_EQ(used, 1u);
}

TEST(Reliability, HandBinnedFixture) {
    const std::vector<double> p = {0.0, 0.1, 0.2, 0.15, 0.25, 0.3, 0.4, 0.45, 0.5, 0.55,
                                   0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0, 0.99};
    const std::vector<Label> y = {N, N, C, N, N, C, N, C, N, C, C, C, N, C, C, C, C, C, C, N};
    const auto r = reliability(y, p, 5);
    const std::vector<std::size_t> counts = {4, 3, 4, 4, 5};
    const std::vector<double> mean = {0.1125, 0.95 / 3.0, 0.525, 0.725, 0.938};
    const std::vector<double> frac = {0.25, 1.0 / 3.0, 0.75, 0.75, 0.8};
    for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_EQ(r.bins[k].count, counts[k]) << k;
        EXPECT_NEAR(r.bins[k].mean_predicted, mean[k], 1e-12) << k;
        EXPECT_NEAR(r.bins[k].positive_fraction, frac[k], 1e-12) << k;
    }
}

TEST(Reliability, CountsAlwaysSumToN) {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + gen() % 50, bins = 2 + gen() % 15;
        std::vector<double> p(n);
        for (auto& v : p) v = static_cast<double>(gen() % 21) / 20.0;
        std::vector<Label> y(n);
        for (auto& l : y) l = gen() % 2 ? C : N;
        const auto r = reliability(y, p, bins);
        EXPECT_EQ(r.total(), n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto b = reliability_bin(p[k], bins);
            EXPECT_TRUE(b == 0 ? p[k] <= r.bins[0].upper : (p[k] > r.bins[b].lower && p[k] <= r.bins[b].upper));
        }
    }
    EXPECT_THROW(reliability(std::vector<Label>{C}, std::vector<double>{1.5}, 10), ParameterError);
    EXPECT_THROW(reliability(std::vector<Label>{C}, std::vector<double>{0.5}, 1), ParameterError);
}

TEST(Probability, LogisticAndPassthrough) {
    EXPECT_EQ(score_to_probability(ModelKind::svm, std::vector<double>{0.0})[0], 0.5);
    EXPECT_NEAR(score_to_probability(ModelKind::svm, std::vector<double>{4.0})[0], 0.982, 1e-3);
    EXPECT_EQ(score_to_probability(ModelKind::forest, std::vector<double>{0.7})[0], 0.7);
    EXPECT_EQ(score_to_probability(ModelKind::tree, std::vector<double>{0.25})[0], 0.25);
    EXPECT_GT(logistic(-800.0), -1e-300);
    EXPECT_EQ(logistic(800.0), 1.0);
}

TEST(Report, JsonRoundTrip) {
    const auto r = sample_report(ModelKind::forest, 3);
    const auto back = evaluation_from_json(to_json(r));
    EXPECT_EQ(back.matrix, r.matrix);
    EXPECT_EQ(back.curve.points, r.curve.points);
    EXPECT_EQ(back.curve.auc, r.curve.auc);
    EXPECT_EQ(back.calibration.total(), r.calibration.total());
    EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
}

TEST(Plots, TwelveFiguresAndTwelveTables) {
    std::vector<EvaluationReport> evals;
    for (ModelKind k : kAllModelKinds) evals.push_back(sample_report(k, 10 + static_cast<int>(k)));
    const auto files = render_plots(evals);
    std::size_t svg = 0, tsv = 0;
    for (const auto& f : files) {
        if (f.name.ends_with(".svg")) {
            ++svg;
            EXPECT_TRUE(f.contents.starts_with("<?xml") || f.contents.starts_with("<svg")) << f.name;
            EXPECT_NE(f.contents.find("</svg>"), std::string::npos) << f.name;
        } else if (f.name.ends_with(".tsv")) {
            ++tsv;
        }
    }
    EXPECT_EQ(svg, 12u);
    EXPECT_EQ(tsv, 12u);
    const auto again = render_plots(evals);
    for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(files[i].contents, again[i].contents);
}

TEST(Plots, EmptyReportWritesNothing) {
    testing_support::TempDir dir("plots");
    const auto target = dir / "plots";
    EXPECT_THROW(write_plots(std::vector<EvaluationReport>{}, target), Error);
    EXPECT_FALSE(std::filesystem::exists(target) && !std::filesystem::is_empty(target));
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "learners.hpp"

namespace clickbait {

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    double accuracy() const { return ratio(tp + tn, total()); }
    double precision() const { return ratio(tp, tp + fp); }
    double recall() const { return ratio(tp, tp + fn); }
    double f1() const {
        const double p = precision(), r = recall();
        return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    bool operator==(const ConfusionMatrix&) const = default;

private:
    static double ratio(std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; }
};

/// Clickbait is the positive class.
inline ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted) {
    if (truth.size() != predicted.size())
        throw ParameterError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                             std::to_string(predicted.size()) + " predictions");
    if (truth.empty()) throw ParameterError("confusion: empty input");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = is_positive(truth[i]), p = is_positive(predicted[i]);
        if (t && p) ++m.tp;
        else if (!t && p) ++m.fp;
        else if (!t && !p) ++m.tn;
        else ++m.fn;
    }
    return m;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0; // score at or above which rows are called clickbait; +inf for (0,0)
    bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Trapezoidal area under a polyline of (fpr, tpr) points.
inline double trapezoid_area(std::span<const RocPoint> points) {
    double area = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k)
        area += (points[k].fpr - points[k - 1].fpr) * (points[k].tpr + points[k - 1].tpr) / 2.0;
    return area;
}

/// Sweeps thresholds over the distinct scores in descending order; tied
/// scores move together, so the area equals the tie-aware Mann-Whitney value.
inline RocCurve roc(std::span<const Label> truth, std::span<const double> scores) {
    if (truth.size() != scores.size()) throw ParameterError("roc: labels and scores differ in length");
    std::size_t pos = 0;
    for (Label l : truth) pos += is_positive(l) ? 1 : 0;
    const std::size_t neg = truth.size() - pos;
    if (pos == 0 || neg == 0) throw ParameterError("roc: AUC undefined without both classes");
    for (double s : scores)
        if (!std::isfinite(s)) throw NumericError("roc: non-finite score");

    std::vector<std::size_t> order(truth.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double s = scores[order[k]];
        while (k < order.size() && scores[order[k]] == s) {
            if (is_positive(truth[order[k]])) ++tp;
            else ++fp;
            ++k;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos), s});
    }
    curve.auc = trapezoid_area(curve.points);
    return curve;
}

struct ReliabilityBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double mean_predicted = 0.0; // meaningful only when count > 0
    double positive_fraction = 0.0;
};

struct ReliabilityDiagram {
    std::vector<ReliabilityBin> bins;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& b : bins) n += b.count;
        return n;
    }
};

/// Bin index of probability p among `bins` equal-width bins, each right-closed
/// (lower, upper] except the first, which also holds 0.
inline std::size_t reliability_bin(double p, std::size_t bins) {
    for (std::size_t k = 0; k + 1 < bins; ++k)
        if (p <= static_cast<double>(k + 1) / static_cast<double>(bins)) return k;
    return bins - 1;
}

inline ReliabilityDiagram reliability(std::span<const Label> truth, std::span<const double> probabilities,
                                      std::size_t bins = 10) {
    if (truth.size() != probabilities.size()) throw ParameterError("reliability: labels and probabilities differ in length");
    if (bins < 2) throw ParameterError("reliability: need at least 2 bins");
    ReliabilityDiagram diagram;
    diagram.bins.resize(bins);
    std::vector<double> sum_p(bins, 0.0), sum_y(bins, 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double p = probabilities[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw ParameterError("reliability: probability " + std::to_string(p) + " outside [0,1] at index " +
                                 std::to_string(i));
        const std::size_t k = reliability_bin(p, bins);
        ++diagram.bins[k].count;
        sum_p[k] += p;
        sum_y[k] += is_positive(truth[i]) ? 1.0 : 0.0;
    }
    for (std::size_t k = 0; k < bins; ++k) {
        auto& b = diagram.bins[k];
        b.lower = static_cast<double>(k) / static_cast<double>(bins);
        b.upper = static_cast<double>(k + 1) / static_cast<double>(bins);
        if (b.count) {
            b.mean_predicted = sum_p[k] / static_cast<double>(b.count);
            b.positive_fraction = sum_y[k] / static_cast<double>(b.count);
        }
    }
    return diagram;
}

inline double logistic(double s) {
    return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

/// Tree and forest scores are already frequencies; SVM margins go through an
/// uncalibrated logistic squash.
inline std::vector<double> score_to_probability(ModelKind kind, std::span<const double> scores) {
    std::vector<double> out(scores.begin(), scores.end());
    if (kind == ModelKind::svm)
        for (auto& s : out) s = logistic(s);
    return out;
}

/// Everything measured for one trained model on one evaluation set.
struct EvaluationReport {
    ModelKind kind = ModelKind::svm;
    FeatureMask mask;
    std::size_t dimension = 0;
    ConfusionMatrix matrix;
    RocCurve curve;
    ReliabilityDiagram calibration;
    bool probability_calibrated = true;
};

inline EvaluationReport evaluate_model(const TrainedModel& model, const Matrix& x, std::span<const Label> truth,
                                       std::size_t bins = 10) {
    const auto scores = model.score_all(x);
    std::vector<Label> predicted(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        predicted[i] = scores[i] >= model.threshold() ? Label::clickbait : Label::non_clickbait;
    EvaluationReport r;
    r.kind = model.kind;
    r.mask = model.mask;
    r.dimension = model.dimension();
    r.matrix = confusion(truth, predicted);
    r.curve = roc(truth, scores);
    r.calibration = reliability(truth, score_to_probability(model.kind, scores), bins);
    r.probability_calibrated = model.kind != ModelKind::svm;
    return r;
}

inline nlohmann::json to_json(const EvaluationReport& r) {
    nlohmann::json roc_points = nlohmann::json::array();
    for (const auto& p : r.curve.points)
        roc_points.push_back({p.fpr, p.tpr, std::isinf(p.threshold) ? nlohmann::json("inf") : nlohmann::json(p.threshold)});
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : r.calibration.bins)
        bins.push_back({{"lower", b.lower},
                        {"upper", b.upper},
                        {"count", b.count},
                        {"mean_predicted", b.count ? nlohmann::json(b.mean_predicted) : nlohmann::json()},
                        {"positive_fraction", b.count ? nlohmann::json(b.positive_fraction) : nlohmann::json()}});
    return {{"classifier", to_string(r.kind)},
            {"feature_groups", r.mask.str()},
            {"dimension", r.dimension},
            {"confusion",
             {{"tp", r.matrix.tp},
              {"fp", r.matrix.fp},
              {"tn", r.matrix.tn},
              {"fn", r.matrix.fn},
              {"accuracy", r.matrix.accuracy()},
              {"precision", r.matrix.precision()},
              {"recall", r.matrix.recall()},
              {"f1", r.matrix.f1()}}},
            {"auc", r.curve.auc},
            {"roc", roc_points},
            {"reliability", {{"calibrated", r.probability_calibrated}, {"bins", bins}}}};
}

inline EvaluationReport evaluation_from_json(const nlohmann::json& j) {
    EvaluationReport r;
    r.kind = parse_model_kind(j.at("classifier").get<std::string>());
    r.mask = FeatureMask::parse(j.at("feature_groups").get<std::string>());
    r.dimension = j.at("dimension").get<std::size_t>();
    const auto& c = j.at("confusion");
    r.matrix = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                c.at("fn").get<std::size_t>()};
    r.curve.auc = j.at("auc").get<double>();
    for (const auto& p : j.at("roc")) {
        RocPoint point{p.at(0).get<double>(), p.at(1).get<double>(), 0.0};
        point.threshold = p.at(2).is_string() ? std::numeric_limits<double>::infinity() : p.at(2).get<double>();
        r.curve.points.push_back(point);
    }
    r.probability_calibrated = j.at("reliability").at("calibrated").get<bool>();
    for (const auto& b : j.at("reliability").at("bins")) {
        ReliabilityBin bin;
        bin.lower = b.at("lower").get<double>();
        bin.upper = b.at("upper").get<double>();
        bin.count = b.at("count").get<std::size_t>();
        if (bin.count) {
            bin.mean_predicted = b.at("mean_predicted").get<double>();
            bin.positive_fraction = b.at("positive_fraction").get<double>();
        }
        r.calibration.bins.push_back(bin);
    }
    return r;
}

} // namespace clickbait

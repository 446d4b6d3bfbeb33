#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "eval.hpp"

namespace clickbait {

/// One rendered file: name relative to the plot directory and its contents.
struct PlotFile {
    std::string name;
    std::string contents;
};

namespace plot_detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string classifier_title(ModelKind k) {
    switch (k) {
    case ModelKind::svm: return "Linear SVM";
    case ModelKind::tree: return "Decision Tree";
    case ModelKind::forest: return "Random Forest";
    }
    return "?";
}

// A square plotting frame with [0,1] x [0,1] data coordinates.
struct Frame {
    double left = 70, top = 50, size = 320;
    double x(double v) const { return left + v * size; }
    double y(double v) const { return top + (1.0 - v) * size; }
};

class Svg {
public:
    Svg(double width, double height) {
        body_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(width) + "\" height=\"" + px(height) +
                "\" viewBox=\"0 0 " + px(width) + " " + px(height) + "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
        body_ += "<rect x=\"0\" y=\"0\" width=\"" + px(width) + "\" height=\"" + px(height) + "\" fill=\"white\"/>\n";
    }
    void text(double x, double y, std::string_view s, int size = 12, std::string_view anchor = "middle",
              std::string_view extra = "") {
        body_ += "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" font-size=\"" + std::to_string(size) +
                 "\" text-anchor=\"" + std::string(anchor) + "\"" + std::string(extra) + ">" + escape(s) + "</text>\n";
    }
    void rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke = "none") {
        body_ += "<rect x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" + px(w) + "\" height=\"" + px(h) +
                 "\" fill=\"" + std::string(fill) + "\" stroke=\"" + std::string(stroke) + "\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, std::string_view stroke, std::string_view extra = "") {
        body_ += "<line x1=\"" + px(x1) + "\" y1=\"" + px(y1) + "\" x2=\"" + px(x2) + "\" y2=\"" + px(y2) +
                 "\" stroke=\"" + std::string(stroke) + "\"" + std::string(extra) + "/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke, double width = 2.0) {
        body_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + px(width) +
                 "\" points=\"";
        for (const auto& [x, y] : pts) body_ += px(x) + "," + px(y) + " ";
        body_ += "\"/>\n";
    }
    void circle(double x, double y, double r, std::string_view fill) {
        body_ += "<circle cx=\"" + px(x) + "\" cy=\"" + px(y) + "\" r=\"" + px(r) + "\" fill=\"" + std::string(fill) +
                 "\"/>\n";
    }
    std::string finish() const { return body_ + "</svg>\n"; }

private:
    std::string body_;
};

inline void unit_axes(Svg& svg, const Frame& f, std::string_view xlabel, std::string_view ylabel) {
    svg.rect(f.left, f.top, f.size, f.size, "none", "#333333");
    for (int k = 0; k <= 5; ++k) {
        const double v = k / 5.0;
        svg.line(f.x(v), f.y(0), f.x(v), f.y(0) + 5, "#333333");
        svg.line(f.x(0) - 5, f.y(v), f.x(0), f.y(v), "#333333");
        svg.text(f.x(v), f.y(0) + 18, px(v).substr(0, 3), 10);
        svg.text(f.x(0) - 8, f.y(v) + 4, px(v).substr(0, 3), 10, "end");
    }
    svg.text(f.x(0.5), f.y(0) + 38, xlabel, 12);
    const std::string rotate = " transform=\"rotate(-90 " + px(f.left - 45) + " " + px(f.y(0.5)) + ")\"";
    svg.text(f.left - 45, f.y(0.5), ylabel, 12, "middle", rotate);
}

inline std::string heat_colour(double fraction) {
    const int shade = static_cast<int>(std::lround(255.0 - 200.0 * std::clamp(fraction, 0.0, 1.0)));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", shade, shade, 255);
    return buf;
}

inline PlotFile confusion_svg(const EvaluationReport& r) {
    Svg svg(460, 430);
    const std::string title = classifier_title(r.kind) + " confusion matrix";
    svg.text(230, 28, title, 15);
    const double cell = 150, left = 110, top = 70;
    const std::size_t total = std::max<std::size_t>(1, r.matrix.total());
    // Rows are actual labels, columns predicted; clickbait first.
    const std::size_t counts[2][2] = {{r.matrix.tp, r.matrix.fn}, {r.matrix.fp, r.matrix.tn}};
    const char* names[2] = {"clickbait", "non-clickbait"};
    for (int row = 0; row < 2; ++row) {
        for (int col = 0; col < 2; ++col) {
            const double share = static_cast<double>(counts[row][col]) / static_cast<double>(total);
            svg.rect(left + col * cell, top + row * cell, cell, cell, heat_colour(share), "#333333");
            svg.text(left + col * cell + cell / 2, top + row * cell + cell / 2 + 6, std::to_string(counts[row][col]), 20,
                     "middle", share > 0.6 ? " fill=\"white\"" : "");
        }
        svg.text(left - 8, top + row * cell + cell / 2 + 4, names[row], 12, "end");
        svg.text(left + row * cell + cell / 2, top + 2 * cell + 20, names[row], 12);
    }
    svg.text(left + cell, top + 2 * cell + 44, "Predicted", 13);
    svg.text(left - 8, top - 12, "Actual", 13, "end");
    return {std::string(to_string(r.kind)) + "_confusion.svg", svg.finish()};
}

inline PlotFile confusion_tsv(const EvaluationReport& r) {
    std::string s = "actual\tpredicted\tcount\n";
    s += "clickbait\tclickbait\t" + std::to_string(r.matrix.tp) + "\n";
    s += "clickbait\tnon_clickbait\t" + std::to_string(r.matrix.fn) + "\n";
    s += "non_clickbait\tclickbait\t" + std::to_string(r.matrix.fp) + "\n";
    s += "non_clickbait\tnon_clickbait\t" + std::to_string(r.matrix.tn) + "\n";
    return {std::string(to_string(r.kind)) + "_confusion.tsv", s};
}

inline PlotFile roc_svg(const EvaluationReport& r) {
    Svg svg(440, 440);
    const Frame f;
    svg.text(230, 28, classifier_title(r.kind) + " ROC (AUC " + px(r.curve.auc).substr(0, 4) + ")", 15);
    unit_axes(svg, f, "False positive rate", "True positive rate");
    svg.line(f.x(0), f.y(0), f.x(1), f.y(1), "#999999", " stroke-dasharray=\"5,4\"");
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : r.curve.points) pts.emplace_back(f.x(p.fpr), f.y(p.tpr));
    svg.polyline(pts, "#c0392b");
    return {std::string(to_string(r.kind)) + "_roc.svg", svg.finish()};
}

inline PlotFile roc_tsv(const EvaluationReport& r) {
    std::string s = "fpr\ttpr\tthreshold\n";
    for (const auto& p : r.curve.points)
        s += num(p.fpr) + "\t" + num(p.tpr) + "\t" + (std::isinf(p.threshold) ? std::string("inf") : num(p.threshold)) + "\n";
    return {std::string(to_string(r.kind)) + "_roc.tsv", s};
}

inline PlotFile auc_svg(std::span<const EvaluationReport> all, const EvaluationReport& focus) {
    Svg svg(440, 440);
    const Frame f;
    svg.text(230, 28, "AUC by classifier (" + classifier_title(focus.kind) + " highlighted)", 15);
    unit_axes(svg, f, "Classifier", "AUC");
    const double slot = f.size / static_cast<double>(all.size());
    for (std::size_t k = 0; k < all.size(); ++k) {
        const auto& r = all[k];
        const double x0 = f.left + slot * static_cast<double>(k) + slot * 0.2;
        const std::string fill = r.kind == focus.kind ? "#c0392b" : "#95a5a6";
        svg.rect(x0, f.y(r.curve.auc), slot * 0.6, f.y(0) - f.y(r.curve.auc), fill);
        svg.text(x0 + slot * 0.3, f.y(r.curve.auc) - 6, px(r.curve.auc).substr(0, 4), 11);
        svg.text(x0 + slot * 0.3, f.y(0) - 8, std::string(to_string(r.kind)), 11, "middle", " fill=\"white\"");
    }
    return {std::string(to_string(focus.kind)) + "_auc.svg", svg.finish()};
}

inline PlotFile auc_tsv(std::span<const EvaluationReport> all, const EvaluationReport& focus) {
    std::string s = "classifier\tauc\thighlighted\n";
    for (const auto& r : all)
        s += std::string(to_string(r.kind)) + "\t" + num(r.curve.auc) + "\t" + (r.kind == focus.kind ? "1" : "0") + "\n";
    return {std::string(to_string(focus.kind)) + "_auc.tsv", s};
}

inline PlotFile reliability_svg(const EvaluationReport& r) {
    Svg svg(440, 440);
    const Frame f;
    std::string title = classifier_title(r.kind) + " reliability";
    if (!r.probability_calibrated) title += " (logistic of margin, uncalibrated)";
    svg.text(230, 28, title, 14);
    unit_axes(svg, f, "Mean predicted probability", "Fraction of clickbait");
    svg.line(f.x(0), f.y(0), f.x(1), f.y(1), "#999999", " stroke-dasharray=\"5,4\"");
    std::vector<std::pair<double, double>> pts;
    for (const auto& b : r.calibration.bins) {
        if (b.count == 0) continue;
        pts.emplace_back(f.x(b.mean_predicted), f.y(b.positive_fraction));
    }
    svg.polyline(pts, "#2471a3");
    for (const auto& [x, y] : pts) svg.circle(x, y, 3.5, "#2471a3");
    return {std::string(to_string(r.kind)) + "_reliability.svg", svg.finish()};
}

inline PlotFile reliability_tsv(const EvaluationReport& r) {
    std::string s = "lower\tupper\tcount\tmean_predicted\tpositive_fraction\n";
    for (const auto& b : r.calibration.bins) {
        s += num(b.lower) + "\t" + num(b.upper) + "\t" + std::to_string(b.count) + "\t";
        s += b.count ? num(b.mean_predicted) + "\t" + num(b.positive_fraction) : std::string("-\t-");
        s += "\n";
    }
    return {std::string(to_string(r.kind)) + "_reliability.tsv", s};
}

} // namespace plot_detail

/// Renders the four figure kinds (confusion heatmap, ROC, AUC bars,
/// reliability) for each classifier, each with a TSV of the plotted data.
inline std::vector<PlotFile> render_plots(std::span<const EvaluationReport> evaluations) {
    if (evaluations.empty()) throw ParameterError("cannot render plots for an empty report");
    std::vector<PlotFile> files;
    for (const auto& r : evaluations) {
        files.push_back(plot_detail::confusion_svg(r));
        files.push_back(plot_detail::confusion_tsv(r));
        files.push_back(plot_detail::roc_svg(r));
        files.push_back(plot_detail::roc_tsv(r));
        files.push_back(plot_detail::auc_svg(evaluations, r));
        files.push_back(plot_detail::auc_tsv(evaluations, r));
        files.push_back(plot_detail::reliability_svg(r));
        files.push_back(plot_detail::reliability_tsv(r));
    }
    return files;
}

/// Renders everything first and only then writes, so a rendering error leaves no files behind.
inline std::vector<std::filesystem::path> write_plots(std::span<const EvaluationReport> evaluations,
                                                      const std::filesystem::path& dir) {
    const auto files = render_plots(evaluations);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create plot directory " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    for (const auto& f : files) {
        const auto path = dir / f.name;
        std::ofstream out(path, std::ios::binary);
        out << f.contents;
        if (!out) throw DataError("cannot write plot file " + path.string());
        written.push_back(path);
    }
    return written;
}

} // namespace clickbait

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace clickbait {

// ---------------------------------------------------------------------------
// Feature groups

enum class FeatureGroup { flags, formality, marks_length, embedding, cluster };

inline constexpr std::array<FeatureGroup, 5> kAllGroups{FeatureGroup::flags, FeatureGroup::formality,
                                                        FeatureGroup::marks_length, FeatureGroup::embedding,
                                                        FeatureGroup::cluster};

inline std::string_view to_string(FeatureGroup g) {
    switch (g) {
    case FeatureGroup::flags: return "flags";
    case FeatureGroup::formality: return "formality";
    case FeatureGroup::marks_length: return "marks_length";
    case FeatureGroup::embedding: return "embedding";
    case FeatureGroup::cluster: return "cluster";
    }
    return "?";
}

inline FeatureGroup parse_group(std::string_view s) {
    for (FeatureGroup g : kAllGroups)
        if (to_string(g) == s) return g;
    throw ParameterError("unknown feature group '" + std::string(s) +
                         "' (expected flags, formality, marks_length, embedding or cluster)");
}

/// Set of feature groups, one bit per group in kAllGroups order.
class FeatureMask {
public:
    FeatureMask() = default;
    FeatureMask(std::initializer_list<FeatureGroup> groups) {
        for (FeatureGroup g : groups) add(g);
    }
    static FeatureMask all() {
        FeatureMask m;
        for (FeatureGroup g : kAllGroups) m.add(g);
        return m;
    }
    static FeatureMask parse(std::string_view list) {
        if (list == "all") return all();
        FeatureMask m;
        std::size_t start = 0;
        while (start <= list.size()) {
            const auto comma = std::min(list.find(',', start), list.size());
            if (comma > start) m.add(parse_group(list.substr(start, comma - start)));
            start = comma + 1;
        }
        if (m.empty()) throw ParameterError("feature mask is empty");
        return m;
    }

    void add(FeatureGroup g) { bits_ |= bit(g); }
    bool contains(FeatureGroup g) const { return (bits_ & bit(g)) != 0; }
    bool empty() const { return bits_ == 0; }
    std::vector<FeatureGroup> groups() const {
        std::vector<FeatureGroup> out;
        for (FeatureGroup g : kAllGroups)
            if (contains(g)) out.push_back(g);
        return out;
    }
    std::string str() const {
        std::string out;
        for (FeatureGroup g : groups()) {
            if (!out.empty()) out += ',';
            out += to_string(g);
        }
        return out;
    }
    bool operator==(const FeatureMask&) const = default;

private:
    static unsigned bit(FeatureGroup g) { return 1u << static_cast<unsigned>(g); }
    unsigned bits_ = 0;
};

/// Named feature columns with their group; rows are headlines.
struct FeatureTable {
    std::vector<std::string> names;
    std::vector<FeatureGroup> group_of;
    std::vector<bool> binary; // 0/1 columns are left unscaled by the standardizer
    Matrix values;

    std::size_t dimension() const { return names.size(); }

    std::vector<std::size_t> columns(const FeatureMask& mask) const {
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < names.size(); ++c)
            if (mask.contains(group_of[c])) cols.push_back(c);
        return cols;
    }

    FeatureTable select(const FeatureMask& mask) const {
        const auto cols = columns(mask);
        if (cols.empty()) throw ParameterError("feature mask '" + mask.str() + "' selects no columns");
        FeatureTable out;
        for (std::size_t c : cols) {
            out.names.push_back(names[c]);
            out.group_of.push_back(group_of[c]);
            out.binary.push_back(binary[c]);
        }
        out.values = values.select_cols(cols);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Standardization

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& x, const std::vector<bool>& binary) {
        Standardizer s;
        const std::size_t n = x.rows(), d = x.cols();
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 1.0);
        for (std::size_t c = 0; c < d; ++c) {
            if (c < binary.size() && binary[c]) continue;
            double sum = 0.0;
            for (std::size_t r = 0; r < n; ++r) sum += x(r, c);
            const double m = sum / static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t r = 0; r < n; ++r) ss += (x(r, c) - m) * (x(r, c) - m);
            const double sd = std::sqrt(ss / static_cast<double>(n));
            s.mean[c] = m;
            s.scale[c] = sd > 0.0 ? sd : 1.0;
        }
        return s;
    }

    void apply(std::span<const double> in, std::span<double> out) const {
        for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
    }

    Matrix transform(const Matrix& x) const {
        Matrix out(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) apply(x.row(r), out.row(r));
        return out;
    }
};

// ---------------------------------------------------------------------------
// Linear SVM

struct SvmConfig {
    double lambda = 1e-4;
    std::size_t epochs = 20;
    std::uint64_t seed = 42;

    void validate() const {
        if (!(lambda > 0.0)) throw ParameterError("svm lambda must be > 0");
        if (epochs == 0) throw ParameterError("svm epochs must be > 0");
    }
};

struct SvmModel {
    Standardizer standardizer;
    std::vector<double> weights; // over standardized features
    double bias = 0.0;
    std::vector<double> epoch_objective;

    double score(std::span<const double> x) const {
        double s = bias;
        for (std::size_t c = 0; c < weights.size(); ++c) s += weights[c] * ((x[c] - standardizer.mean[c]) / standardizer.scale[c]);
        return s;
    }
};

namespace learner_detail {

inline void require_labels(const Matrix& x, std::span<const Label> y) {
    if (x.rows() != y.size()) throw ParameterError("one label per feature row required");
    if (x.rows() == 0) throw ParameterError("no training examples");
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (double v : x.row(r))
            if (!std::isfinite(v)) throw NumericError("non-finite feature value in row " + std::to_string(r));
}

inline double sign_of(Label l) { return is_positive(l) ? 1.0 : -1.0; }

} // namespace learner_detail

/// Primal objective lambda/2 |w|^2 + mean hinge loss, with the bias treated
/// as a weight on a constant feature.
inline double svm_objective(const Matrix& xs, std::span<const Label> y, std::span<const double> w, double b,
                            double lambda) {
    double norm = b * b;
    for (double v : w) norm += v * v;
    double hinge = 0.0;
    for (std::size_t r = 0; r < xs.rows(); ++r) {
        double s = b;
        for (std::size_t c = 0; c < w.size(); ++c) s += w[c] * xs(r, c);
        hinge += std::max(0.0, 1.0 - learner_detail::sign_of(y[r]) * s);
    }
    return 0.5 * lambda * norm + hinge / static_cast<double>(xs.rows());
}

/// Pegasos stochastic sub-gradient descent on hinge loss + L2, one shuffled
/// pass per epoch, step 1/(lambda t), projection onto the 1/sqrt(lambda) ball.
/// The returned weights are the average of all iterates.
inline SvmModel train_svm(const Matrix& x, std::span<const Label> y, const std::vector<bool>& binary,
                          const SvmConfig& config) {
    config.validate();
    learner_detail::require_labels(x, y);
    const auto positives = static_cast<std::size_t>(std::count_if(y.begin(), y.end(), is_positive));
    if (positives == 0 || positives == y.size())
        throw ParameterError("svm training needs examples of both classes");

    SvmModel model;
    model.standardizer = Standardizer::fit(x, binary);
    const Matrix xs = model.standardizer.transform(x);
    const std::size_t n = xs.rows(), d = xs.cols();
    std::vector<double> w(d, 0.0), avg(d, 0.0);
    double b = 0.0, avg_b = 0.0;
    const double radius = 1.0 / std::sqrt(config.lambda);

    Rng rng(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::uint64_t t = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t r : order) {
            ++t;
            const double eta = 1.0 / (config.lambda * static_cast<double>(t));
            const double label = learner_detail::sign_of(y[r]);
            double s = b;
            for (std::size_t c = 0; c < d; ++c) s += w[c] * xs(r, c);
            const double shrink = 1.0 - eta * config.lambda;
            for (auto& v : w) v *= shrink;
            b *= shrink;
            if (label * s < 1.0) {
                for (std::size_t c = 0; c < d; ++c) w[c] += eta * label * xs(r, c);
                b += eta * label;
            }
            double norm = b * b;
            for (double v : w) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > radius) {
                const double f = radius / norm;
                for (auto& v : w) v *= f;
                b *= f;
            }
            const double k = 1.0 / static_cast<double>(t);
            for (std::size_t c = 0; c < d; ++c) avg[c] += (w[c] - avg[c]) * k;
            avg_b += (b - avg_b) * k;
        }
        const double objective = svm_objective(xs, y, avg, avg_b, config.lambda);
        if (!std::isfinite(objective)) throw NumericError("svm objective non-finite at epoch " + std::to_string(epoch));
        model.epoch_objective.push_back(objective);
    }
    model.weights = std::move(avg);
    model.bias = avg_b;
    return model;
}

// ---------------------------------------------------------------------------
// CART trees

struct TreeConfig {
    std::size_t max_depth = 0; // 0 = unbounded
    std::size_t min_leaf = 2;
    std::size_t features_per_split = 0; // 0 = all features

    void validate() const {
        if (min_leaf == 0) throw ParameterError("min_leaf must be >= 1");
    }
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0; // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    double score = 0.0; // clickbait fraction of training rows reaching the node
    std::size_t count = 0;

    bool leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    double score(std::span<const double> x) const {
        std::size_t i = 0;
        while (!nodes[i].leaf())
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                                              : nodes[i].right);
        return nodes[i].score;
    }

    std::size_t depth() const {
        std::size_t best = 0;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            auto [i, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            if (!nodes[i].leaf()) {
                stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
                stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
            }
        }
        return best;
    }

    bool operator==(const DecisionTree&) const = default;
};

inline double gini(double positives, double total) {
    if (total <= 0.0) return 0.0;
    const double p = positives / total;
    return 2.0 * p * (1.0 - p);
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0; // size-weighted child impurity; lower is better
};

/// Best (feature, midpoint threshold) over `features` for the given rows by
/// weighted Gini impurity. Ties keep the lowest feature, then the lowest threshold.
inline SplitChoice best_split(const Matrix& x, std::span<const Label> y, std::span<const std::size_t> rows,
                              std::span<const std::size_t> features, std::size_t min_leaf) {
    SplitChoice best;
    const double n = static_cast<double>(rows.size());
    double total_pos = 0.0;
    for (std::size_t r : rows) total_pos += is_positive(y[r]) ? 1.0 : 0.0;
    std::vector<std::size_t> sorted(rows.begin(), rows.end());
    for (std::size_t f : features) {
        std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
        double left_pos = 0.0;
        for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
            left_pos += is_positive(y[sorted[k]]) ? 1.0 : 0.0;
            const double lo = x(sorted[k], f), hi = x(sorted[k + 1], f);
            if (!(lo < hi)) continue;
            const std::size_t left_n = k + 1, right_n = sorted.size() - left_n;
            if (left_n < min_leaf || right_n < min_leaf) continue;
            const double ln = static_cast<double>(left_n), rn = static_cast<double>(right_n);
            const double impurity = (ln * gini(left_pos, ln) + rn * gini(total_pos - left_pos, rn)) / n;
            if (best.feature < 0 || impurity < best.impurity) {
                best.feature = static_cast<int>(f);
                const double mid = lo + (hi - lo) / 2.0;
                best.threshold = mid < hi ? mid : lo; // adjacent doubles: the midpoint rounds up to hi
                best.impurity = impurity;
            }
        }
    }
    return best;
}

/// Grows a CART tree on `rows` of x (duplicates allowed, as in a bootstrap
/// sample). A node becomes a leaf when pure, too small to give both children
/// min_leaf rows, at max_depth, or when no threshold exists.
inline DecisionTree grow_tree(const Matrix& x, std::span<const Label> y, std::vector<std::size_t> rows,
                              const TreeConfig& config, Rng* feature_rng = nullptr) {
    config.validate();
    DecisionTree tree;
    struct Pending {
        std::size_t node;
        std::vector<std::size_t> rows;
        std::size_t depth;
    };
    const std::size_t d = x.cols();
    const std::size_t m = config.features_per_split == 0 ? d : std::min(d, config.features_per_split);
    std::vector<std::size_t> all_features(d);
    std::iota(all_features.begin(), all_features.end(), std::size_t{0});

    tree.nodes.emplace_back();
    std::vector<Pending> stack;
    stack.push_back({0, std::move(rows), 0});
    while (!stack.empty()) {
        Pending job = std::move(stack.back());
        stack.pop_back();
        double pos = 0.0;
        for (std::size_t r : job.rows) pos += is_positive(y[r]) ? 1.0 : 0.0;
        const double total = static_cast<double>(job.rows.size());
        tree.nodes[job.node].score = total > 0 ? pos / total : 0.0;
        tree.nodes[job.node].count = job.rows.size();

        const bool pure = pos == 0.0 || pos == total;
        const bool depth_cap = config.max_depth != 0 && job.depth >= config.max_depth;
        if (pure || depth_cap || job.rows.size() < 2 * config.min_leaf) continue;

        std::vector<std::size_t> features;
        if (m == d) {
            features = all_features;
        } else {
            features = all_features;
            for (std::size_t k = 0; k < m; ++k) std::swap(features[k], features[k + feature_rng->below(d - k)]);
            features.resize(m);
            std::sort(features.begin(), features.end());
        }
        const SplitChoice split = best_split(x, y, job.rows, features, config.min_leaf);
        if (split.feature < 0) continue;

        std::vector<std::size_t> left, right;
        for (std::size_t r : job.rows)
            (x(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
        const auto left_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[job.node];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left_id;
        node.right = left_id + 1;
        stack.push_back({static_cast<std::size_t>(left_id + 1), std::move(right), job.depth + 1});
        stack.push_back({static_cast<std::size_t>(left_id), std::move(left), job.depth + 1});
    }
    return tree;
}

inline DecisionTree train_tree(const Matrix& x, std::span<const Label> y, const TreeConfig& config) {
    learner_detail::require_labels(x, y);
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    TreeConfig full = config;
    full.features_per_split = 0;
    return grow_tree(x, y, std::move(rows), full);
}

// ---------------------------------------------------------------------------
// Random forest

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t features_per_split = 0; // 0 = floor(sqrt(d)), at least 1
    bool bootstrap = true;
    std::size_t max_depth = 0;
    std::size_t min_leaf = 2;
    std::uint64_t seed = 42;
    std::size_t threads = 1;

    void validate() const {
        if (n_trees < 1) throw ParameterError("forest needs n_trees >= 1");
        if (min_leaf == 0) throw ParameterError("min_leaf must be >= 1");
    }

    std::size_t split_features(std::size_t d) const {
        if (features_per_split != 0) return std::min(d, features_per_split);
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
    }
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    std::vector<std::uint64_t> seeds;

    /// Fraction of trees whose leaf puts the row on the clickbait side.
    double score(std::span<const double> x) const {
        std::size_t votes = 0;
        for (const auto& tree : trees) votes += tree.score(x) >= 0.5 ? 1 : 0;
        return static_cast<double>(votes) / static_cast<double>(trees.size());
    }

    bool operator==(const RandomForest&) const = default;
};

inline RandomForest train_forest(const Matrix& x, std::span<const Label> y, const ForestConfig& config) {
    config.validate();
    learner_detail::require_labels(x, y);
    RandomForest forest;
    forest.trees.resize(config.n_trees);
    forest.seeds.resize(config.n_trees);
    for (std::size_t t = 0; t < config.n_trees; ++t) forest.seeds[t] = Rng::derive(config.seed, t);
    TreeConfig tree_config;
    tree_config.max_depth = config.max_depth;
    tree_config.min_leaf = config.min_leaf;
    tree_config.features_per_split = config.split_features(x.cols());
    const std::size_t n = x.rows();
    parallel_for(config.n_trees, config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            Rng rng(forest.seeds[t]);
            std::vector<std::size_t> rows(n);
            if (config.bootstrap) {
                for (auto& r : rows) r = rng.below(n);
                std::sort(rows.begin(), rows.end());
            } else {
                std::iota(rows.begin(), rows.end(), std::size_t{0});
            }
            forest.trees[t] = grow_tree(x, y, std::move(rows), tree_config, &rng);
        }
    });
    return forest;
}

// ---------------------------------------------------------------------------
// Uniform model interface

enum class ModelKind { svm, tree, forest };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
    case ModelKind::svm: return "svm";
    case ModelKind::tree: return "tree";
    case ModelKind::forest: return "forest";
    }
    return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
    if (s == "svm") return ModelKind::svm;
    if (s == "tree") return ModelKind::tree;
    if (s == "forest") return ModelKind::forest;
    throw ParameterError("unknown model kind '" + std::string(s) + "'");
}

inline constexpr std::array<ModelKind, 3> kAllModelKinds{ModelKind::svm, ModelKind::tree, ModelKind::forest};

struct TrainedModel {
    ModelKind kind = ModelKind::svm;
    FeatureMask mask;
    std::vector<std::string> feature_names;
    SvmModel svm;
    DecisionTree tree;
    RandomForest forest;
    nlohmann::json config; // hyperparameters used for training

    std::size_t dimension() const { return feature_names.size(); }

    double threshold() const { return kind == ModelKind::svm ? 0.0 : 0.5; }

    /// Higher = more clickbait. x holds the masked feature columns in model order.
    double score(std::span<const double> x) const {
        if (x.size() != dimension())
            throw ParameterError("feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                                 std::to_string(dimension()));
        switch (kind) {
        case ModelKind::svm: return svm.score(x);
        case ModelKind::tree: return tree.score(x);
        case ModelKind::forest: return forest.score(x);
        }
        return 0.0;
    }

    Label predict(std::span<const double> x) const {
        return score(x) >= threshold() ? Label::clickbait : Label::non_clickbait;
    }

    std::vector<double> score_all(const Matrix& x) const {
        std::vector<double> out(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) out[r] = score(x.row(r));
        return out;
    }
};

struct LearnerConfig {
    SvmConfig svm;
    TreeConfig tree;
    ForestConfig forest;
};

inline nlohmann::json to_json(const LearnerConfig& c) {
    return {{"svm", {{"lambda", c.svm.lambda}, {"epochs", c.svm.epochs}, {"seed", c.svm.seed}}},
            {"tree", {{"max_depth", c.tree.max_depth}, {"min_leaf", c.tree.min_leaf}}},
            {"forest",
             {{"n_trees", c.forest.n_trees},
              {"features_per_split", c.forest.features_per_split},
              {"bootstrap", c.forest.bootstrap},
              {"max_depth", c.forest.max_depth},
              {"min_leaf", c.forest.min_leaf},
              {"seed", c.forest.seed}}}};
}

inline LearnerConfig learner_config_from_json(const nlohmann::json& j, LearnerConfig c = {}) {
    if (j.contains("svm")) {
        const auto& s = j.at("svm");
        c.svm.lambda = s.value("lambda", c.svm.lambda);
        c.svm.epochs = s.value("epochs", c.svm.epochs);
        c.svm.seed = s.value("seed", c.svm.seed);
    }
    if (j.contains("tree")) {
        const auto& t = j.at("tree");
        c.tree.max_depth = t.value("max_depth", c.tree.max_depth);
        c.tree.min_leaf = t.value("min_leaf", c.tree.min_leaf);
    }
    if (j.contains("forest")) {
        const auto& f = j.at("forest");
        c.forest.n_trees = f.value("n_trees", c.forest.n_trees);
        c.forest.features_per_split = f.value("features_per_split", c.forest.features_per_split);
        c.forest.bootstrap = f.value("bootstrap", c.forest.bootstrap);
        c.forest.max_depth = f.value("max_depth", c.forest.max_depth);
        c.forest.min_leaf = f.value("min_leaf", c.forest.min_leaf);
        c.forest.seed = f.value("seed", c.forest.seed);
    }
    c.svm.validate();
    c.tree.validate();
    c.forest.validate();
    return c;
}

/// Trains one model of `kind` on the columns of `table` selected by `mask`.
inline TrainedModel train_model(ModelKind kind, const FeatureTable& table, std::span<const Label> y,
                                const FeatureMask& mask, const LearnerConfig& config) {
    const FeatureTable view = table.select(mask);
    TrainedModel model;
    model.kind = kind;
    model.mask = mask;
    model.feature_names = view.names;
    const auto cfg = to_json(config);
    switch (kind) {
    case ModelKind::svm:
        model.svm = train_svm(view.values, y, view.binary, config.svm);
        model.config = cfg.at("svm");
        break;
    case ModelKind::tree:
        model.tree = train_tree(view.values, y, config.tree);
        model.config = cfg.at("tree");
        break;
    case ModelKind::forest:
        model.forest = train_forest(view.values, y, config.forest);
        model.config = cfg.at("forest");
        break;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kModelFormatVersion = 1;

namespace learner_detail {

inline nlohmann::json tree_json(const DecisionTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.score, n.count});
    return nodes;
}

inline DecisionTree tree_from_json(const nlohmann::json& nodes) {
    DecisionTree tree;
    for (const auto& n : nodes) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.score = n.at(4).get<double>();
        node.count = n.at(5).get<std::size_t>();
        tree.nodes.push_back(node);
    }
    const auto size = static_cast<int>(tree.nodes.size());
    if (size == 0) throw DataError("model file: tree without nodes");
    for (const auto& n : tree.nodes)
        if (!n.leaf() && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size))
            throw DataError("model file: tree child index out of range");
    return tree;
}

} // namespace learner_detail

inline nlohmann::json to_json(const TrainedModel& m) {
    nlohmann::json groups = nlohmann::json::array();
    for (FeatureGroup g : m.mask.groups()) groups.push_back(to_string(g));
    nlohmann::json j{{"format", "clickbait-model"},
                     {"version", kModelFormatVersion},
                     {"kind", to_string(m.kind)},
                     {"feature_groups", groups},
                     {"features", m.feature_names},
                     {"threshold", m.threshold()},
                     {"config", m.config}};
    switch (m.kind) {
    case ModelKind::svm:
        j["svm"] = {{"weights", m.svm.weights},
                    {"bias", m.svm.bias},
                    {"mean", m.svm.standardizer.mean},
                    {"scale", m.svm.standardizer.scale},
                    {"epoch_objective", m.svm.epoch_objective}};
        break;
    case ModelKind::tree: j["tree"] = learner_detail::tree_json(m.tree); break;
    case ModelKind::forest: {
        nlohmann::json trees = nlohmann::json::array();
        for (std::size_t t = 0; t < m.forest.trees.size(); ++t)
            trees.push_back({{"seed", m.forest.seeds[t]}, {"nodes", learner_detail::tree_json(m.forest.trees[t])}});
        j["forest"] = trees;
        break;
    }
    }
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "clickbait-model") throw DataError("not a clickbait model file");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw DataError("unsupported model file version " + j.at("version").dump());
        TrainedModel m;
        m.kind = parse_model_kind(j.at("kind").get<std::string>());
        for (const auto& g : j.at("feature_groups")) m.mask.add(parse_group(g.get<std::string>()));
        m.feature_names = j.at("features").get<std::vector<std::string>>();
        m.config = j.value("config", nlohmann::json::object());
        const std::size_t d = m.feature_names.size();
        switch (m.kind) {
        case ModelKind::svm: {
            const auto& s = j.at("svm");
            m.svm.weights = s.at("weights").get<std::vector<double>>();
            m.svm.bias = s.at("bias").get<double>();
            m.svm.standardizer.mean = s.at("mean").get<std::vector<double>>();
            m.svm.standardizer.scale = s.at("scale").get<std::vector<double>>();
            m.svm.epoch_objective = s.value("epoch_objective", std::vector<double>{});
            if (m.svm.weights.size() != d || m.svm.standardizer.mean.size() != d || m.svm.standardizer.scale.size() != d)
                throw DataError("model file: svm vectors do not match feature count");
            break;
        }
        case ModelKind::tree: m.tree = learner_detail::tree_from_json(j.at("tree")); break;
        case ModelKind::forest:
            for (const auto& t : j.at("forest")) {
                m.forest.seeds.push_back(t.at("seed").get<std::uint64_t>());
                m.forest.trees.push_back(learner_detail::tree_from_json(t.at("nodes")));
            }
            if (m.forest.trees.empty()) throw DataError("model file: forest without trees");
            break;
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

inline void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file " + path);
    out << to_json(m).dump(1) << '\n';
    if (!out) throw DataError("failed writing model file " + path);
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read model file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace clickbait

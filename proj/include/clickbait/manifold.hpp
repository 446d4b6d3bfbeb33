#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace clickbait {

/// Row-stochastic Gaussian neighbour probabilities P(j|i) with per-row bandwidths.
struct AffinityMatrix {
    std::size_t n = 0;
    std::vector<double> p; // n x n, row i holds P(.|i), zero diagonal
    std::vector<double> sigmas;
    double target_perplexity = 0.0;
    std::size_t degenerate_rows = 0; // rows whose neighbours all coincide with the point

    double operator()(std::size_t i, std::size_t j) const { return p[i * n + j]; }
    std::span<const double> row(std::size_t i) const { return {p.data() + i * n, n}; }
};

/// 2^H of a probability row, H in bits (equivalently exp of the natural entropy).
inline double row_perplexity(std::span<const double> row) {
    double h = 0.0;
    for (double v : row)
        if (v > 0.0) h -= v * std::log(v);
    return std::exp(h);
}

namespace manifold_detail {

// Fills `out` with exp(-beta * (d_j - d_min)) / sum over j != self; returns natural entropy.
inline double gaussian_row(std::span<const double> dist, std::size_t self, double d_min, double beta,
                           std::span<double> out) {
    double sum = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        out[j] = j == self ? 0.0 : std::exp(-beta * (dist[j] - d_min));
        sum += out[j];
    }
    double weighted = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        out[j] /= sum;
        if (j != self) weighted += out[j] * (dist[j] - d_min);
    }
    return std::log(sum) + beta * weighted;
}

} // namespace manifold_detail

/// P(j|i) = exp(-|x_i - x_j|^2 / 2 s_i^2) / sum_{k != i} exp(-|x_i - x_k|^2 / 2 s_i^2),
/// with each s_i found by bisection so the row perplexity matches the target.
inline AffinityMatrix conditional_affinities(const Matrix& points, double perplexity, std::size_t threads = 1) {
    const std::size_t n = points.rows();
    if (n < 2) throw ParameterError("affinities need at least 2 points");
    if (!(perplexity >= 1.0 && perplexity <= static_cast<double>(n - 1)))
        throw ParameterError("perplexity must lie in [1, n-1]; got " + std::to_string(perplexity) + " for n=" +
                             std::to_string(n));
    AffinityMatrix a;
    a.n = n;
    a.p.assign(n * n, 0.0);
    a.sigmas.assign(n, 0.0);
    a.target_perplexity = perplexity;
    std::vector<char> degenerate(n, 0);
    const double target_entropy = std::log(perplexity);

    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> dist(n);
        for (std::size_t i = begin; i < end; ++i) {
            double d_min = std::numeric_limits<double>::infinity();
            double d_max = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                dist[j] = j == i ? 0.0 : squared_distance(points.row(i), points.row(j));
                if (j == i) continue;
                d_min = std::min(d_min, dist[j]);
                d_max = std::max(d_max, dist[j]);
            }
            std::span<double> out(a.p.data() + i * n, n);
            if (d_max == d_min) {
                // Every neighbour equidistant (or coincident): any bandwidth gives the uniform row.
                for (std::size_t j = 0; j < n; ++j) out[j] = j == i ? 0.0 : 1.0 / static_cast<double>(n - 1);
                a.sigmas[i] = std::numeric_limits<double>::infinity();
                degenerate[i] = d_max == 0.0;
                continue;
            }
            double spread = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) spread += dist[j] - d_min;
            spread /= static_cast<double>(n - 1);
            // Bisection on t = log(beta * spread); entropy decreases in beta.
            double lo = -50.0, hi = 50.0, t = 0.0;
            for (int iter = 0; iter < 50; ++iter) {
                t = 0.5 * (lo + hi);
                const double h = manifold_detail::gaussian_row(dist, i, d_min, std::exp(t) / spread, out);
                if (std::abs(h - target_entropy) < 1e-12) break;
                if (h > target_entropy) lo = t;
                else hi = t;
            }
            const double beta = std::exp(t) / spread;
            manifold_detail::gaussian_row(dist, i, d_min, beta, out);
            a.sigmas[i] = std::sqrt(1.0 / (2.0 * beta));
        }
    });
    a.degenerate_rows = static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
    return a;
}

/// Joint affinities p_ij = (P(j|i) + P(i|j)) / 2n, n x n row-major.
struct JointMatrix {
    std::size_t n = 0;
    std::vector<double> p;

    double operator()(std::size_t i, std::size_t j) const { return p[i * n + j]; }
};

inline JointMatrix symmetrize(const AffinityMatrix& a) {
    JointMatrix joint;
    joint.n = a.n;
    joint.p.assign(a.n * a.n, 0.0);
    const double denom = 2.0 * static_cast<double>(a.n);
    for (std::size_t i = 0; i < a.n; ++i)
        for (std::size_t j = 0; j < a.n; ++j)
            if (i != j) joint.p[i * a.n + j] = (a(i, j) + a(j, i)) / denom;
    return joint;
}

// ---------------------------------------------------------------------------
// t-SNE

struct TsneConfig {
    double perplexity = 30.0; // lowered to (n-1)/3 on small inputs
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    std::size_t momentum_switch = 250;
    double exaggeration = 12.0;
    std::size_t exaggeration_iterations = 250;
    std::uint64_t seed = 42;
    std::size_t threads = 1;

    void validate() const {
        if (iterations == 0) throw ParameterError("t-SNE iterations must be > 0");
        if (!(perplexity > 0.0)) throw ParameterError("perplexity must be > 0");
        if (!(learning_rate > 0.0)) throw ParameterError("t-SNE learning rate must be > 0");
        if (exaggeration < 1.0) throw ParameterError("early exaggeration must be >= 1");
    }

    double effective_perplexity(std::size_t n) const {
        const double cap = std::max(1.0, static_cast<double>(n - 1) / 3.0);
        return std::min(perplexity, cap);
    }

    /// Step size actually used: n / exaggeration (at least 50) caps the
    /// configured rate, so small inputs do not overshoot under exaggeration.
    double effective_learning_rate(std::size_t n) const {
        return std::min(learning_rate, std::max(50.0, static_cast<double>(n) / exaggeration));
    }
};

struct Embedding2D {
    Matrix coords;                  // n x 2
    double final_kl = 0.0;
    std::vector<double> kl_history; // KL(P||Q) before each update, against the unexaggerated P
    double perplexity = 0.0;        // perplexity actually used
    double learning_rate = 0.0;     // step size actually used
};

inline constexpr double kAffinityFloor = 1e-12;

/// Exact-gradient t-SNE to two dimensions with momentum, gains and early exaggeration.
inline Embedding2D tsne(const Matrix& points, const TsneConfig& config) {
    config.validate();
    const std::size_t n = points.rows();
    if (n < 4) throw ParameterError("t-SNE needs at least 4 points");
    Embedding2D result;
    result.perplexity = config.effective_perplexity(n);
    result.learning_rate = config.effective_learning_rate(n);

    JointMatrix joint = symmetrize(conditional_affinities(points, result.perplexity, config.threads));
    double p_log_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            auto& v = joint.p[i * n + j];
            v = std::max(v, kAffinityFloor);
            p_log_p += v * std::log(v);
        }
    }

    Rng rng(config.seed);
    std::vector<double> y(2 * n), velocity(2 * n, 0.0), gains(2 * n, 1.0), grad(2 * n);
    for (auto& v : y) v = 1e-4 * rng.normal();
    std::vector<double> row_z(n), row_cross(n);

    // One pass over all pairs: Z = sum of Student-t kernels, then the
    // gradient and the cross term sum p_ij log(num_ij) of KL.
    auto evaluate = [&](double exaggeration) {
        parallel_for(n, config.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                double z = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const double dx = y[2 * i] - y[2 * j];
                    const double dy = y[2 * i + 1] - y[2 * j + 1];
                    z += 1.0 / (1.0 + dx * dx + dy * dy);
                }
                row_z[i] = z;
            }
        });
        double z = 0.0;
        for (double v : row_z) z += v;
        parallel_for(n, config.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                double gx = 0.0, gy = 0.0, cross = 0.0;
                const double* prow = joint.p.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const double dx = y[2 * i] - y[2 * j];
                    const double dy = y[2 * i + 1] - y[2 * j + 1];
                    const double num = 1.0 / (1.0 + dx * dx + dy * dy);
                    const double q = num / z;
                    const double coef = (exaggeration * prow[j] - q) * num;
                    gx += coef * dx;
                    gy += coef * dy;
                    cross += prow[j] * std::log(std::max(q, kAffinityFloor));
                }
                grad[2 * i] = 4.0 * gx;
                grad[2 * i + 1] = 4.0 * gy;
                row_cross[i] = cross;
            }
        });
        double cross = 0.0;
        for (double v : row_cross) cross += v;
        return p_log_p - cross;
    };

    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        const double exaggeration = iter < config.exaggeration_iterations ? config.exaggeration : 1.0;
        const double kl = evaluate(exaggeration);
        if (!std::isfinite(kl)) throw NumericError("t-SNE diverged: non-finite KL at iteration " + std::to_string(iter));
        result.kl_history.push_back(kl);
        const double momentum = iter < config.momentum_switch ? config.initial_momentum : config.final_momentum;
        for (std::size_t k = 0; k < 2 * n; ++k) {
            const bool same_sign = (grad[k] > 0.0) == (velocity[k] > 0.0);
            gains[k] = std::max(0.01, same_sign ? gains[k] * 0.8 : gains[k] + 0.2);
            velocity[k] = momentum * velocity[k] - result.learning_rate * gains[k] * grad[k];
            y[k] += velocity[k];
        }
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += y[2 * i];
            my += y[2 * i + 1];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[2 * i] -= mx;
            y[2 * i + 1] -= my;
        }
    }
    result.final_kl = evaluate(1.0);
    if (!std::isfinite(result.final_kl)) throw NumericError("t-SNE diverged: non-finite final KL");
    result.coords = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        result.coords(i, 0) = y[2 * i];
        result.coords(i, 1) = y[2 * i + 1];
    }
    return result;
}

// ---------------------------------------------------------------------------
// Two-cluster k-means

struct ClusterAssignment {
    std::vector<int> cluster;                 // 0 or 1 per point
    std::array<Label, 2> label_of{Label::clickbait, Label::non_clickbait};
    Matrix centroids;                         // 2 x d
    double objective = 0.0;                   // within-cluster sum of squares
    std::vector<double> objective_history;    // per Lloyd iteration of the chosen run
};

inline double within_cluster_ss(const Matrix& points, std::span<const int> cluster) {
    const std::size_t d = points.cols();
    std::array<std::vector<double>, 2> sum{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    std::array<std::size_t, 2> count{};
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto c = static_cast<std::size_t>(cluster[i]);
        ++count[c];
        for (std::size_t k = 0; k < d; ++k) sum[c][k] += points(i, k);
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto c = static_cast<std::size_t>(cluster[i]);
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = points(i, k) - sum[c][k] / static_cast<double>(count[c]);
            ss += diff * diff;
        }
    }
    return ss;
}

namespace manifold_detail {

inline ClusterAssignment lloyd_two_means(const Matrix& points, Rng& rng, std::size_t max_iterations, double tolerance) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    ClusterAssignment out;
    out.centroids = Matrix(2, d);

    // k-means++ seeding.
    const std::size_t first = rng.below(n);
    std::vector<double> weight(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = squared_distance(points.row(i), points.row(first));
        total += weight[i];
    }
    std::size_t second = 0;
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < n; ++i) {
        if (weight[i] <= 0.0) continue;
        second = i;
        if (u < weight[i]) break;
        u -= weight[i];
    }
    std::copy_n(points.row(first).begin(), d, out.centroids.row(0).begin());
    std::copy_n(points.row(second).begin(), d, out.centroids.row(1).begin());

    out.cluster.assign(n, 0);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d0 = squared_distance(points.row(i), out.centroids.row(0));
            const double d1 = squared_distance(points.row(i), out.centroids.row(1));
            out.cluster[i] = d1 < d0 ? 1 : 0;
            ss += std::min(d0, d1);
        }
        // An empty cluster takes the point farthest from the other centroid.
        for (int c = 0; c < 2; ++c) {
            if (std::find(out.cluster.begin(), out.cluster.end(), c) != out.cluster.end()) continue;
            std::size_t far = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dist = squared_distance(points.row(i), out.centroids.row(static_cast<std::size_t>(1 - c)));
                if (dist > best) {
                    best = dist;
                    far = i;
                }
            }
            out.cluster[far] = c;
            ss = within_cluster_ss(points, out.cluster);
        }
        out.objective_history.push_back(ss);

        Matrix next(2, d);
        std::array<std::size_t, 2> count{};
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(out.cluster[i]);
            ++count[c];
            for (std::size_t k = 0; k < d; ++k) next(c, k) += points(i, k);
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t k = 0; k < d; ++k) next(c, k) /= static_cast<double>(count[c]);
            movement = std::max(movement, std::sqrt(squared_distance(next.row(c), out.centroids.row(c))));
        }
        out.centroids = std::move(next);
        if (movement < tolerance) break;
    }
    out.objective = within_cluster_ss(points, out.cluster);
    return out;
}

} // namespace manifold_detail

/// k-means with k = 2 and k-means++ seeding; the best of `restarts` seeded
/// runs by within-cluster sum of squares. Cluster 0 is the cluster holding
/// point 0. Label mapping is left at its default until map_clusters_to_labels.
inline ClusterAssignment two_means(const Matrix& points, std::uint64_t seed, std::size_t restarts = 10,
                                   std::size_t max_iterations = 100, double tolerance = 1e-6) {
    const std::size_t n = points.rows();
    if (n < 2) throw ParameterError("two_means needs at least 2 points");
    bool distinct = false;
    for (std::size_t i = 1; i < n && !distinct; ++i) distinct = squared_distance(points.row(0), points.row(i)) > 0.0;
    if (!distinct) throw NumericError("two_means: all points identical, only one cluster exists");

    ClusterAssignment best;
    bool have = false;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
        Rng rng(Rng::derive(seed, r));
        auto run = manifold_detail::lloyd_two_means(points, rng, max_iterations, tolerance);
        if (!have || run.objective < best.objective) {
            best = std::move(run);
            have = true;
        }
    }
    if (best.cluster[0] != 0) {
        for (auto& c : best.cluster) c = 1 - c;
        Matrix swapped(2, points.cols());
        std::copy_n(best.centroids.row(1).begin(), points.cols(), swapped.row(0).begin());
        std::copy_n(best.centroids.row(0).begin(), points.cols(), swapped.row(1).begin());
        best.centroids = std::move(swapped);
    }
    return best;
}

/// The cluster with the larger share of clickbait among `labels` becomes the
/// clickbait cluster; equal shares make cluster 0 clickbait.
inline void map_clusters_to_labels(ClusterAssignment& assignment, std::span<const Label> labels) {
    if (labels.size() != assignment.cluster.size()) throw ParameterError("one label per clustered point required");
    std::array<double, 2> positives{}, totals{};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto c = static_cast<std::size_t>(assignment.cluster[i]);
        totals[c] += 1.0;
        positives[c] += is_positive(labels[i]) ? 1.0 : 0.0;
    }
    const double share0 = totals[0] > 0 ? positives[0] / totals[0] : 0.0;
    const double share1 = totals[1] > 0 ? positives[1] / totals[1] : 0.0;
    if (share1 > share0) assignment.label_of = {Label::non_clickbait, Label::clickbait};
    else assignment.label_of = {Label::clickbait, Label::non_clickbait};
}

struct RecategorizationSummary {
    std::size_t changed = 0;
    std::size_t total = 0;
    double fraction() const { return total ? static_cast<double>(changed) / static_cast<double>(total) : 0.0; }
};

/// Appends the cluster-phase label (the mapped label of each record's
/// cluster) and reports how many records changed label.
inline RecategorizationSummary recategorize(PhaseHistory& history, const ClusterAssignment& assignment) {
    if (assignment.cluster.size() != history.size()) throw ParameterError("one cluster per record required");
    RecategorizationSummary summary;
    summary.total = history.size();
    for (std::size_t i = 0; i < history.size(); ++i) {
        const Label label = assignment.label_of[static_cast<std::size_t>(assignment.cluster[i])];
        if (history.record(i, Phase::cluster, label).changed) ++summary.changed;
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Headline clustering with a sample cap

struct HeadlineClustering {
    ClusterAssignment assignment;   // over all points
    Embedding2D embedding;          // over the sampled points
    std::vector<std::size_t> sample; // indices of points embedded by t-SNE
};

/// t-SNE + two_means on at most `cap` points (a seeded sample stratified by
/// label); every other point takes the cluster of its nearest sampled
/// neighbour in the original space. Labels also decide the cluster mapping.
inline HeadlineClustering cluster_headlines(const Matrix& vectors, std::span<const Label> labels,
                                            const TsneConfig& config, std::size_t cap, std::size_t restarts = 10) {
    const std::size_t n = vectors.rows();
    if (labels.size() != n) throw ParameterError("one label per headline vector required");
    if (cap < 4) throw ParameterError("t-SNE sample cap must be >= 4");
    HeadlineClustering out;
    if (n <= cap) {
        out.sample.resize(n);
        std::iota(out.sample.begin(), out.sample.end(), std::size_t{0});
    } else {
        Rng rng(Rng::derive(config.seed, 0x73616d70));
        for (Label label : {Label::clickbait, Label::non_clickbait}) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i)
                if (labels[i] == label) members.push_back(i);
            rng.shuffle(members);
            const auto take = std::min(members.size(), static_cast<std::size_t>(std::llround(
                                                           static_cast<double>(cap) * static_cast<double>(members.size()) /
                                                           static_cast<double>(n))));
            out.sample.insert(out.sample.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
        }
        std::sort(out.sample.begin(), out.sample.end());
    }
    const Matrix sampled = vectors.select_rows(out.sample);
    out.embedding = tsne(sampled, config);
    ClusterAssignment local = two_means(out.embedding.coords, config.seed, restarts);

    out.assignment.cluster.assign(n, 0);
    out.assignment.centroids = local.centroids;
    out.assignment.objective = local.objective;
    out.assignment.objective_history = local.objective_history;
    std::vector<char> in_sample(n, 0);
    for (std::size_t k = 0; k < out.sample.size(); ++k) {
        out.assignment.cluster[out.sample[k]] = local.cluster[k];
        in_sample[out.sample[k]] = 1;
    }
    parallel_for(n, config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (in_sample[i]) continue;
            double best = std::numeric_limits<double>::infinity();
            std::size_t nearest = 0;
            for (std::size_t k = 0; k < out.sample.size(); ++k) {
                const double dist = squared_distance(vectors.row(i), sampled.row(k));
                if (dist < best) {
                    best = dist;
                    nearest = k;
                }
            }
            out.assignment.cluster[i] = local.cluster[nearest];
        }
    });
    map_clusters_to_labels(out.assignment, labels);
    return out;
}

} // namespace clickbait

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "textkit.hpp"

namespace clickbait {

/// Lowercased word tokens of a headline, in order.
inline std::vector<std::string> headline_words(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize(text))
        if (t.kind == TokenKind::word) out.push_back(std::move(t.normalized));
    return out;
}

struct Vocabulary {
    std::vector<std::string> words;     // index -> word
    std::vector<std::uint64_t> counts;  // index -> corpus frequency
    std::unordered_map<std::string, std::size_t> index;
    std::size_t min_count = 1;

    std::size_t size() const noexcept { return words.size(); }

    std::optional<std::size_t> lookup(const std::string& word) const {
        const auto it = index.find(word);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }

    void rebuild_index() {
        index.clear();
        for (std::size_t i = 0; i < words.size(); ++i) index.emplace(words[i], i);
    }
};

/// Words with frequency >= min_count, indexed by descending frequency (ties
/// broken alphabetically).
inline Vocabulary build_vocab(const Corpus& corpus, std::size_t min_count) {
    if (corpus.size() == 0) throw DataError("cannot build a vocabulary from an empty corpus");
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const auto& r : corpus.records)
        for (auto& w : headline_words(r.text)) ++freq[std::move(w)];
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [w, c] : freq)
        if (c >= min_count) kept.emplace_back(w, c);
    if (kept.empty())
        throw DataError("vocabulary is empty with min_count=" + std::to_string(min_count) + "; lower min_count");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary vocab;
    vocab.min_count = min_count;
    for (auto& [w, c] : kept) {
        vocab.words.push_back(w);
        vocab.counts.push_back(c);
    }
    vocab.rebuild_index();
    return vocab;
}

struct SkipGramConfig {
    std::size_t dimension = 100;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double learning_rate = 0.025; // decays linearly towards 1e-4 of itself
    std::size_t min_count = 5;
    double subsample = 0.0;       // 0 disables frequent-word subsampling
    std::uint64_t seed = 42;

    void validate() const {
        if (dimension == 0) throw ParameterError("embedding dimension must be > 0");
        if (window < 1) throw ParameterError("skip-gram window must be >= 1");
        if (negatives < 1) throw ParameterError("negative sample count must be >= 1");
        if (epochs < 1) throw ParameterError("epochs must be >= 1");
        if (learning_rate < 0.0) throw ParameterError("learning rate must be >= 0");
        if (subsample < 0.0) throw ParameterError("subsample threshold must be >= 0");
    }
};

/// Draws word indices with probability proportional to count^0.75.
class NegativeSampler {
public:
    NegativeSampler() = default;
    explicit NegativeSampler(std::span<const std::uint64_t> counts, double power = 0.75) {
        cumulative_.reserve(counts.size());
        double total = 0.0;
        for (auto c : counts) {
            total += std::pow(static_cast<double>(c), power);
            cumulative_.push_back(total);
        }
        for (auto& v : cumulative_) v /= total;
        if (!cumulative_.empty()) cumulative_.back() = 1.0;
    }

    double probability(std::size_t i) const { return cumulative_[i] - (i == 0 ? 0.0 : cumulative_[i - 1]); }

    std::size_t draw(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                                 static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
    }

private:
    std::vector<double> cumulative_;
};

namespace sgns {

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

/// Negative-sampling loss of one (center, context) pair:
/// -log s(u_pos . v) - sum_k log s(-u_neg_k . v). outputs[0] is the positive.
inline double pair_loss(std::span<const double> center, std::span<const std::span<const double>> outputs) {
    double loss = -log_sigmoid(dot(outputs[0], center));
    for (std::size_t k = 1; k < outputs.size(); ++k) loss -= log_sigmoid(-dot(outputs[k], center));
    return loss;
}

struct PairGradient {
    double loss = 0.0;
    std::vector<double> center;               // dL/dv
    std::vector<std::vector<double>> outputs; // dL/du_k
};

inline PairGradient pair_gradient(std::span<const double> center, std::span<const std::span<const double>> outputs) {
    PairGradient g;
    g.loss = pair_loss(center, outputs);
    g.center.assign(center.size(), 0.0);
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        const double label = k == 0 ? 1.0 : 0.0;
        const double coef = sigmoid(dot(outputs[k], center)) - label;
        for (std::size_t j = 0; j < center.size(); ++j) g.center[j] += coef * outputs[k][j];
        std::vector<double> du(center.size());
        for (std::size_t j = 0; j < center.size(); ++j) du[j] = coef * center[j];
        g.outputs.push_back(std::move(du));
    }
    return g;
}

/// One SGD step on pair_loss, in place: each output moves along its own
/// gradient at the current center, and the center moves by the accumulated
/// gradient afterwards. Returns the loss before the step.
inline double step(std::span<double> center, std::span<double* const> outputs, double lr, std::span<double> scratch) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    double loss = 0.0;
    const std::size_t d = center.size();
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        double* u = outputs[k];
        double score = 0.0;
        for (std::size_t j = 0; j < d; ++j) score += u[j] * center[j];
        const double label = k == 0 ? 1.0 : 0.0;
        loss -= k == 0 ? log_sigmoid(score) : log_sigmoid(-score);
        const double coef = sigmoid(score) - label;
        for (std::size_t j = 0; j < d; ++j) scratch[j] += coef * u[j];
        for (std::size_t j = 0; j < d; ++j) u[j] -= lr * coef * center[j];
    }
    for (std::size_t j = 0; j < d; ++j) center[j] -= lr * scratch[j];
    return loss;
}

} // namespace sgns

struct EmbeddingModel {
    Vocabulary vocab;
    SkipGramConfig config;
    std::vector<double> input;   // V x d, row-major: the word vectors
    std::vector<double> output;  // V x d, context vectors
    std::vector<double> epoch_loss;

    std::size_t dimension() const noexcept { return config.dimension; }

    std::span<const double> vector(std::size_t word) const {
        return {input.data() + word * config.dimension, config.dimension};
    }
    std::span<double> vector(std::size_t word) { return {input.data() + word * config.dimension, config.dimension}; }
    std::span<double> context(std::size_t word) { return {output.data() + word * config.dimension, config.dimension}; }

    bool operator==(const EmbeddingModel& other) const {
        return vocab.words == other.vocab.words && vocab.counts == other.vocab.counts && input == other.input &&
               output == other.output;
    }
};

/// Word vectors start uniform in [-0.5/d, 0.5/d); context vectors start at zero.
inline EmbeddingModel initial_model(const Vocabulary& vocab, const SkipGramConfig& config) {
    config.validate();
    if (vocab.size() == 0) throw DataError("cannot train on an empty vocabulary");
    EmbeddingModel model;
    model.vocab = vocab;
    model.config = config;
    const std::size_t d = config.dimension;
    model.input.resize(vocab.size() * d);
    model.output.assign(vocab.size() * d, 0.0);
    Rng rng(Rng::derive(config.seed, 0x656d62));
    for (auto& v : model.input) v = (rng.uniform() - 0.5) / static_cast<double>(d);
    return model;
}

/// Skip-gram with negative sampling, single-threaded and deterministic for a
/// fixed seed. Headlines are visited in a per-epoch shuffled order; window
/// size is sampled uniformly in [1, window] per center word.
inline EmbeddingModel train_skipgram(const Corpus& corpus, const Vocabulary& vocab, const SkipGramConfig& config) {
    EmbeddingModel model = initial_model(vocab, config);
    const std::size_t d = config.dimension;

    std::vector<std::vector<std::size_t>> sentences;
    std::uint64_t total_words = 0;
    for (const auto& r : corpus.records) {
        std::vector<std::size_t> ids;
        for (const auto& w : headline_words(r.text))
            if (auto i = vocab.lookup(w)) ids.push_back(*i);
        total_words += ids.size();
        if (ids.size() >= 2) sentences.push_back(std::move(ids));
    }

    double total_count = 0.0;
    for (auto c : vocab.counts) total_count += static_cast<double>(c);
    std::vector<double> keep_prob(vocab.size(), 1.0);
    if (config.subsample > 0.0) {
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            const double f = static_cast<double>(vocab.counts[i]) / total_count;
            keep_prob[i] = std::min(1.0, (std::sqrt(f / config.subsample) + 1.0) * config.subsample / f);
        }
    }

    const NegativeSampler sampler(vocab.counts);
    Rng rng(Rng::derive(config.seed, 0x74726e));
    std::vector<std::size_t> order(sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> scratch(d);
    std::vector<double*> outputs(config.negatives + 1);
    const double planned = static_cast<double>(config.epochs) * static_cast<double>(total_words) + 1.0;
    double processed = 0.0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t s : order) {
            std::vector<std::size_t> ids;
            for (std::size_t w : sentences[s])
                if (keep_prob[w] >= 1.0 || rng.uniform() < keep_prob[w]) ids.push_back(w);
            for (std::size_t pos = 0; pos < ids.size(); ++pos) {
                const double lr = config.learning_rate * std::max(1e-4, 1.0 - processed / planned);
                processed += 1.0;
                const std::size_t reach = 1 + rng.below(config.window);
                const std::size_t lo = pos >= reach ? pos - reach : 0;
                const std::size_t hi = std::min(ids.size() - 1, pos + reach);
                for (std::size_t c = lo; c <= hi; ++c) {
                    if (c == pos) continue;
                    outputs[0] = model.context(ids[c]).data();
                    std::size_t n_out = 1;
                    for (std::size_t k = 0; k < config.negatives; ++k) {
                        const std::size_t neg = sampler.draw(rng);
                        if (neg == ids[c]) continue;
                        outputs[n_out++] = model.context(neg).data();
                    }
                    loss_sum += sgns::step(model.vector(ids[pos]), std::span<double* const>(outputs.data(), n_out), lr,
                                           scratch);
                    ++pairs;
                }
            }
        }
        const double mean = pairs ? loss_sum / static_cast<double>(pairs) : 0.0;
        if (!std::isfinite(mean)) throw NumericError("skip-gram training diverged in epoch " + std::to_string(epoch + 1));
        model.epoch_loss.push_back(mean);
    }
    return model;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = std::sqrt(sgns::dot(a, a));
    const double nb = std::sqrt(sgns::dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return sgns::dot(a, b) / (na * nb);
}

struct HeadlineVector {
    std::vector<double> values;
    double coverage = 0.0; // fraction of headline words in the vocabulary

    bool degenerate() const noexcept { return coverage == 0.0; }
};

/// Mean of the in-vocabulary word vectors; all-OOV headlines give the zero vector.
inline HeadlineVector headline_vector(const EmbeddingModel& model, std::string_view text) {
    HeadlineVector hv;
    hv.values.assign(model.dimension(), 0.0);
    const auto words = headline_words(text);
    std::size_t found = 0;
    for (const auto& w : words) {
        const auto i = model.vocab.lookup(w);
        if (!i) continue;
        const auto v = model.vector(*i);
        for (std::size_t j = 0; j < v.size(); ++j) hv.values[j] += v[j];
        ++found;
    }
    if (found == 0) return hv;
    for (auto& x : hv.values) x /= static_cast<double>(found);
    hv.coverage = static_cast<double>(found) / static_cast<double>(words.size());
    return hv;
}

inline HeadlineVector headline_vector(const EmbeddingModel& model, const HeadlineRecord& record) {
    return headline_vector(model, record.text);
}

// ---------------------------------------------------------------------------
// Binary persistence (little-endian); layout documented in docs/formats.md.

namespace embedding_io {

inline constexpr char kMagic[8] = {'C', 'B', 'S', 'G', 'N', 'S', 'E', 'M'};
inline constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little, "persistence assumes a little-endian host");
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.write(bytes, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    char bytes[sizeof(T)];
    if (!in.read(bytes, sizeof(T))) throw DataError("embedding file truncated");
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace embedding_io

inline void save_embedding(const EmbeddingModel& model, const std::filesystem::path& path) {
    using namespace embedding_io;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embedding file '" + path.string() + "'");
    const auto& c = model.config;
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, model.vocab.size());
    put<std::uint64_t>(out, c.dimension);
    put<std::uint64_t>(out, c.window);
    put<std::uint64_t>(out, c.negatives);
    put<std::uint64_t>(out, c.epochs);
    put<double>(out, c.learning_rate);
    put<std::uint64_t>(out, c.min_count);
    put<double>(out, c.subsample);
    put<std::uint64_t>(out, c.seed);
    put<std::uint64_t>(out, model.epoch_loss.size());
    for (double l : model.epoch_loss) put<double>(out, l);
    for (std::size_t i = 0; i < model.vocab.size(); ++i) {
        const auto& w = model.vocab.words[i];
        put<std::uint32_t>(out, static_cast<std::uint32_t>(w.size()));
        out.write(w.data(), static_cast<std::streamsize>(w.size()));
        put<std::uint64_t>(out, model.vocab.counts[i]);
        for (std::size_t j = 0; j < c.dimension; ++j) put<double>(out, model.input[i * c.dimension + j]);
        for (std::size_t j = 0; j < c.dimension; ++j) put<double>(out, model.output[i * c.dimension + j]);
    }
    if (!out) throw DataError("failed writing embedding file '" + path.string() + "'");
}

inline EmbeddingModel load_embedding(const std::filesystem::path& path) {
    using namespace embedding_io;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read embedding file '" + path.string() + "'");
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw DataError("'" + path.string() + "' is not an embedding file");
    if (const auto v = get<std::uint32_t>(in); v != kVersion)
        throw DataError("unsupported embedding file version " + std::to_string(v));
    EmbeddingModel model;
    auto& c = model.config;
    const auto vocab_size = get<std::uint64_t>(in);
    c.dimension = get<std::uint64_t>(in);
    c.window = get<std::uint64_t>(in);
    c.negatives = get<std::uint64_t>(in);
    c.epochs = get<std::uint64_t>(in);
    c.learning_rate = get<double>(in);
    c.min_count = get<std::uint64_t>(in);
    c.subsample = get<double>(in);
    c.seed = get<std::uint64_t>(in);
    const auto n_loss = get<std::uint64_t>(in);
    for (std::uint64_t k = 0; k < n_loss; ++k) model.epoch_loss.push_back(get<double>(in));
    model.vocab.min_count = c.min_count;
    model.input.resize(vocab_size * c.dimension);
    model.output.resize(vocab_size * c.dimension);
    for (std::uint64_t i = 0; i < vocab_size; ++i) {
        const auto len = get<std::uint32_t>(in);
        std::string w(len, '\0');
        if (!in.read(w.data(), len)) throw DataError("embedding file truncated");
        model.vocab.words.push_back(std::move(w));
        model.vocab.counts.push_back(get<std::uint64_t>(in));
        for (std::size_t j = 0; j < c.dimension; ++j) model.input[i * c.dimension + j] = get<double>(in);
        for (std::size_t j = 0; j < c.dimension; ++j) model.output[i * c.dimension + j] = get<double>(in);
    }
    model.vocab.rebuild_index();
    return model;
}

} // namespace clickbait

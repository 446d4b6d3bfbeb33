#include <gtest/gtest.h>

#include <random>

#include <clickbait/embedding.hpp>

#include "oracles.hpp"
#include "support.hpp"

using namespace clickbait;

namespace {

std::vector<double> analytic_gradient(const oracle::SgnsInstance& inst) {
    std::vector<std::span<const double>> outs;
    for (const auto& o : inst.outputs) outs.emplace_back(o);
    const auto g = sgns::pair_gradient(inst.center, outs);
    std::vector<double> flat = g.center;
    for (const auto& o : g.outputs) flat.insert(flat.end(), o.begin(), o.end());
    return flat;
}

Corpus two_topic_corpus() {
    Corpus c;
    std::mt19937_64 gen(17);
    const std::vector<std::string> a = {"apple", "banana", "cherry", "grape", "mango"};
    const std::vector<std::string> b = {"piston", "engine", "gearbox", "clutch", "axle"};
    for (int i = 0; i < 300; ++i) {
        const auto& topic = i % 2 ? a : b;
        std::string text;
        for (int k = 0; k < 6; ++k) text += (k ? " " : "") + topic[gen() % topic.size()];
        c.records.push_back({i, text, std::nullopt, std::nullopt, Label::clickbait});
    }
    c.phases = PhaseHistory(c.size());
    return c;
}

} // namespace

TEST(SkipGram, GradientMatchesCentralDifferences) {
    std::mt19937_64 gen(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = oracle::random_sgns_instance(gen);
        const auto analytic = analytic_gradient(inst);
        const auto numeric = oracle::sgns_numeric_gradient(inst);
        worst = std::max(worst, oracle::relative_error(analytic, numeric));
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(SkipGram, LossMatchesDirectFormula) {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = oracle::random_sgns_instance(gen);
        std::vector<std::span<const double>> outs;
        for (const auto& o : inst.outputs) outs.emplace_back(o);
        EXPECT_NEAR(sgns::pair_loss(inst.center, outs), oracle::sgns_loss(inst.center, inst.outputs), 1e-12);
    }
}

TEST(SkipGram, StepIsASimultaneousGradientStep) {
    std::mt19937_64 gen(8);
    const double lr = 0.05;
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = oracle::random_sgns_instance(gen);
        const auto grad = analytic_gradient(inst);
        auto center = inst.center;
        auto outputs = inst.outputs;
        std::vector<double*> ptrs;
        for (auto& o : outputs) ptrs.push_back(o.data());
        std::vector<double> scratch(center.size());
        sgns::step(center, ptrs, lr, scratch);
        std::size_t k = 0;
        for (std::size_t j = 0; j < center.size(); ++j) EXPECT_NEAR(center[j], inst.center[j] - lr * grad[k++], 1e-12);
        for (std::size_t o = 0; o < outputs.size(); ++o)
            for (std::size_t j = 0; j < center.size(); ++j)
                EXPECT_NEAR(outputs[o][j], inst.outputs[o][j] - lr * grad[k++], 1e-12);
    }
}

TEST(SkipGram, NegativeSamplerFollowsUnigramPower) {
    const std::vector<std::uint64_t> counts = {1, 2, 3, 4};
    const NegativeSampler sampler(counts);
    double total = 0.0;
    for (auto c : counts) total += std::pow(static_cast<double>(c), 0.75);
    std::vector<double> seen(counts.size(), 0.0);
    Rng rng(99);
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) seen[sampler.draw(rng)] += 1.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double expected = std::pow(static_cast<double>(counts[i]), 0.75) / total;
        EXPECT_NEAR(sampler.probability(i), expected, 1e-12);
        EXPECT_NEAR(seen[i] / draws, expected, 0.01 * expected);
    }
}

TEST(Vocabulary, OrderedByFrequencyThenAlphabet) {
    Corpus c;
    c.records.push_back({0, "b a c a", std::nullopt, std::nullopt, Label::clickbait});
    c.records.push_back({1, "c b d", std::nullopt, std::nullopt, Label::clickbait});
    const auto v = build_vocab(c, 2);
    EXPECT_EQ(v.words, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_FALSE(v.lookup("d").has_value());
    EXPECT_THROW(build_vocab(c, 10), DataError);
}

TEST(SkipGram, ZeroLearningRateKeepsInitialVectors) {
    const auto c = two_topic_corpus();
    const auto vocab = build_vocab(c, 1);
    SkipGramConfig cfg;
    cfg.dimension = 8;
    cfg.min_count = 1;
    cfg.epochs = 2;
    cfg.learning_rate = 0.0;
    const auto trained = train_skipgram(c, vocab, cfg);
    const auto init = initial_model(vocab, cfg);
    EXPECT_EQ(trained.input, init.input);
    EXPECT_EQ(trained.output, init.output);
}

TEST(SkipGram, CooccurringWordsEndUpCloser) {
    const auto c = two_topic_corpus();
    const auto vocab = build_vocab(c, 1);
    SkipGramConfig cfg;
    cfg.dimension = 16;
    cfg.min_count = 1;
    cfg.epochs = 10;
    cfg.window = 3;
    const auto m = train_skipgram(c, vocab, cfg);
    auto vec = [&](const std::string& w) { return m.vector(*vocab.lookup(w)); };
    EXPECT_GT(cosine(vec("apple"), vec("banana")), cosine(vec("apple"), vec("piston")));
    EXPECT_GT(cosine(vec("engine"), vec("clutch")), cosine(vec("engine"), vec("mango")));
    ASSERT_EQ(m.epoch_loss.size(), 10u);
    EXPECT_LT(m.epoch_loss.back(), m.epoch_loss.front());
}

TEST(SkipGram, DeterministicForSeed) {
    const auto c = two_topic_corpus();
    const auto vocab = build_vocab(c, 1);
    SkipGramConfig cfg;
    cfg.dimension = 8;
    cfg.epochs = 2;
    EXPECT_EQ(train_skipgram(c, vocab, cfg), train_skipgram(c, vocab, cfg));
    auto other = cfg;
    other.seed = 7;
    EXPECT_FALSE(train_skipgram(c, vocab, cfg) == train_skipgram(c, vocab, other));
}

TEST(HeadlineVector, MeanOfKnownWords) {
    const auto c = two_topic_corpus();
    const auto vocab = build_vocab(c, 1);
    SkipGramConfig cfg;
    cfg.dimension = 4;
    cfg.epochs = 1;
    const auto m = train_skipgram(c, vocab, cfg);
    const auto hv = headline_vector(m, "apple unknownword banana");
    const auto a = m.vector(*vocab.lookup("apple"));
    const auto b = m.vector(*vocab.lookup("banana"));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(hv.values[j], (a[j] + b[j]) / 2.0, 1e-15);
    EXPECT_NEAR(hv.coverage, 2.0 / 3.0, 1e-15);
    const auto oov = headline_vector(m, "nothing known here");
    EXPECT_TRUE(oov.degenerate());
    for (double v : oov.values) EXPECT_EQ(v, 0.0);
}

TEST(Embedding, PersistenceRoundTrip) {
    const auto c = two_topic_corpus();
    const auto vocab = build_vocab(c, 1);
    SkipGramConfig cfg;
    cfg.dimension = 5;
    cfg.epochs = 2;
    const auto m = train_skipgram(c, vocab, cfg);
    testing_support::TempDir dir("emb");
    save_embedding(m, dir / "e.bin");
    const auto back = load_embedding(dir / "e.bin");
    EXPECT_EQ(back, m);
    EXPECT_EQ(back.epoch_loss, m.epoch_loss);
    EXPECT_EQ(back.config.seed, m.config.seed);

    const auto bytes = testing_support::read_file(dir / "e.bin");
    testing_support::write_file(dir / "cut.bin", bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW(load_embedding(dir / "cut.bin"), DataError);
    testing_support::write_file(dir / "junk.bin", "not an embedding");
    EXPECT_THROW(load_embedding(dir / "junk.bin"), DataError);
}

TEST(SkipGram, ConfigValidation) {
    SkipGramConfig cfg;
    cfg.dimension = 0;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = {};
    cfg.learning_rate = -1;
    EXPECT_THROW(cfg.validate(), ParameterError);
}

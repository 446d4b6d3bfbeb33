#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include <clickbait/corpus.hpp>

#include "support.hpp"

using namespace clickbait;
using testing_support::TempDir;
using testing_support::write_file;

TEST(Corpus, TwoFileLoadAssignsLabelsAndSequentialIds) {
    TempDir dir("corpus");
    write_file(dir / "a.txt", "one headline\nsecond one\nthird here\n");
    write_file(dir / "b.txt", "plain news\nmore news\n");
    const auto c = load_corpus(dir / "a.txt", dir / "b.txt");
    ASSERT_EQ(c.size(), 5u);
    EXPECT_EQ(c.count(Label::clickbait), 3u);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c.records[i].id, static_cast<std::int64_t>(i));
    EXPECT_EQ(c.records[3].gold_label, Label::non_clickbait);
    EXPECT_FALSE(c.records[0].body.has_value());
}

TEST(Corpus, BlankAndNonAlphabeticLinesAreSkippedAndCounted) {
    TempDir dir("corpus");
    write_file(dir / "a.txt", "first\n\nthird\r\n   \n12345 !!\n");
    write_file(dir / "b.txt", "only\n");
    const auto c = load_corpus(dir / "a.txt", dir / "b.txt");
    EXPECT_EQ(c.count(Label::clickbait), 2u);
    EXPECT_EQ(c.records[1].text, "third");
    EXPECT_EQ(c.skipped_lines, 3u);
}

TEST(Corpus, MissingFileNamesThePath) {
    TempDir dir("corpus");
    write_file(dir / "b.txt", "x y\n");
    try {
        load_corpus(dir / "nope.txt", dir / "b.txt");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("nope.txt"), std::string::npos);
    }
}

TEST(Corpus, EmptySourceIsAnError) {
    TempDir dir("corpus");
    write_file(dir / "a.txt", "\n\n");
    write_file(dir / "b.txt", "news\n");
    EXPECT_THROW(load_corpus(dir / "a.txt", dir / "b.txt"), DataError);
}

TEST(Corpus, JsonlFixtureKeepsOptionalFieldsAbsent) {
    const auto c = load_corpus_jsonl(testing_support::fixture("corpus.jsonl"));
    ASSERT_EQ(c.size(), 6u);
    EXPECT_EQ(c.skipped_lines, 1u);
    EXPECT_FALSE(c.records[0].body.has_value());
    EXPECT_FALSE(c.records[0].url.has_value());
    EXPECT_EQ(c.records[2].url.value(), "http://xyz.by");
    EXPECT_EQ(c.records[5].id, 7);
    EXPECT_EQ(c.count(Label::clickbait), 3u);
}

TEST(Corpus, JsonlErrorsCarryLineNumbers) {
    TempDir dir("corpus");
    write_file(dir / "bad.jsonl", "{not json\n");
    try {
        load_corpus_jsonl(dir / "bad.jsonl");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
    }
    write_file(dir / "label.jsonl", "{\"text\":\"X\",\"label\":\"clickbait\"}\n{\"text\":\"Y\",\"label\":\"spam\"}\n");
    try {
        load_corpus_jsonl(dir / "label.jsonl");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    write_file(dir / "dup.jsonl", "{\"id\":1,\"text\":\"X\",\"label\":\"clickbait\"}\n{\"id\":1,\"text\":\"Y\",\"label\":\"clickbait\"}\n");
    EXPECT_THROW(load_corpus_jsonl(dir / "dup.jsonl"), DataError);
}

TEST(Corpus, JsonlRoundTrip) {
    TempDir dir("corpus");
    const auto c = load_corpus_jsonl(testing_support::fixture("corpus.jsonl"));
    write_corpus_jsonl(c, dir / "out.jsonl");
    const auto back = load_corpus_jsonl(dir / "out.jsonl");
    EXPECT_EQ(fingerprint(c), fingerprint(back));
}

TEST(Corpus, SampleLineCountMatchesIndependentCount) {
    std::size_t lines = 0;
    for (const char* name : {"clickbait.txt", "non_clickbait.txt"}) {
        std::ifstream in(testing_support::sample(name));
        std::string line;
        while (std::getline(in, line))
            if (std::any_of(line.begin(), line.end(), [](unsigned char ch) { return std::isalpha(ch); })) ++lines;
    }
    const auto c = load_corpus(testing_support::sample("clickbait.txt"), testing_support::sample("non_clickbait.txt"));
    EXPECT_EQ(c.size(), lines);
}

namespace {
Corpus balanced(std::size_t per_class) {
    Corpus c;
    for (std::size_t i = 0; i < 2 * per_class; ++i)
        c.records.push_back({static_cast<std::int64_t>(i), "headline " + std::to_string(i), std::nullopt, std::nullopt,
                             i < per_class ? Label::clickbait : Label::non_clickbait});
    c.phases = PhaseHistory(c.size());
    return c;
}
} // namespace

TEST(Split, StratifiedArithmetic) {
    const auto c = balanced(50);
    const auto [train, test] = split(c, 0.2, 7);
    EXPECT_EQ(train.size(), 80u);
    EXPECT_EQ(test.size(), 20u);
    EXPECT_EQ(test.count(Label::clickbait), 10u);
}

TEST(Split, IsADeterministicPartition) {
    const auto c = balanced(37);
    const auto a = split_indices(c, 0.3, 11);
    const auto b = split_indices(c, 0.3, 11);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    std::set<std::size_t> all(a.train.begin(), a.train.end());
    for (auto i : a.test) EXPECT_TRUE(all.insert(i).second);
    EXPECT_EQ(all.size(), c.size());
}

TEST(Split, SeedsPermuteButKeepClassCounts) {
    const auto c = balanced(50);
    const auto a = split_indices(c, 0.2, 1);
    const auto b = split_indices(c, 0.2, 2);
    EXPECT_NE(a.test, b.test);
    auto positives = [&](const std::vector<std::size_t>& idx) {
        return std::count_if(idx.begin(), idx.end(), [&](auto i) { return is_positive(c.records[i].gold_label); });
    };
    EXPECT_EQ(positives(a.test), positives(b.test));
}

TEST(Split, StratificationWithinOneAcrossFractions) {
    Corpus c = balanced(0);
    for (std::size_t i = 0; i < 53; ++i)
        c.records.push_back({static_cast<std::int64_t>(i), "x", std::nullopt, std::nullopt,
                             i < 31 ? Label::clickbait : Label::non_clickbait});
    c.phases = PhaseHistory(c.size());
    for (double f : {0.1, 0.25, 0.5, 0.77}) {
        const auto s = split_indices(c, f, 3);
        const auto pos = std::count_if(s.test.begin(), s.test.end(), [&](auto i) { return is_positive(c.records[i].gold_label); });
        EXPECT_LE(std::abs(static_cast<double>(pos) - std::round(31 * f)), 1.0);
        EXPECT_LE(std::abs(static_cast<double>(s.test.size() - pos) - std::round(22 * f)), 1.0);
    }
}

TEST(Split, RejectsBadFraction) {
    const auto c = balanced(5);
    EXPECT_THROW(split(c, 0.0, 1), ParameterError);
    EXPECT_THROW(split(c, 1.0, 1), ParameterError);
}

TEST(PhaseHistory, AppendOnlyAndOrdered) {
    PhaseHistory h(2);
    EXPECT_THROW(h.record(0, Phase::formality, Label::clickbait), ParameterError);
    EXPECT_FALSE(h.record(0, Phase::rules, Label::clickbait).changed);
    EXPECT_TRUE(h.record(0, Phase::formality, Label::non_clickbait).changed);
    EXPECT_FALSE(h.record(0, Phase::cluster, Label::non_clickbait).changed);
    EXPECT_THROW(h.record(0, Phase::cluster, Label::clickbait), ParameterError);
    EXPECT_EQ(h.completed_phases(), 0u);
    EXPECT_EQ(h.label_at(0, Phase::rules), Label::clickbait);
    EXPECT_FALSE(h.latest(1).has_value());
}

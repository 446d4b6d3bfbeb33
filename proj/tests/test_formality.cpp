#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <clickbait/formality.hpp>

#include "support.hpp"

using namespace clickbait;

namespace {

PosProfile profile_from(const std::vector<double>& percent) {
    PosProfile p;
    for (std::size_t c = 0; c < kPosClassCount; ++c) p.percent[c] = percent[c];
    p.word_count = 1;
    return p;
}

std::vector<double> numbers(const std::string& s) {
    std::istringstream in(s);
    std::vector<double> out;
    for (double v; in >> v;) out.push_back(v);
    return out;
}

} // namespace

TEST(Formality, OracleFixture) {
    const auto rows = testing_support::read_rows(testing_support::fixture("formality_cases.tsv"), false);
    ASSERT_EQ(rows.size(), 25u);
    for (const auto& r : rows) {
        const auto in = numbers(r.at(1));
        const double expected = std::stod(r.at(2));
        if (r[0] == "f_score") {
            EXPECT_NEAR(f_score(profile_from(in)), expected, 1e-9) << r[1];
        } else if (r[0] == "f_score_counts") {
            double total = 0.0;
            for (double v : in) total += v;
            std::vector<double> pct;
            for (double v : in) pct.push_back(100.0 * v / total);
            EXPECT_NEAR(f_score(profile_from(pct)), expected, 1e-9) << r[1];
        } else {
            ASSERT_EQ(r[0], "fres");
            const ReadabilityCounts c{static_cast<std::size_t>(in[0]), static_cast<std::size_t>(in[1]),
                                      static_cast<std::size_t>(in[2])};
            EXPECT_NEAR(raw_fres(c), expected, 1e-9) << r[1];
            EXPECT_NEAR(fres(c), std::clamp(expected, 0.0, 100.0), 1e-9) << r[1];
        }
    }
}

TEST(Formality, NamedExamples) {
    EXPECT_DOUBLE_EQ(f_score(pos_profile(tokenize("lion cat"))), 100.0);
    EXPECT_DOUBLE_EQ(f_score(pos_profile(tokenize("went"))), 0.0);
    const auto s = formality_scores("The cat sat on the mat.");
    EXPECT_NEAR(s.raw_fres, 116.145, 1e-9);
    EXPECT_DOUBLE_EQ(s.fres, 100.0);
}

TEST(Formality, UndefinedOnEmptyText) {
    EXPECT_THROW(f_score(PosProfile{}), NumericError);
    EXPECT_THROW(raw_fres(ReadabilityCounts{}), NumericError);
    EXPECT_THROW(formality_scores("!!!"), NumericError);
}

TEST(Formality, FScoreBoundsOnRandomProfiles) {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> counts(kPosClassCount);
        double total = 0.0;
        for (auto& c : counts) total += (c = static_cast<double>(gen() % 10));
        if (total == 0.0) continue;
        for (auto& c : counts) c = 100.0 * c / total;
        const double f = f_score(profile_from(counts));
        EXPECT_GE(f, -1e-12);
        EXPECT_LE(f, 100.0 + 1e-12);
    }
}

TEST(Formality, FresDecreasesWithSyllables) {
    for (std::size_t words : {1u, 5u, 12u})
        for (std::size_t sentences : {1u, 2u})
            for (std::size_t syl = words; syl < 4 * words; ++syl)
                EXPECT_GT(raw_fres({words, sentences, syl}), raw_fres({words, sentences, syl + 1}));
}

TEST(Formality, GateCases) {
    const FormalityConfig cfg;
    EXPECT_EQ(formality_gate({80, 75, 75}, cfg, Label::clickbait), Label::non_clickbait);
    EXPECT_EQ(formality_gate({30, 20, 20}, cfg, Label::clickbait), Label::clickbait);
    EXPECT_EQ(formality_gate({80, 20, 20}, cfg, Label::non_clickbait), Label::non_clickbait);
    EXPECT_EQ(formality_gate({20, 80, 80}, cfg, Label::clickbait), Label::clickbait);
    const auto pl = formality_phase_label({80, 75, 75}, cfg, Label::clickbait);
    EXPECT_TRUE(pl.changed);
    EXPECT_EQ(pl.phase, Phase::formality);
    EXPECT_FALSE(formality_phase_label({30, 20, 20}, cfg, Label::clickbait).changed);
}

TEST(Formality, ThresholdEqualityCountsAsHigh) {
    const FormalityConfig cfg;
    EXPECT_EQ(formality_gate({60, 60, 60}, cfg, Label::clickbait), Label::non_clickbait);
    EXPECT_EQ(formality_gate({std::nextafter(60.0, 0.0), 60, 60}, cfg, Label::non_clickbait), Label::non_clickbait);
    EXPECT_EQ(formality_gate({std::nextafter(60.0, 0.0), std::nextafter(60.0, 0.0), 59}, cfg, Label::non_clickbait),
              Label::clickbait);
}

TEST(Formality, GateIsIdempotent) {
    const FormalityConfig cfg;
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        const FormalityScores s{u(gen), u(gen), 0.0};
        for (Label prev : {Label::clickbait, Label::non_clickbait}) {
            const Label once = formality_gate(s, cfg, prev);
            EXPECT_EQ(formality_gate(s, cfg, once), once);
        }
    }
}

TEST(Formality, ConfigValidation) {
    EXPECT_THROW((FormalityConfig{-1, 60}.validate()), ParameterError);
    EXPECT_THROW((FormalityConfig{60, 101}.validate()), ParameterError);
    EXPECT_NO_THROW((FormalityConfig{0, 100}.validate()));
}

#pragma once

#include <algorithm>

#include "corpus.hpp"
#include "error.hpp"
#include "textkit.hpp"

namespace clickbait {

struct FormalityConfig {
    double fscore_threshold = 60.0; // percent
    double fres_threshold = 60.0;

    void validate() const {
        if (fscore_threshold < 0.0 || fscore_threshold > 100.0 || fres_threshold < 0.0 || fres_threshold > 100.0)
            throw ParameterError("formality thresholds must lie in [0,100]");
    }
};

struct FormalityScores {
    double f_score = 0.0;
    double fres = 0.0;     // clamped to [0,100]
    double raw_fres = 0.0; // unclamped reading ease
};

/// Heylighen-Dewaele formality over POS percentages:
/// (noun + adjective + preposition + article - pronoun - verb - adverb - interjection + 100) / 2.
inline double f_score(const PosProfile& profile) {
    if (profile.degenerate()) throw NumericError("F-score undefined for a text with no word tokens");
    const double formal = profile[PosClass::noun] + profile[PosClass::adjective] +
                          profile[PosClass::preposition] + profile[PosClass::article];
    const double deictic = profile[PosClass::pronoun] + profile[PosClass::verb] + profile[PosClass::adverb] +
                           profile[PosClass::interjection];
    return (formal - deictic + 100.0) / 2.0;
}

/// Flesch reading ease, unclamped.
inline double raw_fres(const ReadabilityCounts& counts) {
    if (counts.total_words == 0) throw NumericError("reading ease undefined for a text with no words");
    if (counts.total_sentences == 0) throw NumericError("reading ease needs at least one sentence");
    const double words = static_cast<double>(counts.total_words);
    return 206.835 - 1.015 * (words / static_cast<double>(counts.total_sentences)) -
           84.6 * (static_cast<double>(counts.total_syllables) / words);
}

inline double fres(const ReadabilityCounts& counts) { return std::clamp(raw_fres(counts), 0.0, 100.0); }

inline FormalityScores formality_scores(const PosProfile& profile, const ReadabilityCounts& counts) {
    const double raw = raw_fres(counts);
    return {f_score(profile), std::clamp(raw, 0.0, 100.0), raw};
}

inline FormalityScores formality_scores(std::string_view text, const Lexicon& lex = Lexicon::defaults()) {
    const auto tokens = tokenize(text);
    return formality_scores(pos_profile(tokens, lex), readability_counts(text, tokens));
}

/// Both gates high -> non_clickbait, both low -> clickbait, disagreement keeps
/// the previous label. A score equal to its threshold counts as high.
inline Label formality_gate(const FormalityScores& scores, const FormalityConfig& config, Label previous) {
    const bool formal = scores.f_score >= config.fscore_threshold;
    const bool readable = scores.fres >= config.fres_threshold;
    if (formal && readable) return Label::non_clickbait;
    if (!formal && !readable) return Label::clickbait;
    return previous;
}

inline PhaseLabel formality_phase_label(const FormalityScores& scores, const FormalityConfig& config,
                                        Label previous) {
    const Label label = formality_gate(scores, config, previous);
    return {Phase::formality, label, label != previous};
}

} // namespace clickbait

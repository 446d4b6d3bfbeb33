#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <clickbait/default_data.hpp>

#include "error.hpp"

namespace clickbait {

enum class TokenKind { word, number, punctuation, url, symbol };

struct Token {
    std::string surface;
    std::string normalized;
    TokenKind kind = TokenKind::word;
    std::size_t offset = 0; // byte offset of surface in the source text
};

namespace text_detail {

inline bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
inline bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::size_t utf8_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) return 2;
    if ((lead & 0xF0) == 0xE0) return 3;
    if ((lead & 0xF8) == 0xF0) return 4;
    return 1;
}

enum class CharClass { space, letter, digit, apostrophe, punctuation, symbol };

// Multi-byte sequences: general punctuation block (quotes, dashes, ellipsis)
// and Latin-1 punctuation are punctuation; emoji and other symbol planes are
// symbols; everything else counts as a letter.
inline CharClass classify(std::string_view text, std::size_t i, std::size_t& len) {
    const auto c = static_cast<unsigned char>(text[i]);
    len = std::min(utf8_length(c), text.size() - i);
    if (c < 0x80) {
        if (is_space(c)) return CharClass::space;
        if (is_ascii_alpha(c)) return CharClass::letter;
        if (is_digit(c)) return CharClass::digit;
        if (c == '\'') return CharClass::apostrophe;
        constexpr std::string_view punct = ".,!?;:\"()[]{}-/";
        return punct.find(static_cast<char>(c)) != std::string_view::npos ? CharClass::punctuation
                                                                          : CharClass::symbol;
    }
    if (len >= 2 && c == 0xC2) {
        const auto c1 = static_cast<unsigned char>(text[i + 1]);
        if (c1 == 0xA0) return CharClass::space;
        return CharClass::punctuation;
    }
    if (len >= 3 && c == 0xE2) {
        const auto c1 = static_cast<unsigned char>(text[i + 1]);
        const auto c2 = static_cast<unsigned char>(text[i + 2]);
        if (c1 == 0x80 && (c2 == 0x98 || c2 == 0x99)) return CharClass::apostrophe; // ‘ ’
        if (c1 == 0x80) return CharClass::punctuation;
        return CharClass::symbol;
    }
    if (c >= 0xF0 || c == 0xEF) return CharClass::symbol;
    return CharClass::letter;
}

inline std::string lowercase(std::string_view text) {
    std::string out(text);
    for (auto& ch : out)
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    return out;
}

// Lowercase and fold the typographic apostrophe to ASCII.
inline std::string normalize(std::string_view surface) {
    std::string out;
    out.reserve(surface.size());
    for (std::size_t i = 0; i < surface.size(); ++i) {
        const auto triple = surface.substr(i, 3);
        if (triple == "\xE2\x80\x99" || triple == "\xE2\x80\x98") {
            out.push_back('\'');
            i += 2;
            continue;
        }
        const char ch = surface[i];
        out.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
    }
    return out;
}

inline bool starts_with_url(std::string_view text, std::size_t i) {
    const auto rest = lowercase(text.substr(i, 8));
    return rest.starts_with("http://") || rest.starts_with("https://") || rest.starts_with("www.");
}

} // namespace text_detail

/// Splits text into word, number, url, punctuation and symbol tokens. Runs of
/// one repeated punctuation mark ("!!!", "...") form a single token.
inline std::vector<Token> tokenize(std::string_view text) {
    using namespace text_detail;
    std::vector<Token> tokens;
    std::size_t i = 0;
    auto emit = [&](std::size_t begin, std::size_t end, TokenKind kind) {
        const auto surface = text.substr(begin, end - begin);
        tokens.push_back({std::string(surface), normalize(surface), kind, begin});
    };
    while (i < text.size()) {
        std::size_t len = 1;
        const auto cls = classify(text, i, len);
        if (cls == CharClass::space) {
            i += len;
            continue;
        }
        if (starts_with_url(text, i)) {
            std::size_t end = i;
            while (end < text.size() && !is_space(static_cast<unsigned char>(text[end]))) ++end;
            constexpr std::string_view trailing = ".,;:!?)]}\"'";
            while (end > i + 1 && trailing.find(text[end - 1]) != std::string_view::npos) --end;
            emit(i, end, TokenKind::url);
            i = end;
            continue;
        }
        if (cls == CharClass::letter || cls == CharClass::digit) {
            const std::size_t begin = i;
            bool has_letter = false;
            while (i < text.size()) {
                std::size_t l = 1;
                const auto c = classify(text, i, l);
                if (c == CharClass::letter || c == CharClass::digit) {
                    has_letter |= c == CharClass::letter;
                    i += l;
                    continue;
                }
                // Internal joiners: apostrophe before a letter, hyphen between
                // alphanumerics, decimal point or thousands comma between digits.
                if (i + l < text.size()) {
                    std::size_t nl = 1;
                    const auto next = classify(text, i + l, nl);
                    const bool next_alnum = next == CharClass::letter || next == CharClass::digit;
                    const auto prev = static_cast<unsigned char>(text[i - 1]);
                    if (c == CharClass::apostrophe && next == CharClass::letter) {
                        i += l;
                        continue;
                    }
                    if (text[i] == '-' && next_alnum) {
                        i += l;
                        continue;
                    }
                    if ((text[i] == '.' || text[i] == ',') && is_digit(prev) &&
                        is_digit(static_cast<unsigned char>(text[i + 1]))) {
                        i += l;
                        continue;
                    }
                }
                break;
            }
            emit(begin, i, has_letter ? TokenKind::word : TokenKind::number);
            continue;
        }
        // Punctuation, apostrophes used as quotes, symbols: group identical runs.
        const std::size_t begin = i;
        const auto unit = text.substr(i, len);
        i += len;
        while (i + len <= text.size() && text.substr(i, len) == unit) i += len;
        emit(begin, i, cls == CharClass::symbol ? TokenKind::symbol : TokenKind::punctuation);
    }
    return tokens;
}

/// Rebuilds the source text from tokens and the gaps between them.
inline std::string reconstruct(std::string_view text, std::span<const Token> tokens) {
    std::string out;
    std::size_t pos = 0;
    for (const auto& t : tokens) {
        out.append(text.substr(pos, t.offset - pos));
        out.append(t.surface);
        pos = t.offset + t.surface.size();
    }
    out.append(text.substr(pos));
    return out;
}

/// Splits on runs of . ! ? (or an ellipsis) followed by whitespace or end of
/// text; closing quotes and brackets stay with the sentence they end.
inline std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    auto push = [&](std::string_view piece) {
        const auto first = piece.find_first_not_of(" \t\r\n");
        if (first == std::string_view::npos) return;
        const auto last = piece.find_last_not_of(" \t\r\n");
        sentences.emplace_back(piece.substr(first, last - first + 1));
    };
    auto is_terminal = [&](std::size_t i) -> std::size_t {
        const char c = text[i];
        if (c == '.' || c == '!' || c == '?') return 1;
        if (text.substr(i, 3) == "\xE2\x80\xA6") return 3;
        return 0;
    };
    auto is_closer = [&](std::size_t i) -> std::size_t {
        const char c = text[i];
        if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
        if (text.substr(i, 3) == "\xE2\x80\x99" || text.substr(i, 3) == "\xE2\x80\x9D") return 3;
        return 0;
    };
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t step = is_terminal(i);
        if (step == 0) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < text.size() && (step = is_terminal(end)) != 0) end += step;
        while (end < text.size() && (step = is_closer(end)) != 0) end += step;
        if (end == text.size() || text_detail::is_space(static_cast<unsigned char>(text[end]))) {
            push(text.substr(start, end - start));
            start = end;
        }
        i = end;
    }
    push(text.substr(start));
    return sentences;
}

// ---------------------------------------------------------------------------
// Part-of-speech tagging

enum class PosClass { noun, adjective, preposition, article, pronoun, verb, adverb, interjection, other };

inline constexpr std::size_t kPosClassCount = 9;

inline constexpr std::array<std::string_view, kPosClassCount> kPosClassNames = {
    "noun", "adjective", "preposition", "article", "pronoun", "verb", "adverb", "interjection", "other"};

inline std::string_view to_string(PosClass c) { return kPosClassNames[static_cast<std::size_t>(c)]; }

inline PosClass parse_pos_class(std::string_view name) {
    for (std::size_t i = 0; i < kPosClassCount; ++i)
        if (kPosClassNames[i] == name) return static_cast<PosClass>(i);
    throw DataError("unknown POS class '" + std::string(name) + "'");
}

/// Word lists driving the tagger. One set per lexicon file: the closed
/// classes, the open-class lists, and conjunction/determiner (tagged other).
struct Lexicon {
    std::unordered_set<std::string> article, preposition, pronoun, interjection, conjunction, determiner;
    std::unordered_set<std::string> verb, adjective, adverb, noun;

    static constexpr std::array<std::string_view, 10> kFiles = {
        "article", "preposition", "pronoun", "interjection", "conjunction",
        "determiner", "verb", "adjective", "adverb", "noun"};

    std::unordered_set<std::string>& set(std::string_view name) {
        if (name == "article") return article;
        if (name == "preposition") return preposition;
        if (name == "pronoun") return pronoun;
        if (name == "interjection") return interjection;
        if (name == "conjunction") return conjunction;
        if (name == "determiner") return determiner;
        if (name == "verb") return verb;
        if (name == "adjective") return adjective;
        if (name == "adverb") return adverb;
        if (name == "noun") return noun;
        throw DataError("unknown lexicon '" + std::string(name) + "'");
    }

    static void fill(std::unordered_set<std::string>& target, std::istream& in) {
        target.clear();
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (line.empty() || line.front() == '#') continue;
            target.insert(text_detail::lowercase(line));
        }
    }

    /// The lexicons compiled in from data/lexicon.
    static const Lexicon& defaults() {
        static const Lexicon instance = [] {
            Lexicon lex;
            for (const auto& entry : default_data::lexicons) {
                std::istringstream in{std::string(entry.text)};
                fill(lex.set(entry.name), in);
            }
            return lex;
        }();
        return instance;
    }

    /// Starts from the defaults and replaces every list for which `dir`
    /// holds a `<name>.txt` file.
    static Lexicon load(const std::filesystem::path& dir) {
        if (!std::filesystem::is_directory(dir)) throw DataError("lexicon directory '" + dir.string() + "' not found");
        Lexicon lex = defaults();
        for (auto name : kFiles) {
            const auto path = dir / (std::string(name) + ".txt");
            if (!std::filesystem::exists(path)) continue;
            std::ifstream in(path);
            if (!in) throw DataError("cannot read lexicon '" + path.string() + "'");
            fill(lex.set(name), in);
        }
        return lex;
    }
};

namespace text_detail {

inline bool ends_with(std::string_view w, std::string_view suffix) { return w.ends_with(suffix); }

inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// Candidate lemmas for an inflected form, most specific first.
inline std::vector<std::string> stems(const std::string& w, std::string_view suffix) {
    std::vector<std::string> out;
    if (!w.ends_with(suffix) || w.size() < suffix.size() + 2) return out;
    const std::string base = w.substr(0, w.size() - suffix.size());
    if (suffix == "s") {
        out.push_back(base);
        return out;
    }
    if (suffix == "ies" || suffix == "ied" || suffix == "ier" || suffix == "iest") {
        out.push_back(base + "y");
        return out;
    }
    out.push_back(base);
    out.push_back(base + "e");
    if (base.size() >= 2 && base[base.size() - 1] == base[base.size() - 2] && !is_vowel(base.back()))
        out.push_back(base.substr(0, base.size() - 1));
    return out;
}

inline bool any_in(const std::vector<std::string>& words, const std::unordered_set<std::string>& set) {
    return std::any_of(words.begin(), words.end(), [&](const auto& w) { return set.contains(w); });
}

inline bool is_possessive(const std::string& w) {
    return w == "my" || w == "your" || w == "his" || w == "her" || w == "its" || w == "our" || w == "their";
}

inline bool is_subject_pronoun(const std::string& w) {
    return w == "i" || w == "you" || w == "he" || w == "she" || w == "it" || w == "we" || w == "they" ||
           w == "who" || w == "that" || w == "which";
}

inline bool is_modal(const std::string& w) {
    return w == "will" || w == "would" || w == "can" || w == "could" || w == "should" || w == "may" ||
           w == "might" || w == "must" || w == "shall" || w == "do" || w == "does" || w == "did" ||
           w == "don't" || w == "doesn't" || w == "didn't" || w == "won't" || w == "can't" || w == "to";
}

} // namespace text_detail

/// Tags each token; non-word tokens get PosClass::other and are ignored by
/// pos_profile. Closed classes come from the lexicon, open classes from the
/// lexicon, inflection stems, then suffix rules; unknown words default to noun.
inline std::vector<PosClass> pos_tag(std::span<const Token> tokens, const Lexicon& lex = Lexicon::defaults()) {
    using namespace text_detail;
    std::vector<PosClass> tags(tokens.size(), PosClass::other);

    // Previous/next word-token lookup, skipping punctuation.
    auto prev_word = [&](std::size_t i) -> std::ptrdiff_t {
        for (auto j = static_cast<std::ptrdiff_t>(i) - 1; j >= 0; --j)
            if (tokens[static_cast<std::size_t>(j)].kind == TokenKind::word ||
                tokens[static_cast<std::size_t>(j)].kind == TokenKind::number)
                return j;
        return -1;
    };
    auto next_word = [&](std::size_t i) -> std::ptrdiff_t {
        for (std::size_t j = i + 1; j < tokens.size(); ++j)
            if (tokens[j].kind == TokenKind::word || tokens[j].kind == TokenKind::number)
                return static_cast<std::ptrdiff_t>(j);
        return -1;
    };

    // Noun/verb ambiguity resolved from the left neighbour (and, headline
    // initially, the right neighbour: "Watch this" vs "Attack kills 5").
    auto noun_or_verb = [&](std::size_t i) -> PosClass {
        const auto p = prev_word(i);
        if (p < 0) {
            const auto n = next_word(i);
            if (n < 0) return PosClass::noun;
            const auto& nw = tokens[static_cast<std::size_t>(n)].normalized;
            if (lex.pronoun.contains(nw) || lex.article.contains(nw) || lex.determiner.contains(nw))
                return PosClass::verb;
            return PosClass::noun;
        }
        const auto pi = static_cast<std::size_t>(p);
        const auto& pw = tokens[pi].normalized;
        if (is_modal(pw) || is_subject_pronoun(pw)) return PosClass::verb;
        if (lex.article.contains(pw) || lex.determiner.contains(pw) || is_possessive(pw) ||
            lex.preposition.contains(pw) || tokens[pi].kind == TokenKind::number)
            return PosClass::noun;
        if (tags[pi] == PosClass::adjective) return PosClass::noun;
        if (tags[pi] == PosClass::noun) return PosClass::verb;
        return PosClass::noun;
    };

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].kind != TokenKind::word) continue;
        const std::string& w = tokens[i].normalized;
        PosClass tag;
        if (lex.article.contains(w)) tag = PosClass::article;
        else if (lex.pronoun.contains(w)) tag = PosClass::pronoun;
        else if (lex.preposition.contains(w)) tag = PosClass::preposition;
        else if (lex.interjection.contains(w)) tag = PosClass::interjection;
        else if (lex.conjunction.contains(w) || lex.determiner.contains(w)) tag = PosClass::other;
        else if (lex.adjective.contains(w)) tag = PosClass::adjective;
        else if (lex.adverb.contains(w)) tag = PosClass::adverb;
        else if (lex.verb.contains(w) && lex.noun.contains(w)) tag = noun_or_verb(i);
        else if (lex.verb.contains(w)) tag = PosClass::verb;
        else if (lex.noun.contains(w)) tag = PosClass::noun;
        else {
            const auto s_stems = stems(w, w.ends_with("ies") ? "ies" : (w.ends_with("es") ? "es" : "s"));
            auto plain_s = stems(w, "s");
            std::vector<std::string> s_forms = s_stems;
            s_forms.insert(s_forms.end(), plain_s.begin(), plain_s.end());
            std::vector<std::string> ed_forms = stems(w, w.ends_with("ied") ? "ied" : "ed");
            std::vector<std::string> ing_forms = stems(w, "ing");
            std::vector<std::string> cmp_forms = stems(w, w.ends_with("ier") ? "ier" : "er");
            auto sup = stems(w, w.ends_with("iest") ? "iest" : "est");
            cmp_forms.insert(cmp_forms.end(), sup.begin(), sup.end());

            const bool s_verb = w.ends_with('s') && any_in(s_forms, lex.verb);
            const bool s_noun = w.ends_with('s') && any_in(s_forms, lex.noun);
            if (s_verb && s_noun) tag = noun_or_verb(i);
            else if (s_verb) tag = PosClass::verb;
            else if (s_noun) tag = PosClass::noun;
            else if (any_in(ed_forms, lex.verb) || any_in(ing_forms, lex.verb)) tag = PosClass::verb;
            else if (any_in(cmp_forms, lex.adjective)) tag = PosClass::adjective;
            else if (w.ends_with("ly") && w.size() > 4) tag = PosClass::adverb;
            else if (w.ends_with("tion") || w.ends_with("sion") || w.ends_with("ness") || w.ends_with("ment") ||
                     w.ends_with("ity") || w.ends_with("ism") || w.ends_with("ship"))
                tag = PosClass::noun;
            else if (w.ends_with("ous") || w.ends_with("ful") || w.ends_with("ive") || w.ends_with("able") ||
                     w.ends_with("ible") || w.ends_with("less") || w.ends_with("ish") || w.ends_with("ical"))
                tag = PosClass::adjective;
            else if ((w.ends_with("ing") || w.ends_with("ed")) && w.size() >= 5) tag = PosClass::verb;
            else if (w.ends_with("ize") || w.ends_with("ise") || w.ends_with("ify")) tag = PosClass::verb;
            else tag = PosClass::noun;
        }
        tags[i] = tag;
    }
    return tags;
}

/// Percentage of word tokens per POS class.
struct PosProfile {
    std::array<double, kPosClassCount> percent{};
    std::size_t word_count = 0;

    bool degenerate() const noexcept { return word_count == 0; }
    double operator[](PosClass c) const { return percent[static_cast<std::size_t>(c)]; }
    double& operator[](PosClass c) { return percent[static_cast<std::size_t>(c)]; }
};

inline PosProfile pos_profile(std::span<const Token> tokens, const Lexicon& lex = Lexicon::defaults()) {
    const auto tags = pos_tag(tokens, lex);
    std::array<std::size_t, kPosClassCount> counts{};
    PosProfile profile;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].kind != TokenKind::word) continue;
        ++counts[static_cast<std::size_t>(tags[i])];
        ++profile.word_count;
    }
    if (profile.word_count == 0) return profile;
    for (std::size_t c = 0; c < kPosClassCount; ++c)
        profile.percent[c] = 100.0 * static_cast<double>(counts[c]) / static_cast<double>(profile.word_count);
    return profile;
}

// ---------------------------------------------------------------------------
// Syllables

namespace text_detail {

inline std::size_t syllables_of_part(const std::string& w) {
    if (w.empty()) return 0;
    auto vowel_at = [&](std::size_t i) { return is_vowel(w[i]) || (w[i] == 'y' && i > 0); };
    std::size_t groups = 0;
    bool in_group = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const bool v = vowel_at(i);
        if (v && !in_group) ++groups;
        in_group = v;
    }
    const std::size_t n = w.size();
    auto consonant = [&](std::size_t i) { return !vowel_at(i); };
    std::size_t silent = 0;
    if (n >= 3 && w.back() == 'e' && consonant(n - 2)) {
        // consonant + "le" is voiced (ta-ble)
        const bool voiced_le = w[n - 2] == 'l' && consonant(n - 3);
        if (!voiced_le) silent = 1;
    } else if (n >= 4 && w.ends_with("es") && consonant(n - 3)) {
        const char p = w[n - 3];
        const bool sibilant = p == 's' || p == 'x' || p == 'z' || p == 'c' || p == 'g' ||
                              (p == 'h' && (w[n - 4] == 'c' || w[n - 4] == 's'));
        const bool voiced_le = p == 'l' && consonant(n - 4);
        if (!sibilant && !voiced_le) silent = 1;
    } else if (n >= 4 && w.ends_with("ed") && consonant(n - 3) && w[n - 3] != 't' && w[n - 3] != 'd') {
        silent = 1;
    } else {
        // Silent e kept inside a suffixed form: absolute+ly, state+ment, care+ful+ly.
        static constexpr std::array<std::string_view, 9> suffixes = {
            "lessness", "lessly", "fully", "ments", "ment", "ness", "less", "ful", "ly"};
        std::string_view stem = w;
        bool stripped = true;
        bool any = false;
        while (stripped) {
            stripped = false;
            for (auto s : suffixes) {
                if (stem.size() >= s.size() + 3 && stem.ends_with(s)) {
                    stem.remove_suffix(s.size());
                    stripped = any = true;
                    break;
                }
            }
        }
        const std::size_t m = stem.size();
        if (any && m >= 3 && stem.back() == 'e' && !is_vowel(stem[m - 2]) && stem[m - 2] != 'y' &&
            !(stem[m - 2] == 'l' && !is_vowel(stem[m - 3])))
            silent = 1;
    }
    if (silent && groups > 1) --groups;
    return groups;
}

} // namespace text_detail

/// Vowel-group syllable estimate; y is a vowel except word-initially. Never
/// less than 1.
inline std::size_t count_syllables(std::string_view word) {
    std::size_t total = 0;
    std::string part;
    auto flush = [&] {
        total += text_detail::syllables_of_part(part);
        part.clear();
    };
    for (char ch : text_detail::normalize(word)) {
        if (ch == '-') flush();
        else if (text_detail::is_ascii_alpha(static_cast<unsigned char>(ch))) part.push_back(ch);
    }
    flush();
    return std::max<std::size_t>(total, 1);
}

struct ReadabilityCounts {
    std::size_t total_words = 0;
    std::size_t total_sentences = 0;
    std::size_t total_syllables = 0;
};

/// Counts over word tokens; a non-empty text has at least one sentence.
inline ReadabilityCounts readability_counts(std::string_view text, std::span<const Token> tokens) {
    ReadabilityCounts counts;
    for (const auto& t : tokens) {
        if (t.kind != TokenKind::word) continue;
        ++counts.total_words;
        counts.total_syllables += count_syllables(t.normalized);
    }
    if (counts.total_words > 0) counts.total_sentences = std::max<std::size_t>(1, split_sentences(text).size());
    return counts;
}

inline ReadabilityCounts readability_counts(std::string_view text) {
    const auto tokens = tokenize(text);
    return readability_counts(text, tokens);
}

} // namespace clickbait

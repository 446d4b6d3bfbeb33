#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include <clickbait/default_data.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "textkit.hpp"

namespace clickbait {

/// The eleven categories in reporting order: eight established ones followed
/// by Incomplete, Headline Cloning and URL Redirection.
enum class CategoryId {
    ambiguous,
    exaggeration,
    inflammatory,
    bait_and_switch,
    teasing,
    formatting,
    wrong,
    graphic,
    incomplete,
    headline_cloning,
    url_redirection,
};

inline constexpr std::size_t kCategoryCount = 11;

inline constexpr std::array<CategoryId, kCategoryCount> kAllCategories = {
    CategoryId::ambiguous,  CategoryId::exaggeration, CategoryId::inflammatory,     CategoryId::bait_and_switch,
    CategoryId::teasing,    CategoryId::formatting,   CategoryId::wrong,            CategoryId::graphic,
    CategoryId::incomplete, CategoryId::headline_cloning, CategoryId::url_redirection};

inline constexpr std::array<std::string_view, kCategoryCount> kCategoryKeys = {
    "ambiguous", "exaggeration", "inflammatory", "bait_and_switch", "teasing",        "formatting",
    "wrong",     "graphic",      "incomplete",   "headline_cloning", "url_redirection"};

inline constexpr std::array<std::string_view, kCategoryCount> kCategoryTitles = {
    "Ambiguous", "Exaggeration", "Inflammatory", "Bait-and-switch",  "Teasing",        "Formatting",
    "Wrong",     "Graphic",      "Incomplete",   "Headline Cloning", "URL Redirection"};

inline std::string_view key(CategoryId id) { return kCategoryKeys[static_cast<std::size_t>(id)]; }
inline std::string_view title(CategoryId id) { return kCategoryTitles[static_cast<std::size_t>(id)]; }

// ---------------------------------------------------------------------------
// Phrase patterns

/// One element of a trigger phrase. Literal words match exactly, "foo*"
/// matches any word starting with "foo", "*" matches any single word and
/// "<num>" matches a number or a spelled-out count.
struct PatternElement {
    enum class Kind { literal, prefix, any, number } kind = Kind::literal;
    std::string text;
};

using Pattern = std::vector<PatternElement>;

inline Pattern compile_pattern(std::string_view phrase) {
    Pattern pattern;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        PatternElement e;
        if (word == "*") e.kind = PatternElement::Kind::any;
        else if (word == "<num>") e.kind = PatternElement::Kind::number;
        else if (word.size() > 1 && word.back() == '*') {
            e.kind = PatternElement::Kind::prefix;
            e.text = word.substr(0, word.size() - 1);
        } else {
            e.text = word;
        }
        pattern.push_back(std::move(e));
        word.clear();
    };
    for (char ch : text_detail::normalize(phrase)) {
        if (ch == ' ') flush();
        else word.push_back(ch);
    }
    flush();
    if (pattern.empty()) throw DataError("empty trigger phrase in rules file");
    return pattern;
}

namespace rules_detail {

inline bool is_count_word(std::string_view w) {
    static const std::unordered_set<std::string_view> words = {
        "one",     "two",      "three",    "four",    "five",    "six",       "seven",   "eight",
        "nine",    "ten",      "eleven",   "twelve",  "thirteen", "fourteen", "fifteen", "sixteen",
        "seventeen", "eighteen", "nineteen", "twenty", "thirty",  "forty",     "fifty",   "hundred"};
    return words.contains(w);
}

// Headline words and numbers in order; URLs and punctuation are skipped.
struct WordStream {
    std::vector<const Token*> tokens;

    explicit WordStream(std::span<const Token> all) {
        for (const auto& t : all)
            if (t.kind == TokenKind::word || t.kind == TokenKind::number) tokens.push_back(&t);
    }

    bool element_matches(const PatternElement& e, const Token& t) const {
        switch (e.kind) {
        case PatternElement::Kind::any: return t.kind == TokenKind::word;
        case PatternElement::Kind::number: return t.kind == TokenKind::number || is_count_word(t.normalized);
        case PatternElement::Kind::prefix: return t.kind == TokenKind::word && t.normalized.starts_with(e.text);
        case PatternElement::Kind::literal: return t.normalized == e.text;
        }
        return false;
    }

    bool contains(const Pattern& p) const {
        if (p.size() > tokens.size()) return false;
        for (std::size_t start = 0; start + p.size() <= tokens.size(); ++start) {
            bool ok = true;
            for (std::size_t k = 0; k < p.size() && ok; ++k) ok = element_matches(p[k], *tokens[start + k]);
            if (ok) return true;
        }
        return false;
    }

    bool contains_any(const std::vector<Pattern>& patterns) const {
        for (const auto& p : patterns)
            if (contains(p)) return true;
        return false;
    }
};

} // namespace rules_detail

enum class OverlapMeasure { coverage, jaccard };

/// Detector configuration, normally read from data/rules.json.
struct RuleSet {
    std::size_t caps_min_letters = 4;
    std::size_t mark_run = 2;
    std::size_t punct_run = 3;
    double cloning_threshold = 0.5;
    OverlapMeasure cloning_measure = OverlapMeasure::coverage;

    std::unordered_set<std::string> ambiguous_pronouns;
    std::vector<Pattern> exaggeration_phrases;
    std::unordered_set<std::string> superlatives;
    std::unordered_set<std::string> superlative_exceptions;
    std::vector<Pattern> intensifiers;
    std::vector<Pattern> inflammatory_phrases;
    std::vector<Pattern> bait_phrases;
    std::vector<Pattern> teasing_phrases;
    std::unordered_set<std::string> acronyms;
    std::vector<Pattern> wrong_negations;
    std::unordered_set<std::string> claim_verbs;
    std::vector<Pattern> graphic_phrases;
    std::unordered_set<std::string> dangling;
    std::unordered_set<std::string> stopwords;
    std::unordered_set<std::string> shorteners;
    std::unordered_set<std::string> suspicious_tlds;
    std::unordered_set<std::string> ignored_host_labels;

    static RuleSet from_json(const nlohmann::json& doc) {
        RuleSet rules;
        try {
            auto words = [&](const char* section, const char* field) {
                std::unordered_set<std::string> out;
                for (const auto& w : doc.at(section).at(field)) out.insert(text_detail::normalize(w.get<std::string>()));
                return out;
            };
            auto patterns = [&](const char* section, const char* field) {
                std::vector<Pattern> out;
                for (const auto& w : doc.at(section).at(field)) out.push_back(compile_pattern(w.get<std::string>()));
                return out;
            };
            const auto& th = doc.at("thresholds");
            rules.caps_min_letters = th.at("caps_min_letters").get<std::size_t>();
            rules.mark_run = th.at("mark_run").get<std::size_t>();
            rules.punct_run = th.at("punct_run").get<std::size_t>();
            rules.cloning_threshold = th.at("cloning_threshold").get<double>();
            const auto measure = th.value("cloning_measure", std::string("coverage"));
            if (measure == "coverage") rules.cloning_measure = OverlapMeasure::coverage;
            else if (measure == "jaccard") rules.cloning_measure = OverlapMeasure::jaccard;
            else throw DataError("rules: cloning_measure must be 'coverage' or 'jaccard'");

            rules.ambiguous_pronouns = words("ambiguous", "pronouns");
            rules.exaggeration_phrases = patterns("exaggeration", "phrases");
            rules.superlatives = words("exaggeration", "superlatives");
            rules.superlative_exceptions = words("exaggeration", "superlative_exceptions");
            rules.intensifiers = patterns("exaggeration", "intensifiers");
            rules.inflammatory_phrases = patterns("inflammatory", "phrases");
            rules.bait_phrases = patterns("bait_and_switch", "phrases");
            rules.teasing_phrases = patterns("teasing", "phrases");
            rules.acronyms = words("formatting", "acronyms");
            rules.wrong_negations = patterns("wrong", "negations");
            rules.claim_verbs = words("wrong", "claim_verbs");
            rules.graphic_phrases = patterns("graphic", "phrases");
            rules.dangling = words("incomplete", "dangling");
            rules.stopwords = words("headline_cloning", "stopwords");
            rules.shorteners = words("url_redirection", "shorteners");
            rules.suspicious_tlds = words("url_redirection", "suspicious_tlds");
            rules.ignored_host_labels = words("url_redirection", "ignored_host_labels");
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("rules file: ") + e.what());
        }
        if (rules.cloning_threshold < 0.0 || rules.cloning_threshold > 1.0)
            throw DataError("rules: cloning_threshold must lie in [0,1]");
        return rules;
    }

    static RuleSet load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot read rules file '" + path.string() + "'");
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("rules file '" + path.string() + "': " + e.what());
        }
    }

    static const RuleSet& defaults() {
        static const RuleSet instance = from_json(nlohmann::json::parse(default_data::rules_json));
        return instance;
    }
};

// ---------------------------------------------------------------------------
// Detection

struct CategoryVerdict {
    std::array<bool, kCategoryCount> flags{};
    Label label = Label::non_clickbait;
    bool cloning_skipped = false; // no body
    bool url_skipped = false;     // no url

    bool operator[](CategoryId id) const { return flags[static_cast<std::size_t>(id)]; }
    std::size_t flag_count() const {
        return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
    }
};

inline std::unordered_set<std::string> content_words(std::string_view text, const RuleSet& rules) {
    std::unordered_set<std::string> out;
    for (const auto& t : tokenize(text))
        if ((t.kind == TokenKind::word || t.kind == TokenKind::number) && !rules.stopwords.contains(t.normalized))
            out.insert(t.normalized);
    return out;
}

/// Fraction of headline keywords found in the body (coverage), or Jaccard
/// similarity of the two keyword sets. Empty headline keyword set -> 1.
inline double keyword_overlap(const std::unordered_set<std::string>& headline,
                              const std::unordered_set<std::string>& body, OverlapMeasure measure) {
    if (headline.empty()) return 1.0;
    std::size_t shared = 0;
    for (const auto& w : headline) shared += body.contains(w) ? 1 : 0;
    if (measure == OverlapMeasure::coverage) return static_cast<double>(shared) / static_cast<double>(headline.size());
    const std::size_t unite = headline.size() + body.size() - shared;
    return static_cast<double>(shared) / static_cast<double>(unite);
}

/// True when the body lacks the keywords the headline promises. Records
/// without a body never fire.
inline bool detect_headline_cloning(const HeadlineRecord& record, const RuleSet& rules = RuleSet::defaults()) {
    if (!record.body) return false;
    const auto overlap = keyword_overlap(content_words(record.text, rules), content_words(*record.body, rules),
                                         rules.cloning_measure);
    return overlap < rules.cloning_threshold;
}

/// Host name of a URL, lowercased, or nullopt when no plausible host exists.
inline std::optional<std::string> url_host(std::string_view url) {
    std::string s = text_detail::lowercase(url);
    if (const auto scheme = s.find("://"); scheme != std::string::npos) s = s.substr(scheme + 3);
    if (const auto cut = s.find_first_of("/?#"); cut != std::string::npos) s = s.substr(0, cut);
    if (const auto at = s.rfind('@'); at != std::string::npos) s = s.substr(at + 1);
    if (const auto colon = s.find(':'); colon != std::string::npos) s = s.substr(0, colon);
    if (s.empty() || s.find('.') == std::string::npos || s.front() == '.' || s.back() == '.') return std::nullopt;
    for (char ch : s)
        if (!((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '.' || ch == '-')) return std::nullopt;
    return s;
}

inline bool detect_url_redirection(const HeadlineRecord& record, const RuleSet& rules,
                                   const std::unordered_set<std::string>& headline_words) {
    if (!record.url) return false;
    const auto host = url_host(*record.url);
    if (!host) return true; // unparseable destination
    std::string h = *host;
    if (h.starts_with("www.")) h = h.substr(4);
    for (const auto& s : rules.shorteners)
        if (h == s || h.ends_with("." + s)) return true;

    std::vector<std::string> labels;
    std::size_t start = 0;
    while (start <= h.size()) {
        const auto dot = h.find('.', start);
        labels.push_back(h.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (rules.suspicious_tlds.contains(labels.back())) return true;

    bool shares = false;
    for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
        if (rules.ignored_host_labels.contains(labels[i])) continue;
        std::size_t from = 0;
        while (from <= labels[i].size()) {
            const auto dash = labels[i].find('-', from);
            const auto word = labels[i].substr(from, dash == std::string::npos ? std::string::npos : dash - from);
            if (!word.empty() && headline_words.contains(word)) shares = true;
            if (dash == std::string::npos) break;
            from = dash + 1;
        }
    }
    return !shares;
}

namespace rules_detail {

inline bool ambiguous(std::span<const Token> tokens, std::span<const PosClass> tags, const RuleSet& rules) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].kind != TokenKind::word) continue;
        if (tags[i] == PosClass::noun) return false; // a referent appears first
        if (rules.ambiguous_pronouns.contains(tokens[i].normalized)) return true;
    }
    return false;
}

inline bool exaggeration(const WordStream& words, const RuleSet& rules) {
    if (words.contains_any(rules.exaggeration_phrases)) return true;
    bool superlative = false;
    for (const Token* t : words.tokens) {
        const auto& w = t->normalized;
        if (rules.superlatives.contains(w) ||
            (w.size() >= 5 && w.ends_with("est") && !rules.superlative_exceptions.contains(w))) {
            superlative = true;
            break;
        }
    }
    return superlative && words.contains_any(rules.intensifiers);
}

inline bool formatting(std::string_view text, std::span<const Token> tokens, const RuleSet& rules) {
    for (const auto& t : tokens) {
        if (t.kind == TokenKind::word) {
            std::size_t upper = 0;
            bool lower = false;
            for (char ch : t.surface) {
                if (ch >= 'A' && ch <= 'Z') ++upper;
                if (ch >= 'a' && ch <= 'z') lower = true;
            }
            if (!lower && upper >= rules.caps_min_letters && !rules.acronyms.contains(t.normalized)) return true;
        } else if (t.kind == TokenKind::punctuation) {
            // Tokens group runs of one mark; count code points in the run.
            std::size_t units = 0;
            for (unsigned char ch : t.surface)
                if ((ch & 0xC0) != 0x80) ++units;
            if (units >= rules.punct_run) return true;
        }
    }
    std::size_t run = 0;
    for (char ch : text) {
        run = (ch == '!' || ch == '?') ? run + 1 : 0;
        if (run >= rules.mark_run) return true;
    }
    return false;
}

inline bool wrong(const WordStream& words, const RuleSet& rules) {
    if (!words.contains_any(rules.wrong_negations)) return false;
    for (const Token* t : words.tokens)
        if (rules.claim_verbs.contains(t->normalized)) return true;
    return false;
}

inline bool incomplete(std::string_view text, const WordStream& words, const RuleSet& rules) {
    std::string_view tail = text;
    for (bool trimmed = true; trimmed && !tail.empty();) {
        trimmed = false;
        for (std::string_view closer : {" ", "\t", "\"", "'", ")", "]", "\xE2\x80\x9D", "\xE2\x80\x99"}) {
            if (tail.ends_with(closer)) {
                tail.remove_suffix(closer.size());
                trimmed = true;
            }
        }
    }
    for (std::string_view end : {"...", "\xE2\x80\xA6", "-", "\xE2\x80\x93", "\xE2\x80\x94", ":"})
        if (tail.ends_with(end)) return true;
    if (words.tokens.empty()) return false;
    // A sentence terminator closes the clause even after a function word.
    if (tail.ends_with('.') || tail.ends_with('!') || tail.ends_with('?')) return false;
    return rules.dangling.contains(words.tokens.back()->normalized);
}

} // namespace rules_detail

/// Runs every detector independently and labels the record clickbait iff any fires.
inline CategoryVerdict detect(const HeadlineRecord& record, const RuleSet& rules = RuleSet::defaults(),
                              const Lexicon& lex = Lexicon::defaults()) {
    using namespace rules_detail;
    const auto tokens = tokenize(record.text);
    const auto tags = pos_tag(tokens, lex);
    const WordStream words(tokens);

    CategoryVerdict v;
    auto set = [&](CategoryId id, bool value) { v.flags[static_cast<std::size_t>(id)] = value; };
    set(CategoryId::ambiguous, ambiguous(tokens, tags, rules));
    set(CategoryId::exaggeration, exaggeration(words, rules));
    set(CategoryId::inflammatory, words.contains_any(rules.inflammatory_phrases));
    set(CategoryId::bait_and_switch, words.contains_any(rules.bait_phrases));
    set(CategoryId::teasing, words.contains_any(rules.teasing_phrases));
    set(CategoryId::formatting, formatting(record.text, tokens, rules));
    set(CategoryId::wrong, wrong(words, rules));
    set(CategoryId::graphic, words.contains_any(rules.graphic_phrases));
    set(CategoryId::incomplete, incomplete(record.text, words, rules));
    set(CategoryId::headline_cloning, detect_headline_cloning(record, rules));
    set(CategoryId::url_redirection, detect_url_redirection(record, rules, content_words(record.text, rules)));
    v.cloning_skipped = !record.body.has_value();
    v.url_skipped = !record.url.has_value();
    v.label = v.flag_count() > 0 ? Label::clickbait : Label::non_clickbait;
    return v;
}

// ---------------------------------------------------------------------------
// Per-category statistics

struct CategoryRow {
    CategoryId id = CategoryId::ambiguous;
    std::size_t flagged = 0;
    std::size_t flagged_clickbait = 0; // flagged records whose gold label is clickbait

    /// Undefined when nothing was flagged.
    std::optional<double> precision() const {
        if (flagged == 0) return std::nullopt;
        return static_cast<double>(flagged_clickbait) / static_cast<double>(flagged);
    }
};

struct CategoryStats {
    std::array<CategoryRow, kCategoryCount> rows{};
    std::size_t records = 0;
    std::size_t labeled_clickbait = 0; // records with at least one flag
    std::size_t cloning_skipped = 0;
    std::size_t url_skipped = 0;

    const CategoryRow& operator[](CategoryId id) const { return rows[static_cast<std::size_t>(id)]; }
};

inline CategoryStats category_stats(const Corpus& corpus, std::span<const CategoryVerdict> verdicts) {
    if (verdicts.size() != corpus.size()) throw ParameterError("category_stats: one verdict per record required");
    CategoryStats stats;
    stats.records = corpus.size();
    for (std::size_t c = 0; c < kCategoryCount; ++c) stats.rows[c].id = kAllCategories[c];
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const auto& v = verdicts[i];
        const bool gold_positive = is_positive(corpus.records[i].gold_label);
        for (std::size_t c = 0; c < kCategoryCount; ++c) {
            if (!v.flags[c]) continue;
            ++stats.rows[c].flagged;
            if (gold_positive) ++stats.rows[c].flagged_clickbait;
        }
        if (v.label == Label::clickbait) ++stats.labeled_clickbait;
        stats.cloning_skipped += v.cloning_skipped ? 1 : 0;
        stats.url_skipped += v.url_skipped ? 1 : 0;
    }
    return stats;
}

/// Plain-text table: serial number, category, flagged count, precision.
inline std::string format_category_table(const CategoryStats& stats) {
    std::ostringstream out;
    out << "No.\tCategory\tFlagged\tPrecision\n";
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        const auto& row = stats.rows[c];
        out << (c + 1) << '\t' << title(row.id) << '\t' << row.flagged << '\t';
        if (const auto p = row.precision()) {
            out.setf(std::ios::fixed);
            out.precision(2);
            out << (*p * 100.0) << '%';
        } else {
            out << "n/a";
        }
        out << '\n';
    }
    return out.str();
}

} // namespace clickbait

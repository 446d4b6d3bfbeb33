#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace clickbait {

enum class Label { clickbait, non_clickbait };

inline std::string_view to_string(Label label) {
    return label == Label::clickbait ? "clickbait" : "non_clickbait";
}

inline Label parse_label(std::string_view text) {
    if (text == "clickbait") return Label::clickbait;
    if (text == "non_clickbait") return Label::non_clickbait;
    throw DataError("unknown label '" + std::string(text) + "'");
}

inline bool is_positive(Label label) { return label == Label::clickbait; }

enum class Phase { rules = 0, formality = 1, cluster = 2 };

inline std::string_view to_string(Phase phase) {
    switch (phase) {
    case Phase::rules: return "rules";
    case Phase::formality: return "formality";
    case Phase::cluster: return "cluster";
    }
    return "?";
}

inline Phase parse_phase(std::string_view text) {
    if (text == "rules") return Phase::rules;
    if (text == "formality") return Phase::formality;
    if (text == "cluster") return Phase::cluster;
    throw ParameterError("unknown phase '" + std::string(text) + "'");
}

struct HeadlineRecord {
    std::int64_t id = 0;
    std::string text;
    std::optional<std::string> body;
    std::optional<std::string> url;
    Label gold_label = Label::non_clickbait;
};

struct PhaseLabel {
    Phase phase = Phase::rules;
    Label label = Label::non_clickbait;
    bool changed = false;
};

/// Append-only per-record label history, ordered rules -> formality -> cluster.
class PhaseHistory {
public:
    PhaseHistory() = default;
    explicit PhaseHistory(std::size_t records) : entries_(records) {}

    std::size_t size() const noexcept { return entries_.size(); }

    const std::vector<PhaseLabel>& of(std::size_t index) const { return entries_.at(index); }

    /// Throws ParameterError if `phase` is not the next phase for this record.
    const PhaseLabel& record(std::size_t index, Phase phase, Label label) {
        auto& list = entries_.at(index);
        const auto expected = static_cast<int>(list.size());
        if (static_cast<int>(phase) != expected) {
            throw ParameterError("phase '" + std::string(to_string(phase)) +
                                 "' out of order: record has " + std::to_string(expected) +
                                 " phase label(s)");
        }
        const bool changed = !list.empty() && list.back().label != label;
        list.push_back({phase, label, changed});
        return list.back();
    }

    /// Number of phases every record has completed (records are kept in lockstep).
    std::size_t completed_phases() const {
        if (entries_.empty()) return 0;
        std::size_t n = entries_.front().size();
        for (const auto& list : entries_) n = std::min(n, list.size());
        return n;
    }

    std::optional<Label> latest(std::size_t index) const {
        const auto& list = entries_.at(index);
        if (list.empty()) return std::nullopt;
        return list.back().label;
    }

    std::optional<Label> label_at(std::size_t index, Phase phase) const {
        const auto& list = entries_.at(index);
        const auto p = static_cast<std::size_t>(phase);
        if (p >= list.size()) return std::nullopt;
        return list[p].label;
    }

private:
    std::vector<std::vector<PhaseLabel>> entries_;
};

struct Corpus {
    std::vector<HeadlineRecord> records;
    PhaseHistory phases;
    std::size_t skipped_lines = 0;

    std::size_t size() const noexcept { return records.size(); }

    std::size_t count(Label label) const {
        return static_cast<std::size_t>(std::count_if(
            records.begin(), records.end(), [&](const auto& r) { return r.gold_label == label; }));
    }
};

namespace detail {

inline bool has_alpha(std::string_view text) {
    return std::any_of(text.begin(), text.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    });
}

inline std::string_view trim(std::string_view text) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = text.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(ws);
    return text.substr(first, last - first + 1);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read corpus file '" + path.string() + "'");
    return in;
}

inline void check_unique_ids(const Corpus& corpus) {
    std::unordered_set<std::int64_t> seen;
    for (const auto& r : corpus.records)
        if (!seen.insert(r.id).second) throw DataError("duplicate record id " + std::to_string(r.id));
}

} // namespace detail

/// Two plain-text files, one headline per line. Ids run sequentially across
/// the clickbait file and then the non-clickbait file.
inline Corpus load_corpus(const std::filesystem::path& clickbait_path,
                          const std::filesystem::path& nonclickbait_path) {
    Corpus corpus;
    std::int64_t next_id = 0;
    for (const auto& [path, label] : {std::pair{clickbait_path, Label::clickbait},
                                      std::pair{nonclickbait_path, Label::non_clickbait}}) {
        auto in = detail::open_input(path);
        std::size_t added = 0;
        std::string line;
        while (std::getline(in, line)) {
            const auto text = detail::trim(line);
            if (text.empty() || !detail::has_alpha(text)) {
                ++corpus.skipped_lines;
                continue;
            }
            corpus.records.push_back({next_id++, std::string(text), std::nullopt, std::nullopt, label});
            ++added;
        }
        if (added == 0) throw DataError("corpus file '" + path.string() + "' yielded no records");
    }
    corpus.phases = PhaseHistory(corpus.size());
    return corpus;
}

/// JSON lines: {"text": ..., "label": "clickbait"|"non_clickbait", "body"?: ..., "url"?: ..., "id"?: ...}.
inline Corpus load_corpus_jsonl(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    Corpus corpus;
    std::int64_t next_id = 0;
    std::size_t line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            ++corpus.skipped_lines;
            continue;
        }
        const auto where = path.string() + ":" + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("malformed JSON at line " + std::to_string(line_no) + " (" + where + "): " + e.what());
        }
        if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string() || !obj.contains("label") ||
            !obj["label"].is_string()) {
            throw DataError("line " + std::to_string(line_no) + " (" + where +
                            "): expected object with string fields 'text' and 'label'");
        }
        HeadlineRecord record;
        try {
            record.gold_label = parse_label(obj["label"].get<std::string>());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + " (" + where + "): " + e.what());
        }
        const auto text = detail::trim(obj["text"].get_ref<const std::string&>());
        if (text.empty() || !detail::has_alpha(text)) {
            ++corpus.skipped_lines;
            continue;
        }
        record.text = std::string(text);
        for (const char* field : {"body", "url"}) {
            if (!obj.contains(field) || obj[field].is_null()) continue;
            if (!obj[field].is_string())
                throw DataError("line " + std::to_string(line_no) + ": field '" + field + "' must be a string");
            (std::string_view(field) == "body" ? record.body : record.url) = obj[field].get<std::string>();
        }
        if (obj.contains("id")) {
            if (!obj["id"].is_number_integer())
                throw DataError("line " + std::to_string(line_no) + ": field 'id' must be an integer");
            record.id = obj["id"].get<std::int64_t>();
            next_id = std::max(next_id, record.id + 1);
        } else {
            record.id = next_id++;
        }
        corpus.records.push_back(std::move(record));
    }
    if (corpus.records.empty()) throw DataError("corpus file '" + path.string() + "' yielded no records");
    detail::check_unique_ids(corpus);
    corpus.phases = PhaseHistory(corpus.size());
    return corpus;
}

inline void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (const auto& r : corpus.records) {
        nlohmann::ordered_json obj;
        obj["id"] = r.id;
        obj["text"] = r.text;
        obj["label"] = to_string(r.gold_label);
        if (r.body) obj["body"] = *r.body;
        if (r.url) obj["url"] = *r.url;
        out << obj.dump() << '\n';
    }
}

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified by gold label; each class contributes round(count * fraction)
/// records to the test side. Indices come back in ascending order.
inline SplitIndices split_indices(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ParameterError("test fraction must lie in (0,1), got " + std::to_string(test_fraction));
    if (corpus.count(Label::clickbait) < 2 || corpus.count(Label::non_clickbait) < 2)
        throw DataError("split needs at least 2 records of each label");

    Rng rng(seed);
    SplitIndices out;
    for (Label label : {Label::clickbait, Label::non_clickbait}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < corpus.size(); ++i)
            if (corpus.records[i].gold_label == label) members.push_back(i);
        rng.shuffle(members);
        auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * test_fraction));
        n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
        out.test.insert(out.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& indices) {
    Corpus out;
    out.phases = PhaseHistory(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        out.records.push_back(corpus.records[indices[k]]);
        for (const auto& pl : corpus.phases.of(indices[k])) out.phases.record(k, pl.phase, pl.label);
    }
    return out;
}

inline std::pair<Corpus, Corpus> split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
    const auto idx = split_indices(corpus, test_fraction, seed);
    return {subset(corpus, idx.train), subset(corpus, idx.test)};
}

/// FNV-1a over ids, labels and text fields; identifies the corpus in reports.
inline std::string fingerprint(const Corpus& corpus) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    auto feed = [&](std::string_view bytes) {
        for (unsigned char c : bytes) {
            hash ^= c;
            hash *= 0x100000001b3ULL;
        }
        hash ^= 0xff;
        hash *= 0x100000001b3ULL;
    };
    for (const auto& r : corpus.records) {
        feed(std::to_string(r.id));
        feed(to_string(r.gold_label));
        feed(r.text);
        feed(r.body.value_or(""));
        feed(r.url.value_or(""));
    }
    std::ostringstream hex;
    hex << std::hex;
    hex.width(16);
    hex.fill('0');
    hex << hash;
    return hex.str();
}

} // namespace clickbait

#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "category_rules.hpp"
#include "corpus.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "formality.hpp"
#include "learners.hpp"
#include "manifold.hpp"
#include "plots.hpp"
#include "textkit.hpp"

namespace clickbait {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

struct CorpusPaths {
    std::string clickbait;     // one headline per line
    std::string non_clickbait; // one headline per line
    std::string jsonl;         // alternative: one record object per line
};

struct PipelineConfig {
    CorpusPaths corpus;
    std::string rules;       // empty = built-in rules
    std::string lexicon_dir; // empty = built-in lexicon
    std::uint64_t seed = 42;
    std::size_t threads = 1;
    double test_fraction = 0.2;
    std::size_t reliability_bins = 10;
    FormalityConfig formality;
    SkipGramConfig embedding;
    TsneConfig tsne;
    std::size_t tsne_sample_cap = 5000;
    std::size_t kmeans_restarts = 10;
    LearnerConfig learners;
    FeatureMask feature_mask = FeatureMask::all();
    std::vector<FeatureGroup> ablation_groups{kAllGroups.begin(), kAllGroups.end()};
    std::string out_dir = "clickbait-run";

    /// Pushes the master seed and thread count into every stage.
    void propagate() {
        embedding.seed = seed;
        tsne.seed = seed;
        tsne.threads = threads;
        learners.svm.seed = seed;
        learners.forest.seed = seed;
        learners.forest.threads = threads;
    }

    void validate() const {
        if (threads == 0) throw ParameterError("threads must be >= 1");
        if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ParameterError("test_fraction must lie in (0,1)");
        if (reliability_bins < 2) throw ParameterError("reliability_bins must be >= 2");
        if (tsne_sample_cap < 4) throw ParameterError("tsne sample_cap must be >= 4");
        if (feature_mask.empty()) throw ParameterError("feature mask is empty");
        formality.validate();
        embedding.validate();
        tsne.validate();
        learners.svm.validate();
        learners.tree.validate();
        learners.forest.validate();
    }
};

/// Everything that can change results; the output directory is left out so
/// runs written to different places compare equal.
inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["corpus"] = {{"clickbait", c.corpus.clickbait}, {"non_clickbait", c.corpus.non_clickbait}, {"jsonl", c.corpus.jsonl}};
    j["rules"] = c.rules;
    j["lexicon_dir"] = c.lexicon_dir;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["test_fraction"] = c.test_fraction;
    j["reliability_bins"] = c.reliability_bins;
    j["formality"] = {{"fscore_threshold", c.formality.fscore_threshold}, {"fres_threshold", c.formality.fres_threshold}};
    j["embedding"] = {{"dimension", c.embedding.dimension}, {"window", c.embedding.window},
                      {"negatives", c.embedding.negatives}, {"epochs", c.embedding.epochs},
                      {"learning_rate", c.embedding.learning_rate}, {"min_count", c.embedding.min_count},
                      {"subsample", c.embedding.subsample}};
    j["tsne"] = {{"perplexity", c.tsne.perplexity},
                 {"iterations", c.tsne.iterations},
                 {"learning_rate", c.tsne.learning_rate},
                 {"initial_momentum", c.tsne.initial_momentum},
                 {"final_momentum", c.tsne.final_momentum},
                 {"momentum_switch", c.tsne.momentum_switch},
                 {"exaggeration", c.tsne.exaggeration},
                 {"exaggeration_iterations", c.tsne.exaggeration_iterations},
                 {"sample_cap", c.tsne_sample_cap},
                 {"kmeans_restarts", c.kmeans_restarts}};
    j["learners"] = to_json(c.learners);
    j["learners"]["svm"].erase("seed");
    j["learners"]["forest"].erase("seed");
    j["feature_groups"] = c.feature_mask.str();
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (FeatureGroup g : c.ablation_groups) groups.push_back(to_string(g));
    j["ablation_groups"] = groups;
    return j;
}

namespace pipeline_detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw ParameterError("config: '" + std::string(where) + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto a : allowed) known = known || a == key;
        if (!known) throw ParameterError("config: unknown key '" + key + "' in " + std::string(where));
    }
}

} // namespace pipeline_detail

/// Overlays the keys present in `j` onto `c`; unknown keys are rejected.
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c = {}) {
    using pipeline_detail::check_keys;
    try {
        check_keys(j,
                   {"corpus", "rules", "lexicon_dir", "seed", "threads", "test_fraction", "reliability_bins", "formality",
                    "embedding", "tsne", "learners", "feature_groups", "ablation_groups", "out_dir"},
                   "config");
        if (j.contains("corpus")) {
            const auto& k = j.at("corpus");
            check_keys(k, {"clickbait", "non_clickbait", "jsonl"}, "corpus");
            c.corpus.clickbait = k.value("clickbait", c.corpus.clickbait);
            c.corpus.non_clickbait = k.value("non_clickbait", c.corpus.non_clickbait);
            c.corpus.jsonl = k.value("jsonl", c.corpus.jsonl);
        }
        c.rules = j.value("rules", c.rules);
        c.lexicon_dir = j.value("lexicon_dir", c.lexicon_dir);
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
        c.test_fraction = j.value("test_fraction", c.test_fraction);
        c.reliability_bins = j.value("reliability_bins", c.reliability_bins);
        c.out_dir = j.value("out_dir", c.out_dir);
        if (j.contains("formality")) {
            const auto& f = j.at("formality");
            check_keys(f, {"fscore_threshold", "fres_threshold"}, "formality");
            c.formality.fscore_threshold = f.value("fscore_threshold", c.formality.fscore_threshold);
            c.formality.fres_threshold = f.value("fres_threshold", c.formality.fres_threshold);
        }
        if (j.contains("embedding")) {
            const auto& e = j.at("embedding");
            check_keys(e, {"dimension", "window", "negatives", "epochs", "learning_rate", "min_count", "subsample"},
                       "embedding");
            c.embedding.dimension = e.value("dimension", c.embedding.dimension);
            c.embedding.window = e.value("window", c.embedding.window);
            c.embedding.negatives = e.value("negatives", c.embedding.negatives);
            c.embedding.epochs = e.value("epochs", c.embedding.epochs);
            c.embedding.learning_rate = e.value("learning_rate", c.embedding.learning_rate);
            c.embedding.min_count = e.value("min_count", c.embedding.min_count);
            c.embedding.subsample = e.value("subsample", c.embedding.subsample);
        }
        if (j.contains("tsne")) {
            const auto& t = j.at("tsne");
            check_keys(t,
                       {"perplexity", "iterations", "learning_rate", "initial_momentum", "final_momentum",
                        "momentum_switch", "exaggeration", "exaggeration_iterations", "sample_cap", "kmeans_restarts"},
                       "tsne");
            c.tsne.perplexity = t.value("perplexity", c.tsne.perplexity);
            c.tsne.iterations = t.value("iterations", c.tsne.iterations);
            c.tsne.learning_rate = t.value("learning_rate", c.tsne.learning_rate);
            c.tsne.initial_momentum = t.value("initial_momentum", c.tsne.initial_momentum);
            c.tsne.final_momentum = t.value("final_momentum", c.tsne.final_momentum);
            c.tsne.momentum_switch = t.value("momentum_switch", c.tsne.momentum_switch);
            c.tsne.exaggeration = t.value("exaggeration", c.tsne.exaggeration);
            c.tsne.exaggeration_iterations = t.value("exaggeration_iterations", c.tsne.exaggeration_iterations);
            c.tsne_sample_cap = t.value("sample_cap", c.tsne_sample_cap);
            c.kmeans_restarts = t.value("kmeans_restarts", c.kmeans_restarts);
        }
        if (j.contains("learners")) c.learners = learner_config_from_json(j.at("learners"), c.learners);
        if (j.contains("feature_groups")) {
            const auto& g = j.at("feature_groups");
            if (g.is_string()) {
                c.feature_mask = FeatureMask::parse(g.get<std::string>());
            } else {
                FeatureMask m;
                for (const auto& name : g) m.add(parse_group(name.get<std::string>()));
                c.feature_mask = m;
            }
        }
        if (j.contains("ablation_groups")) {
            c.ablation_groups.clear();
            for (const auto& name : j.at("ablation_groups")) c.ablation_groups.push_back(parse_group(name.get<std::string>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    return c;
}

inline PipelineConfig load_config(const fs::path& path, PipelineConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot read config file " + path.string());
    try {
        return config_from_json(nlohmann::json::parse(in), std::move(base));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParameterError("config file " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// TSV helpers

namespace pipeline_detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw DataError(where + ": not a number: '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size()) throw DataError(where + ": not an integer: '" + s + "'");
    return v;
}

struct Tsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

inline Tsv read_tsv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    Tsv t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw DataError(path.string() + ": empty table");
    return t;
}

inline void write_text(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << contents;
    if (!out) throw DataError("cannot write " + path.string());
}

inline nlohmann::ordered_json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

} // namespace pipeline_detail

// ---------------------------------------------------------------------------
// Run state

struct PhaseSummary {
    Phase phase = Phase::rules;
    std::size_t clickbait = 0;
    std::size_t non_clickbait = 0;
    std::size_t changed = 0;

    std::size_t total() const { return clickbait + non_clickbait; }
    double changed_fraction() const {
        return total() ? static_cast<double>(changed) / static_cast<double>(total()) : 0.0;
    }
};

inline PhaseSummary summarize_phase(const Corpus& corpus, Phase phase) {
    PhaseSummary s;
    s.phase = phase;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& list = corpus.phases.of(i);
        const auto p = static_cast<std::size_t>(phase);
        if (p >= list.size()) throw ParameterError("phase '" + std::string(to_string(phase)) + "' has not run");
        (list[p].label == Label::clickbait ? s.clickbait : s.non_clickbait)++;
        s.changed += list[p].changed ? 1 : 0;
    }
    return s;
}

struct ClusterSummary {
    std::size_t vocabulary = 0;
    double embedding_final_loss = 0.0;
    std::size_t sample_size = 0;
    double perplexity = 0.0;
    double tsne_learning_rate = 0.0;
    double tsne_initial_kl = 0.0;
    double tsne_final_kl = 0.0;
    double kmeans_objective = 0.0;
    std::array<std::size_t, 2> cluster_sizes{};
    int clickbait_cluster = 0;
};

struct AblationEntry {
    FeatureMask mask;
    std::vector<EvaluationReport> evaluations;
};

/// Everything a run produces, stage by stage. Stages fill it in order; each
/// stage's outputs are also persisted under the output directory.
struct RunState {
    PipelineConfig config;
    std::shared_ptr<const RuleSet> rules;
    std::shared_ptr<const Lexicon> lexicon;

    Corpus corpus;
    std::vector<CategoryVerdict> verdicts;
    std::vector<FormalityScores> formality;
    std::vector<char> formality_degenerate;
    std::optional<EmbeddingModel> embedding;
    Matrix headline_vectors;
    std::vector<int> clickbait_cluster; // 1 if the record sits in the cluster mapped to clickbait
    ClusterSummary cluster;
    std::vector<std::size_t> tsne_sample;
    Matrix tsne_coords;

    FeatureTable features;
    SplitIndices split;
    std::vector<TrainedModel> models;
    std::vector<EvaluationReport> evaluation;
    std::vector<AblationEntry> ablation;
    nlohmann::ordered_json timing = nlohmann::ordered_json::object();

    fs::path out() const { return fs::path(config.out_dir); }
};

inline void load_resources(RunState& state) {
    state.rules = state.config.rules.empty() ? std::shared_ptr<const RuleSet>(&RuleSet::defaults(), [](const RuleSet*) {})
                                             : std::make_shared<const RuleSet>(RuleSet::load(state.config.rules));
    state.lexicon = state.config.lexicon_dir.empty()
                        ? std::shared_ptr<const Lexicon>(&Lexicon::defaults(), [](const Lexicon*) {})
                        : std::make_shared<const Lexicon>(Lexicon::load(state.config.lexicon_dir));
}

inline RunState make_state(PipelineConfig config) {
    config.propagate();
    config.validate();
    RunState state;
    state.config = std::move(config);
    load_resources(state);
    return state;
}

namespace pipeline_detail {

template <typename Fn>
auto timed(RunState& state, const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
        state.timing[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            finish();
        } else {
            auto result = fn();
            finish();
            return result;
        }
    } catch (const Error& e) {
        const std::string prefix = "stage '" + stage + "': ";
        if (std::string_view(e.what()).starts_with("stage '")) throw;
        throw_as(e.kind(), prefix + e.what());
    } catch (const fs::filesystem_error& e) {
        throw DataError("stage '" + stage + "': " + e.what());
    }
}

inline void require_phases(const RunState& state, std::size_t needed, std::string_view what) {
    const auto done = state.corpus.phases.completed_phases();
    if (done < needed)
        throw ParameterError(std::string(what) + " needs " + std::to_string(needed) + " completed phase(s); " +
                             std::to_string(done) + " completed");
}

} // namespace pipeline_detail

// ---------------------------------------------------------------------------
// Persistence of intermediates

inline void save_phases(const RunState& s) {
    std::string out = "id\tphase\tlabel\tchanged\n";
    for (std::size_t i = 0; i < s.corpus.size(); ++i)
        for (const auto& pl : s.corpus.phases.of(i))
            out += std::to_string(s.corpus.records[i].id) + "\t" + std::string(to_string(pl.phase)) + "\t" +
                   std::string(to_string(pl.label)) + "\t" + (pl.changed ? "1" : "0") + "\n";
    pipeline_detail::write_text(s.out() / "phases.tsv", out);
}

inline void save_categories(const RunState& s) {
    std::string out = "id";
    for (auto k : kCategoryKeys) out += "\t" + std::string(k);
    out += "\n";
    for (std::size_t i = 0; i < s.verdicts.size(); ++i) {
        out += std::to_string(s.corpus.records[i].id);
        for (bool f : s.verdicts[i].flags) out += f ? "\t1" : "\t0";
        out += "\n";
    }
    pipeline_detail::write_text(s.out() / "categories.tsv", out);
}

inline void save_formality(const RunState& s) {
    std::string out = "id\tf_score\tfres\traw_fres\tdegenerate\n";
    for (std::size_t i = 0; i < s.formality.size(); ++i) {
        const auto& f = s.formality[i];
        out += std::to_string(s.corpus.records[i].id) + "\t" + pipeline_detail::num(f.f_score) + "\t" +
               pipeline_detail::num(f.fres) + "\t" + pipeline_detail::num(f.raw_fres) + "\t" +
               (s.formality_degenerate[i] ? "1" : "0") + "\n";
    }
    pipeline_detail::write_text(s.out() / "formality.tsv", out);
}

inline nlohmann::ordered_json to_json(const ClusterSummary& c) {
    nlohmann::ordered_json j;
    j["vocabulary"] = c.vocabulary;
    j["embedding_final_loss"] = c.embedding_final_loss;
    j["sample_size"] = c.sample_size;
    j["perplexity"] = c.perplexity;
    j["tsne_learning_rate"] = c.tsne_learning_rate;
    j["tsne_initial_kl"] = c.tsne_initial_kl;
    j["tsne_final_kl"] = c.tsne_final_kl;
    j["kmeans_objective"] = c.kmeans_objective;
    j["cluster_sizes"] = c.cluster_sizes;
    j["clickbait_cluster"] = c.clickbait_cluster;
    return j;
}

inline void save_cluster(const RunState& s) {
    save_embedding(*s.embedding, s.out() / "embedding.bin");
    std::string out = "id\tclickbait_cluster\n";
    for (std::size_t i = 0; i < s.corpus.size(); ++i)
        out += std::to_string(s.corpus.records[i].id) + "\t" + std::to_string(s.clickbait_cluster[i]) + "\n";
    pipeline_detail::write_text(s.out() / "clusters.tsv", out);
    std::string coords = "id\tx\ty\tcluster\tphase3_label\n";
    for (std::size_t k = 0; k < s.tsne_sample.size(); ++k) {
        const auto i = s.tsne_sample[k];
        const int cluster = s.clickbait_cluster[i] ? s.cluster.clickbait_cluster : 1 - s.cluster.clickbait_cluster;
        coords += std::to_string(s.corpus.records[i].id) + "\t" + pipeline_detail::num(s.tsne_coords(k, 0)) + "\t" +
                  pipeline_detail::num(s.tsne_coords(k, 1)) + "\t" + std::to_string(cluster) + "\t" +
                  std::string(to_string(*s.corpus.phases.label_at(i, Phase::cluster))) + "\n";
    }
    pipeline_detail::write_text(s.out() / "tsne.tsv", coords);
    pipeline_detail::write_text(s.out() / "cluster_summary.json", to_json(s.cluster).dump(2) + "\n");
}

inline void save_features(const RunState& s) {
    std::string out = "id\tsplit";
    for (const auto& n : s.features.names) out += "\t" + n;
    out += "\n";
    std::vector<char> is_test(s.corpus.size(), 0);
    for (auto i : s.split.test) is_test[i] = 1;
    for (std::size_t i = 0; i < s.corpus.size(); ++i) {
        out += std::to_string(s.corpus.records[i].id) + (is_test[i] ? "\ttest" : "\ttrain");
        for (double v : s.features.values.row(i)) out += "\t" + pipeline_detail::num(v);
        out += "\n";
    }
    pipeline_detail::write_text(s.out() / "features.tsv", out);
}

inline void save_models(const RunState& s) {
    fs::create_directories(s.out() / "models");
    for (const auto& m : s.models) save_model(m, (s.out() / "models" / (std::string(to_string(m.kind)) + ".json")).string());
}

/// Restores whatever earlier stages left in the output directory.
inline RunState load_state(PipelineConfig config) {
    using namespace pipeline_detail;
    RunState s = make_state(std::move(config));
    const auto dir = s.out();
    if (!fs::exists(dir / "corpus.jsonl")) throw ParameterError("no ingested corpus in " + dir.string() + "; run ingest first");
    s.corpus = load_corpus_jsonl(dir / "corpus.jsonl");
    std::map<std::int64_t, std::size_t> index;
    for (std::size_t i = 0; i < s.corpus.size(); ++i) index[s.corpus.records[i].id] = i;
    auto row_of = [&](const std::string& id, const fs::path& file) {
        const auto it = index.find(parse_int(id, file.string()));
        if (it == index.end()) throw DataError(file.string() + ": unknown id " + id);
        return it->second;
    };

    if (fs::exists(dir / "phases.tsv")) {
        const auto t = read_tsv(dir / "phases.tsv");
        for (const auto& r : t.rows) s.corpus.phases.record(row_of(r[0], dir / "phases.tsv"), parse_phase(r[1]), parse_label(r[2]));
    }
    const auto done = s.corpus.phases.completed_phases();
    if (done >= 1) {
        const auto t = read_tsv(dir / "categories.tsv");
        s.verdicts.resize(s.corpus.size());
        for (const auto& r : t.rows) {
            auto& v = s.verdicts[row_of(r[0], dir / "categories.tsv")];
            for (std::size_t c = 0; c < kCategoryCount; ++c) v.flags[c] = r.at(c + 1) == "1";
            v.label = v.flag_count() ? Label::clickbait : Label::non_clickbait;
        }
        for (std::size_t i = 0; i < s.corpus.size(); ++i) {
            s.verdicts[i].cloning_skipped = !s.corpus.records[i].body.has_value();
            s.verdicts[i].url_skipped = !s.corpus.records[i].url.has_value();
        }
    }
    if (done >= 2) {
        const auto t = read_tsv(dir / "formality.tsv");
        s.formality.resize(s.corpus.size());
        s.formality_degenerate.assign(s.corpus.size(), 0);
        for (const auto& r : t.rows) {
            const auto i = row_of(r[0], dir / "formality.tsv");
            s.formality[i] = {parse_double(r[1], "formality.tsv"), parse_double(r[2], "formality.tsv"),
                              parse_double(r[3], "formality.tsv")};
            s.formality_degenerate[i] = r[4] == "1";
        }
    }
    if (done >= 3) {
        s.embedding = load_embedding(dir / "embedding.bin");
        s.headline_vectors = Matrix(s.corpus.size(), s.embedding->dimension());
        for (std::size_t i = 0; i < s.corpus.size(); ++i) {
            const auto hv = headline_vector(*s.embedding, s.corpus.records[i]);
            std::copy(hv.values.begin(), hv.values.end(), s.headline_vectors.row(i).begin());
        }
        const auto t = read_tsv(dir / "clusters.tsv");
        s.clickbait_cluster.assign(s.corpus.size(), 0);
        for (const auto& r : t.rows) s.clickbait_cluster[row_of(r[0], dir / "clusters.tsv")] = r[1] == "1" ? 1 : 0;
        const auto j = read_json(dir / "cluster_summary.json");
        s.cluster.vocabulary = j.at("vocabulary").get<std::size_t>();
        s.cluster.embedding_final_loss = j.at("embedding_final_loss").get<double>();
        s.cluster.sample_size = j.at("sample_size").get<std::size_t>();
        s.cluster.perplexity = j.at("perplexity").get<double>();
        s.cluster.tsne_learning_rate = j.at("tsne_learning_rate").get<double>();
        s.cluster.tsne_initial_kl = j.at("tsne_initial_kl").get<double>();
        s.cluster.tsne_final_kl = j.at("tsne_final_kl").get<double>();
        s.cluster.kmeans_objective = j.at("kmeans_objective").get<double>();
        s.cluster.cluster_sizes = j.at("cluster_sizes").get<std::array<std::size_t, 2>>();
        s.cluster.clickbait_cluster = j.at("clickbait_cluster").get<int>();
    }
    return s;
}

// ---------------------------------------------------------------------------
// Stages

inline void ingest(RunState& s) {
    pipeline_detail::timed(s, "ingest", [&] {
        const auto& c = s.config.corpus;
        if (!c.jsonl.empty()) s.corpus = load_corpus_jsonl(c.jsonl);
        else if (!c.clickbait.empty() && !c.non_clickbait.empty()) s.corpus = load_corpus(c.clickbait, c.non_clickbait);
        else throw ParameterError("no corpus given: set corpus.jsonl or both corpus.clickbait and corpus.non_clickbait");
        fs::create_directories(s.out());
        write_corpus_jsonl(s.corpus, s.out() / "corpus.jsonl");
    });
}

/// Runs one categorization phase; phases must run in order.
inline PhaseSummary run_phase(RunState& s, Phase phase) {
    const auto done = s.corpus.phases.completed_phases();
    if (done != static_cast<std::size_t>(phase))
        throw ParameterError("phase '" + std::string(to_string(phase)) + "' out of order: " + std::to_string(done) +
                             " phase(s) completed");
    if (s.corpus.size() == 0) throw ParameterError("no corpus loaded");
    return pipeline_detail::timed(s, "phase_" + std::string(to_string(phase)), [&] {
        switch (phase) {
        case Phase::rules:
            s.verdicts.clear();
            for (std::size_t i = 0; i < s.corpus.size(); ++i) {
                s.verdicts.push_back(detect(s.corpus.records[i], *s.rules, *s.lexicon));
                s.corpus.phases.record(i, Phase::rules, s.verdicts.back().label);
            }
            save_categories(s);
            break;
        case Phase::formality:
            s.formality.assign(s.corpus.size(), {});
            s.formality_degenerate.assign(s.corpus.size(), 0);
            for (std::size_t i = 0; i < s.corpus.size(); ++i) {
                const Label previous = *s.corpus.phases.latest(i);
                const auto tokens = tokenize(s.corpus.records[i].text);
                const auto profile = pos_profile(tokens, *s.lexicon);
                Label label = previous;
                if (profile.degenerate()) {
                    s.formality_degenerate[i] = 1;
                } else {
                    s.formality[i] = formality_scores(profile, readability_counts(s.corpus.records[i].text, tokens));
                    label = formality_gate(s.formality[i], s.config.formality, previous);
                }
                s.corpus.phases.record(i, Phase::formality, label);
            }
            save_formality(s);
            break;
        case Phase::cluster: {
            const auto vocab = build_vocab(s.corpus, s.config.embedding.min_count);
            s.embedding = train_skipgram(s.corpus, vocab, s.config.embedding);
            s.headline_vectors = Matrix(s.corpus.size(), s.embedding->dimension());
            for (std::size_t i = 0; i < s.corpus.size(); ++i) {
                const auto hv = headline_vector(*s.embedding, s.corpus.records[i]);
                std::copy(hv.values.begin(), hv.values.end(), s.headline_vectors.row(i).begin());
            }
            std::vector<Label> previous(s.corpus.size());
            for (std::size_t i = 0; i < s.corpus.size(); ++i) previous[i] = *s.corpus.phases.latest(i);
            auto clustering = cluster_headlines(s.headline_vectors, previous, s.config.tsne, s.config.tsne_sample_cap,
                                                s.config.kmeans_restarts);
            recategorize(s.corpus.phases, clustering.assignment);
            const int cb = clustering.assignment.label_of[0] == Label::clickbait ? 0 : 1;
            s.clickbait_cluster.assign(s.corpus.size(), 0);
            s.cluster = {};
            for (std::size_t i = 0; i < s.corpus.size(); ++i) {
                const int c = clustering.assignment.cluster[i];
                ++s.cluster.cluster_sizes[static_cast<std::size_t>(c)];
                s.clickbait_cluster[i] = c == cb ? 1 : 0;
            }
            s.cluster.vocabulary = vocab.size();
            s.cluster.embedding_final_loss = s.embedding->epoch_loss.empty() ? 0.0 : s.embedding->epoch_loss.back();
            s.cluster.sample_size = clustering.sample.size();
            s.cluster.perplexity = clustering.embedding.perplexity;
            s.cluster.tsne_learning_rate = clustering.embedding.learning_rate;
            s.cluster.tsne_initial_kl = clustering.embedding.kl_history.front();
            s.cluster.tsne_final_kl = clustering.embedding.final_kl;
            s.cluster.kmeans_objective = clustering.assignment.objective;
            s.cluster.clickbait_cluster = cb;
            s.tsne_sample = std::move(clustering.sample);
            s.tsne_coords = std::move(clustering.embedding.coords);
            save_cluster(s);
            break;
        }
        }
        save_phases(s);
        return summarize_phase(s.corpus, phase);
    });
}

// ---------------------------------------------------------------------------
// Features

namespace pipeline_detail {

struct MarkCounts {
    double exclamation = 0, question = 0, other = 0, words = 0;
};

inline MarkCounts marks(std::string_view text) {
    MarkCounts m;
    for (const auto& t : tokenize(text)) {
        if (t.kind == TokenKind::word || t.kind == TokenKind::number) {
            m.words += 1;
        } else if (t.kind == TokenKind::punctuation) {
            for (std::size_t i = 0; i < t.surface.size();) {
                const auto len = std::max<std::size_t>(1, text_detail::utf8_length(static_cast<unsigned char>(t.surface[i])));
                if (t.surface[i] == '!') m.exclamation += 1;
                else if (t.surface[i] == '?') m.question += 1;
                else m.other += 1;
                i += len;
            }
        }
    }
    return m;
}

} // namespace pipeline_detail

/// Integrated feature table over all records (requires all three phases).
inline FeatureTable build_features(const RunState& s) {
    pipeline_detail::require_phases(s, 3, "feature construction");
    FeatureTable t;
    auto column = [&](std::string name, FeatureGroup g, bool binary) {
        t.names.push_back(std::move(name));
        t.group_of.push_back(g);
        t.binary.push_back(binary);
    };
    for (auto k : kCategoryKeys) column("flag_" + std::string(k), FeatureGroup::flags, true);
    column("f_score", FeatureGroup::formality, false);
    column("fres", FeatureGroup::formality, false);
    column("exclamation_marks", FeatureGroup::marks_length, false);
    column("question_marks", FeatureGroup::marks_length, false);
    column("other_punctuation", FeatureGroup::marks_length, false);
    column("length_words", FeatureGroup::marks_length, false);
    const std::size_t d = s.headline_vectors.cols();
    for (std::size_t k = 0; k < d; ++k) column("embedding_" + std::to_string(k), FeatureGroup::embedding, false);
    column("cluster", FeatureGroup::cluster, true);

    t.values = Matrix(s.corpus.size(), t.names.size());
    for (std::size_t i = 0; i < s.corpus.size(); ++i) {
        auto row = t.values.row(i);
        std::size_t c = 0;
        for (bool f : s.verdicts[i].flags) row[c++] = f ? 1.0 : 0.0;
        row[c++] = s.formality[i].f_score;
        row[c++] = s.formality[i].fres;
        const auto m = pipeline_detail::marks(s.corpus.records[i].text);
        row[c++] = m.exclamation;
        row[c++] = m.question;
        row[c++] = m.other;
        row[c++] = m.words;
        for (std::size_t k = 0; k < d; ++k) row[c++] = s.headline_vectors(i, k);
        row[c++] = static_cast<double>(s.clickbait_cluster[i]);
    }
    return t;
}

namespace pipeline_detail {

inline FeatureTable rows_of(const FeatureTable& t, const std::vector<std::size_t>& rows) {
    FeatureTable out = t;
    out.values = t.values.select_rows(rows);
    return out;
}

inline std::vector<Label> gold_of(const Corpus& c, const std::vector<std::size_t>& rows) {
    std::vector<Label> y;
    for (auto i : rows) y.push_back(c.records[i].gold_label);
    return y;
}

inline std::vector<EvaluationReport> train_and_evaluate(const RunState& s, const FeatureMask& mask,
                                                        std::vector<TrainedModel>* keep) {
    const auto train = rows_of(s.features, s.split.train);
    const auto test = rows_of(s.features, s.split.test);
    const auto y_train = gold_of(s.corpus, s.split.train);
    const auto y_test = gold_of(s.corpus, s.split.test);
    const auto test_view = test.select(mask);
    std::vector<EvaluationReport> out;
    for (ModelKind kind : kAllModelKinds) {
        auto model = train_model(kind, train, y_train, mask, s.config.learners);
        out.push_back(evaluate_model(model, test_view.values, y_test, s.config.reliability_bins));
        if (keep) keep->push_back(std::move(model));
    }
    return out;
}

} // namespace pipeline_detail

/// Builds features, splits, trains the three classifiers under the
/// configured feature mask and saves them.
inline void train_models(RunState& s) {
    pipeline_detail::timed(s, "train", [&] {
        s.features = build_features(s);
        s.split = split_indices(s.corpus, s.config.test_fraction, s.config.seed);
        save_features(s);
        const auto train_rows = pipeline_detail::rows_of(s.features, s.split.train);
        const auto y = pipeline_detail::gold_of(s.corpus, s.split.train);
        s.models.clear();
        for (ModelKind kind : kAllModelKinds)
            s.models.push_back(train_model(kind, train_rows, y, s.config.feature_mask, s.config.learners));
        save_models(s);
    });
}

inline nlohmann::ordered_json evaluations_json(const std::vector<EvaluationReport>& evals) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& e : evals) out.push_back(nlohmann::ordered_json::parse(to_json(e).dump()));
    return out;
}

/// Scores the held-out split with the trained models.
inline void evaluate(RunState& s) {
    pipeline_detail::timed(s, "evaluate", [&] {
        if (s.models.empty()) throw ParameterError("no trained models; run train first");
        const auto test = pipeline_detail::rows_of(s.features, s.split.test);
        const auto y = pipeline_detail::gold_of(s.corpus, s.split.test);
        s.evaluation.clear();
        for (const auto& m : s.models)
            s.evaluation.push_back(evaluate_model(m, test.select(m.mask).values, y, s.config.reliability_bins));
        pipeline_detail::write_text(s.out() / "evaluation.json", evaluations_json(s.evaluation).dump(2) + "\n");
    });
}

/// Each group on its own, then all groups together, for every classifier.
inline void run_ablation(RunState& s, const std::vector<FeatureGroup>& groups) {
    if (groups.empty()) throw ParameterError("ablation needs at least one feature group");
    pipeline_detail::timed(s, "ablate", [&] {
        if (s.features.values.empty()) {
            s.features = build_features(s);
            s.split = split_indices(s.corpus, s.config.test_fraction, s.config.seed);
        }
        s.ablation.clear();
        for (FeatureGroup g : groups) s.ablation.push_back({FeatureMask{g}, pipeline_detail::train_and_evaluate(s, FeatureMask{g}, nullptr)});
        s.ablation.push_back({FeatureMask::all(), pipeline_detail::train_and_evaluate(s, FeatureMask::all(), nullptr)});
        nlohmann::ordered_json out = nlohmann::ordered_json::array();
        for (const auto& a : s.ablation) out.push_back({{"feature_groups", a.mask.str()}, {"evaluations", evaluations_json(a.evaluations)}});
        pipeline_detail::write_text(s.out() / "ablation.json", out.dump(2) + "\n");
    });
}

// ---------------------------------------------------------------------------
// Report

inline nlohmann::ordered_json to_json(const PhaseSummary& p) {
    return {{"phase", to_string(p.phase)},
            {"clickbait", p.clickbait},
            {"non_clickbait", p.non_clickbait},
            {"changed", p.changed},
            {"changed_fraction", p.changed_fraction()}};
}

struct Recategorization {
    std::size_t formality_changed = 0;
    std::size_t cluster_changed = 0;
    std::size_t any_changed = 0; // changed in the formality or the cluster phase
    std::size_t total = 0;
    double fraction() const { return total ? static_cast<double>(any_changed) / static_cast<double>(total) : 0.0; }
};

inline Recategorization recategorization(const Corpus& c) {
    Recategorization r;
    r.total = c.size();
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& list = c.phases.of(i);
        const bool f = list.size() > 1 && list[1].changed;
        const bool k = list.size() > 2 && list[2].changed;
        r.formality_changed += f;
        r.cluster_changed += k;
        r.any_changed += f || k;
    }
    return r;
}

/// Report body: every number is recomputable from the persisted
/// intermediates. Only the "timing" member varies between identical runs.
inline nlohmann::ordered_json build_report(const RunState& s) {
    nlohmann::ordered_json r;
    r["format"] = "clickbait-report";
    r["version"] = 1;
    r["config"] = to_json(s.config);
    r["corpus"] = {{"fingerprint", fingerprint(s.corpus)},
                   {"records", s.corpus.size()},
                   {"clickbait", s.corpus.count(Label::clickbait)},
                   {"non_clickbait", s.corpus.count(Label::non_clickbait)},
                   {"skipped_lines", s.corpus.skipped_lines},
                   {"train", s.split.train.size()},
                   {"test", s.split.test.size()}};
    nlohmann::ordered_json phases = nlohmann::ordered_json::array();
    const auto done = s.corpus.phases.completed_phases();
    for (std::size_t p = 0; p < done; ++p) phases.push_back(to_json(summarize_phase(s.corpus, static_cast<Phase>(p))));
    r["phases"] = phases;
    const auto rc = recategorization(s.corpus);
    r["recategorization"] = {{"formality_changed", rc.formality_changed},
                             {"cluster_changed", rc.cluster_changed},
                             {"changed", rc.any_changed},
                             {"fraction", rc.fraction()}};
    if (done >= 3) r["clustering"] = to_json(s.cluster);
    if (!s.verdicts.empty()) {
        const auto stats = category_stats(s.corpus, s.verdicts);
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < kCategoryCount; ++c) {
            const auto& row = stats.rows[c];
            const auto p = row.precision();
            rows.push_back({{"no", c + 1},
                            {"category", title(row.id)},
                            {"key", key(row.id)},
                            {"flagged", row.flagged},
                            {"flagged_clickbait", row.flagged_clickbait},
                            {"precision", p ? nlohmann::ordered_json(*p) : nlohmann::ordered_json()}});
        }
        r["categories"] = {{"records", stats.records},
                           {"labeled_clickbait", stats.labeled_clickbait},
                           {"cloning_skipped", stats.cloning_skipped},
                           {"url_skipped", stats.url_skipped},
                           {"rows", rows}};
    }
    r["evaluation"] = evaluations_json(s.evaluation);
    nlohmann::ordered_json ablation = nlohmann::ordered_json::array();
    for (const auto& a : s.ablation) ablation.push_back({{"feature_groups", a.mask.str()}, {"evaluations", evaluations_json(a.evaluations)}});
    r["ablation"] = ablation;
    r["timing"] = s.timing;
    return r;
}

inline void write_report(const RunState& s) {
    pipeline_detail::write_text(s.out() / "report.json", build_report(s).dump(2) + "\n");
}

inline std::vector<fs::path> plot(RunState& s) {
    return pipeline_detail::timed(s, "plot", [&] { return write_plots(s.evaluation, s.out() / "plots"); });
}

/// Evaluation reports read back from a report or evaluation file.
inline std::vector<EvaluationReport> load_evaluations(const fs::path& path) {
    const auto j = pipeline_detail::read_json(path);
    const auto& list = j.is_array() ? j : j.at("evaluation");
    std::vector<EvaluationReport> out;
    try {
        for (const auto& e : list) out.push_back(evaluation_from_json(nlohmann::json::parse(e.dump())));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return out;
}

/// Rebuilds features and the split, then reads saved models and evaluation
/// outputs, for stage commands that resume from the output directory.
inline void load_outputs(RunState& s) {
    if (s.corpus.phases.completed_phases() < 3) return;
    s.features = build_features(s);
    s.split = split_indices(s.corpus, s.config.test_fraction, s.config.seed);
    s.models.clear();
    for (ModelKind kind : kAllModelKinds) {
        const auto path = s.out() / "models" / (std::string(to_string(kind)) + ".json");
        if (fs::exists(path)) s.models.push_back(load_model(path.string()));
    }
    if (fs::exists(s.out() / "evaluation.json")) s.evaluation = load_evaluations(s.out() / "evaluation.json");
    if (fs::exists(s.out() / "ablation.json")) {
        const auto j = pipeline_detail::read_json(s.out() / "ablation.json");
        s.ablation.clear();
        try {
            for (const auto& a : j) {
                AblationEntry entry{FeatureMask::parse(a.at("feature_groups").get<std::string>()), {}};
                for (const auto& e : a.at("evaluations"))
                    entry.evaluations.push_back(evaluation_from_json(nlohmann::json::parse(e.dump())));
                s.ablation.push_back(std::move(entry));
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError("ablation.json: " + std::string(e.what()));
        }
    }
}

/// All stages end to end; returns the report body.
inline nlohmann::ordered_json run_all(RunState& s) {
    ingest(s);
    run_phase(s, Phase::rules);
    run_phase(s, Phase::formality);
    run_phase(s, Phase::cluster);
    train_models(s);
    evaluate(s);
    run_ablation(s, s.config.ablation_groups);
    plot(s);
    write_report(s);
    return build_report(s);
}

} // namespace clickbait

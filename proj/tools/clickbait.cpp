#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "clickbait/clickbait.hpp"

namespace cb = clickbait;

namespace {

struct Options {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> out_dir;
    std::optional<std::string> clickbait_file, non_clickbait_file, jsonl_file, rules_file, lexicon_dir;
    std::optional<double> test_fraction;
    std::optional<std::string> feature_groups;
    std::vector<std::string> overrides; // section.key=value
};

// Sets a dotted path in a JSON object; the value is parsed as JSON when possible.
void apply_override(nlohmann::json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw cb::ParameterError("--set expects key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
        value = raw;
    }
    nlohmann::json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

cb::PipelineConfig resolve(const Options& o) {
    cb::PipelineConfig config;
    if (!o.config_file.empty()) config = cb::load_config(o.config_file);
    nlohmann::json flags = nlohmann::json::object();
    if (o.seed) flags["seed"] = *o.seed;
    if (o.threads) flags["threads"] = *o.threads;
    if (o.out_dir) flags["out_dir"] = *o.out_dir;
    if (o.clickbait_file) flags["corpus"]["clickbait"] = *o.clickbait_file;
    if (o.non_clickbait_file) flags["corpus"]["non_clickbait"] = *o.non_clickbait_file;
    if (o.jsonl_file) flags["corpus"]["jsonl"] = *o.jsonl_file;
    if (o.rules_file) flags["rules"] = *o.rules_file;
    if (o.lexicon_dir) flags["lexicon_dir"] = *o.lexicon_dir;
    if (o.test_fraction) flags["test_fraction"] = *o.test_fraction;
    if (o.feature_groups) flags["feature_groups"] = *o.feature_groups;
    for (const auto& s : o.overrides) apply_override(flags, s);
    return cb::config_from_json(flags, config);
}

void print_phase(const cb::PhaseSummary& s) {
    std::printf("phase %-9s clickbait=%zu non_clickbait=%zu changed=%zu (%.4f)\n", std::string(cb::to_string(s.phase)).c_str(),
                s.clickbait, s.non_clickbait, s.changed, s.changed_fraction());
}

void print_evaluations(const std::vector<cb::EvaluationReport>& evals) {
    for (const auto& e : evals)
        std::printf("%-7s groups=%-40s auc=%.4f accuracy=%.4f f1=%.4f\n", std::string(cb::to_string(e.kind)).c_str(),
                    e.mask.str().c_str(), e.curve.auc, e.matrix.accuracy(), e.matrix.f1());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clickbait headline detection pipeline"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config_file, "JSON config file; flags override it");
    app.add_option("--seed", o.seed, "Master seed for every stochastic stage");
    app.add_option("--threads", o.threads, "Worker threads (1 is the reproducibility reference)");
    app.add_option("--out-dir", o.out_dir, "Directory for intermediates, models, report and plots");
    app.add_option("--clickbait", o.clickbait_file, "Clickbait headlines, one per line");
    app.add_option("--non-clickbait", o.non_clickbait_file, "Non-clickbait headlines, one per line");
    app.add_option("--jsonl", o.jsonl_file, "Corpus as JSON lines (id, text, label, body, url)");
    app.add_option("--rules", o.rules_file, "Category rules file (default: built in)");
    app.add_option("--lexicon-dir", o.lexicon_dir, "Directory of lexicon word lists (default: built in)");
    app.add_option("--test-fraction", o.test_fraction, "Held-out fraction for evaluation");
    app.add_option("--feature-groups", o.feature_groups,
                   "Comma list of flags,formality,marks_length,embedding,cluster or 'all'");
    app.add_option("--set", o.overrides, "Override any config key, e.g. --set tsne.iterations=500")->take_all();

    auto* ingest = app.add_subcommand("ingest", "Load the raw corpus into the output directory");
    std::string phase_name;
    auto* phase = app.add_subcommand("phase", "Run one categorization phase (rules, formality, cluster)");
    phase->add_option("name", phase_name, "Phase to run")->required()->check(CLI::IsMember({"rules", "formality", "cluster"}));
    auto* train = app.add_subcommand("train", "Build features and train the three classifiers");
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate trained classifiers on the held-out split");
    std::string groups;
    auto* ablate = app.add_subcommand("ablate", "Evaluate each feature group alone and all together");
    ablate->add_option("--groups", groups, "Comma list of groups (default: all five)");
    auto* run_all = app.add_subcommand("run-all", "Run every stage end to end");
    std::string from;
    auto* plot = app.add_subcommand("plot", "Render plots from a report or evaluation file");
    plot->add_option("--from", from, "Report or evaluation JSON (default: <out-dir>/report.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        cb::PipelineConfig config = resolve(o);
        if (*ingest) {
            auto s = cb::make_state(config);
            cb::ingest(s);
            std::printf("ingested %zu records (%zu clickbait, %zu non-clickbait, %zu lines skipped) into %s\n",
                        s.corpus.size(), s.corpus.count(cb::Label::clickbait), s.corpus.count(cb::Label::non_clickbait),
                        s.corpus.skipped_lines, s.out().string().c_str());
            cb::write_report(s);
        } else if (*phase) {
            auto s = cb::load_state(config);
            print_phase(cb::run_phase(s, cb::parse_phase(phase_name)));
            cb::write_report(s);
        } else if (*train) {
            auto s = cb::load_state(config);
            cb::train_models(s);
            std::printf("trained %zu models on %zu rows (%zu features) into %s\n", s.models.size(), s.split.train.size(),
                        s.models.front().dimension(), (s.out() / "models").string().c_str());
            cb::write_report(s);
        } else if (*evaluate) {
            auto s = cb::load_state(config);
            cb::load_outputs(s);
            cb::evaluate(s);
            print_evaluations(s.evaluation);
            cb::write_report(s);
        } else if (*ablate) {
            auto s = cb::load_state(config);
            cb::load_outputs(s);
            std::vector<cb::FeatureGroup> list = config.ablation_groups;
            if (!groups.empty()) list = cb::FeatureMask::parse(groups).groups();
            cb::run_ablation(s, list);
            for (const auto& a : s.ablation) print_evaluations(a.evaluations);
            cb::write_report(s);
        } else if (*run_all) {
            auto s = cb::make_state(config);
            const auto report = cb::run_all(s);
            for (const auto& p : report.at("phases")) {
                std::printf("phase %-9s clickbait=%s non_clickbait=%s changed=%s\n", p.at("phase").get<std::string>().c_str(),
                            p.at("clickbait").dump().c_str(), p.at("non_clickbait").dump().c_str(), p.at("changed").dump().c_str());
            }
            std::printf("recategorization fraction %.4f\n", report.at("recategorization").at("fraction").get<double>());
            print_evaluations(s.evaluation);
            std::printf("report written to %s\n", (s.out() / "report.json").string().c_str());
        } else if (*plot) {
            const cb::fs::path source = from.empty() ? cb::fs::path(config.out_dir) / "report.json" : cb::fs::path(from);
            const auto evals = cb::load_evaluations(source);
            const auto files = cb::write_plots(evals, cb::fs::path(config.out_dir) / "plots");
            std::printf("wrote %zu plot files to %s\n", files.size(), (cb::fs::path(config.out_dir) / "plots").string().c_str());
        }
    } catch (const cb::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}

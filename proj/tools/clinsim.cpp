// Command-line front end for the simulation and evaluation pipeline.
//
//   clinsim simulate      run a conversation campaign from a cohort
//   clinsim closure-label label transcripts with closure reasonableness
//   clinsim judge         score transcripts against a rubric catalog
//   clinsim report        export the release-artifact CSV set
//   clinsim summary       print per-model conversation statistics
//   clinsim gen-cohort    generate the synthetic 366-patient cohort
//   clinsim validate-cohort check a cohort directory against the task matrix
//   clinsim align         merge human ratings and print agreement stats

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "clinsim/clinsim.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_simulate(const std::string& cohort_dir, const std::string& models_file, int repeats,
                 const std::string& out_dir, int parallelism_override, int cap_override) {
    clinsim::Cohort cohort = clinsim::load_cohort(cohort_dir);
    clinsim::CampaignStack stack = clinsim::load_campaign_stack(models_file);
    if (repeats > 0) stack.campaign.repeats = repeats;
    if (parallelism_override > 0) stack.campaign.parallelism = parallelism_override;
    if (cap_override > 0) stack.campaign.cap = cap_override;

    clinsim::CampaignResult result =
        clinsim::run_campaign(cohort, stack.models, stack.patient_backends, *stack.embedder,
                              stack.patient_config, stack.campaign);

    const fs::path out(out_dir);
    fs::create_directories(out / "transcripts");
    for (const auto& t : result.transcripts)
        clinsim::save_transcript(t, out / "transcripts" / (t.conversation_id + ".jsonl"));
    clinsim::write_campaign_manifest(result, stack.models, stack.campaign,
                                     out / "campaign_manifest.txt");

    std::printf("conversations: %zu\ncompleted: %zu\nfailed: %zu\n", result.transcripts.size(),
                result.transcripts.size() - result.failures.size(), result.failures.size());
    for (const auto& f : result.failures)
        std::fprintf(stderr, "failed %s at stage %s: %s\n", f.conversation_id.c_str(),
                     f.stage.c_str(), f.message.c_str());
    return 0;
}

int cmd_closure_label(const std::string& in_dir, const std::string& models_file) {
    std::unique_ptr<clinsim::Backend> fallback;
    clinsim::Backend* classifier = nullptr;
    clinsim::CampaignStack stack;
    if (!models_file.empty()) {
        stack = clinsim::load_campaign_stack(models_file);
        classifier = stack.closure_classifier;
        if (!classifier) {
            std::fprintf(stderr, "config %s declares no closure_classifier\n",
                         models_file.c_str());
            return 1;
        }
    } else {
        // Built-in deterministic heuristic: a conversation that was explicitly
        // closed counts as reasonably concluded, a truncated or failed one not.
        fallback = std::make_unique<clinsim::ScriptedClassifierBackend>(
            clinsim::ScriptedClassifierBackend::keyword("closed_by"));
        classifier = fallback.get();
    }

    std::size_t labeled = 0, unlabeled = 0;
    for (auto& t : clinsim::load_transcripts(in_dir)) {
        t.closure_reasonable = clinsim::classify_closure(t, *classifier);
        (t.closure_reasonable.has_value() ? labeled : unlabeled) += 1;
        clinsim::save_transcript(t, fs::path(in_dir) / (t.conversation_id + ".jsonl"));
    }
    std::printf("labeled: %zu\nunlabeled: %zu\n", labeled, unlabeled);
    return 0;
}

int cmd_judge(const std::string& transcripts_dir, const std::string& catalog_file,
              const std::string& out_dir, const std::string& models_file, int parallelism) {
    const clinsim::RubricCatalog catalog = clinsim::load_catalog(catalog_file);
    std::unique_ptr<clinsim::Backend> fallback;
    clinsim::Backend* judge = nullptr;
    clinsim::CampaignStack stack;
    clinsim::JudgeConfig config;
    if (!models_file.empty()) {
        stack = clinsim::load_campaign_stack(models_file);
        judge = stack.judge;
        config = stack.judge_config;
        if (!judge) {
            std::fprintf(stderr, "config %s declares no judge backend\n", models_file.c_str());
            return 1;
        }
    } else {
        fallback = std::make_unique<clinsim::ScriptedJudgeBackend>(0);
        judge = fallback.get();
        std::fprintf(stderr, "no --models config given; using the built-in scripted judge\n");
    }
    if (parallelism > 0) config.parallelism = parallelism;

    const std::vector<clinsim::Transcript> transcripts =
        clinsim::load_transcripts(transcripts_dir);
    clinsim::JudgeResult result =
        clinsim::judge_transcripts(transcripts, catalog, *judge, config);
    clinsim::write_score_store(result, out_dir);

    std::printf("transcripts: %zu\nscores: %zu\nfailures: %zu\ndiscussions: %zu\n",
                transcripts.size(), result.scores.size(), result.failures.size(),
                result.discussions.size());
    for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return 0;
}

int cmd_report(const std::string& scores_dir, const std::string& catalog_file,
               const std::string& out_dir, std::string transcripts_dir,
               const std::string& cohort_dir) {
    const clinsim::RubricCatalog catalog = clinsim::load_catalog(catalog_file);
    const clinsim::JudgeResult judge = clinsim::load_score_store(scores_dir);

    if (transcripts_dir.empty()) {
        // Campaign-directory convention: scores and transcripts side by side.
        for (const fs::path candidate : {fs::path(scores_dir) / "transcripts",
                                         fs::path(scores_dir).parent_path() / "transcripts"}) {
            if (fs::is_directory(candidate)) {
                transcripts_dir = candidate.string();
                break;
            }
        }
        if (transcripts_dir.empty()) {
            std::fprintf(stderr,
                         "cannot locate transcripts next to %s; pass --transcripts DIR\n",
                         scores_dir.c_str());
            return 1;
        }
    }
    const std::vector<clinsim::Transcript> transcripts =
        clinsim::load_transcripts(transcripts_dir);

    clinsim::Cohort cohort;
    const clinsim::Cohort* cohort_ptr = nullptr;
    if (!cohort_dir.empty()) {
        cohort = clinsim::load_cohort(cohort_dir);
        cohort_ptr = &cohort;
    }

    const auto written =
        clinsim::export_artifacts(transcripts, judge, catalog, cohort_ptr, out_dir);
    {
        const fs::path path = fs::path(out_dir) / "campaign_summary.csv";
        clinsim::CsvWriter w(path.string(), {"model_id", "conversations", "median_length",
                                             "p20_length", "p80_length", "cap_reached",
                                             "failed"});
        for (const auto& r : clinsim::summarize_campaign(transcripts)) {
            char median[32];
            std::snprintf(median, sizeof(median), "%.1f", r.median_length);
            w.write_row({r.model_id, std::to_string(r.conversations), median,
                         std::to_string(r.p20_length), std::to_string(r.p80_length),
                         std::to_string(r.cap_reached), std::to_string(r.failed)});
        }
    }
    for (const auto& p : written) std::printf("wrote %s\n", p.string().c_str());
    std::printf("wrote %s\n", (fs::path(out_dir) / "campaign_summary.csv").string().c_str());
    return 0;
}

int cmd_summary(const std::string& transcripts_dir) {
    const auto transcripts = clinsim::load_transcripts(transcripts_dir);
    if (transcripts.empty()) {
        std::fprintf(stderr, "no transcripts in %s\n", transcripts_dir.c_str());
        return 1;
    }
    std::fputs(clinsim::render_summary(clinsim::summarize_campaign(transcripts)).c_str(),
               stdout);
    return 0;
}

int cmd_gen_cohort(const std::string& out_dir, std::uint64_t seed,
                   const std::string& encounter_date) {
    clinsim::CohortGenConfig config;
    config.seed = seed;
    if (!encounter_date.empty()) config.encounter_date = encounter_date;
    const clinsim::Cohort cohort = clinsim::generate_cohort(config);
    clinsim::write_cohort(cohort, out_dir);
    std::printf("wrote %zu packets to %s\n", cohort.packets.size(), out_dir.c_str());
    return 0;
}

int cmd_validate_cohort(const std::string& cohort_dir, bool expect_full) {
    const clinsim::Cohort cohort = clinsim::load_cohort(cohort_dir);
    const auto violations = clinsim::validate_cohort(cohort.packets);
    for (const auto& v : violations)
        std::fprintf(stderr, "violation: %s %s: %s\n", v.patient_id.c_str(), v.field.c_str(),
                     v.message.c_str());

    const auto counts = clinsim::cell_counts(cohort);
    int total = 0;
    for (const auto& [cell, count] : counts) {
        std::printf("%s / %s: %d\n", cell.first.c_str(), cell.second.c_str(), count);
        total += count;
    }
    std::printf("total: %d\n", total);

    if (expect_full) {
        for (std::size_t r = 0; r < clinsim::kReasonCount; ++r)
            for (std::size_t o = 0; o < clinsim::kObjectiveCount; ++o) {
                const int expected = clinsim::kCellPatientCounts[r][o];
                if (expected == 0) continue;
                const auto it = counts.find({std::string(clinsim::kReasonIds[r]),
                                             std::string(clinsim::kObjectiveIds[o])});
                const int got = it == counts.end() ? 0 : it->second;
                if (got != expected) {
                    std::fprintf(stderr, "cell %s/%s has %d patients, expected %d\n",
                                 std::string(clinsim::kReasonIds[r]).c_str(),
                                 std::string(clinsim::kObjectiveIds[o]).c_str(), got, expected);
                    return 1;
                }
            }
        if (total != 366) {
            std::fprintf(stderr, "cohort has %d patients, expected 366\n", total);
            return 1;
        }
        std::printf("matrix: ok\n");
    }
    return violations.empty() ? 0 : 1;
}

int cmd_align(const std::string& scores_dir, const std::string& human_file) {
    const clinsim::JudgeResult existing = clinsim::load_score_store(scores_dir);

    std::ifstream in(human_file);
    if (!in) {
        std::fprintf(stderr, "cannot read %s\n", human_file.c_str());
        return 1;
    }
    std::vector<clinsim::DimensionScore> human;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        clinsim::DimensionScore s;
        s.conversation_id = j.at("conversation_id").get<std::string>();
        s.dimension_id = j.at("dimension_id").get<std::string>();
        s.model_id = j.value("model_id", "");
        s.raw = j.at("raw").get<int>();
        s.normalized = clinsim::normalize_score(s.raw);
        s.rationale = j.value("rationale", "");
        s.source = clinsim::ScoreSource::Human;
        human.push_back(std::move(s));
    }

    const clinsim::MergedScores merged = clinsim::ingest_human_scores(human, existing.scores);
    std::printf("ai scores: %zu\nhuman scores: %zu\noverlap: %zu\n", existing.scores.size(),
                human.size(), merged.agreement.overlap);
    if (merged.agreement.overlap > 0)
        std::printf("exact_match_rate: %.6f\nmean_abs_raw_diff: %.6f\n",
                    merged.agreement.exact_match_rate, merged.agreement.mean_abs_diff);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patient-conversation simulation and evaluation harness"};
    app.require_subcommand(1);

    std::string cohort_dir, models_file, out_dir, in_dir, transcripts_dir, catalog_file,
        scores_dir, human_file, encounter_date;
    int repeats = 0, parallelism = 0, cap = 0;
    std::uint64_t seed = 24061;
    bool expect_full = false;

    auto* simulate = app.add_subcommand("simulate", "Run a conversation campaign");
    simulate->add_option("--cohort", cohort_dir, "Cohort directory")->required();
    simulate->add_option("--models", models_file, "Campaign config file")->required();
    simulate->add_option("--repeats", repeats, "Conversations per (model, patient)");
    simulate->add_option("--out", out_dir, "Output directory")->required();
    simulate->add_option("--parallelism", parallelism, "Worker threads");
    simulate->add_option("--cap", cap, "Message cap override");

    auto* closure = app.add_subcommand("closure-label", "Label closure reasonableness");
    closure->add_option("--in", in_dir, "Transcript directory")->required();
    closure->add_option("--models", models_file, "Campaign config with closure_classifier");

    auto* judge = app.add_subcommand("judge", "Score transcripts against a catalog");
    judge->add_option("--transcripts", transcripts_dir, "Transcript directory")->required();
    judge->add_option("--catalog", catalog_file, "Rubric catalog file")->required();
    judge->add_option("--out", out_dir, "Output directory")->required();
    judge->add_option("--models", models_file, "Campaign config with judge backend");
    judge->add_option("--parallelism", parallelism, "Worker threads");

    auto* report = app.add_subcommand("report", "Export the release-artifact CSV set");
    report->add_option("--scores", scores_dir, "Score-store directory")->required();
    report->add_option("--catalog", catalog_file, "Rubric catalog file")->required();
    report->add_option("--out", out_dir, "Output directory")->required();
    report->add_option("--transcripts", transcripts_dir, "Transcript directory");
    report->add_option("--cohort", cohort_dir, "Cohort directory for demographics");

    auto* summary = app.add_subcommand("summary", "Print per-model statistics");
    summary->add_option("--transcripts", transcripts_dir, "Transcript directory")->required();

    auto* gen = app.add_subcommand("gen-cohort", "Generate the synthetic cohort");
    gen->add_option("--out", out_dir, "Output directory")->required();
    gen->add_option("--seed", seed, "Generator seed");
    gen->add_option("--encounter-date", encounter_date, "Encounter timestamp (ISO-8601)");

    auto* validate = app.add_subcommand("validate-cohort", "Check a cohort directory");
    validate->add_option("--cohort", cohort_dir, "Cohort directory")->required();
    validate->add_flag("--expect-full", expect_full, "Require the full 366-patient matrix");

    auto* align = app.add_subcommand("align", "Merge human ratings, print agreement");
    align->add_option("--scores", scores_dir, "Score-store directory")->required();
    align->add_option("--human", human_file, "Human scores (JSONL)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            return cmd_simulate(cohort_dir, models_file, repeats, out_dir, parallelism, cap);
        if (closure->parsed()) return cmd_closure_label(in_dir, models_file);
        if (judge->parsed())
            return cmd_judge(transcripts_dir, catalog_file, out_dir, models_file, parallelism);
        if (report->parsed())
            return cmd_report(scores_dir, catalog_file, out_dir, transcripts_dir, cohort_dir);
        if (summary->parsed()) return cmd_summary(transcripts_dir);
        if (gen->parsed()) return cmd_gen_cohort(out_dir, seed, encounter_date);
        if (validate->parsed()) return cmd_validate_cohort(cohort_dir, expect_full);
        if (align->parsed()) return cmd_align(scores_dir, human_file);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

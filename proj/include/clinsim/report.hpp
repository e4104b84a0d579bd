#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "clinsim/cohort.hpp"
#include "clinsim/csv.hpp"
#include "clinsim/judge.hpp"
#include "clinsim/orchestrator.hpp"
#include "clinsim/rubric.hpp"

// Aggregation and the released-artifact exports. Everything here is a pure
// function of its inputs; identical inputs give byte-identical files.

namespace clinsim {

enum class AggregateLevel { Dimension, Category, MetaCategory };

inline const char* to_string(AggregateLevel l) {
    switch (l) {
        case AggregateLevel::Dimension: return "dimension";
        case AggregateLevel::Category: return "category";
        case AggregateLevel::MetaCategory: return "meta_category";
    }
    return "dimension";
}

struct AggregateRow {
    std::string model_id;
    AggregateLevel level = AggregateLevel::Dimension;
    std::string key;
    double mean_normalized = 0.0;
    std::size_t n = 0;
};

/// Unweighted mean of normalized scores grouped by (model, key). The key is
/// the dimension id, its category, or its meta-category depending on level;
/// every contributing score counts once, so category means weight scores,
/// not dimensions.
inline std::vector<AggregateRow> aggregate(const std::vector<DimensionScore>& scores,
                                           const RubricCatalog& catalog, AggregateLevel level) {
    std::vector<const DimensionScore*> ordered;
    ordered.reserve(scores.size());
    for (const auto& s : scores) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const DimensionScore* a, const DimensionScore* b) {
                  if (a->model_id != b->model_id) return a->model_id < b->model_id;
                  if (a->conversation_id != b->conversation_id)
                      return a->conversation_id < b->conversation_id;
                  return a->dimension_id < b->dimension_id;
              });

    std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> groups;
    for (const DimensionScore* s : ordered) {
        const DimensionSpec* dim = catalog.find_dimension(s->dimension_id);
        if (!dim) throw ValidationError("score references unknown dimension: " + s->dimension_id);
        std::string key;
        switch (level) {
            case AggregateLevel::Dimension: key = dim->dimension_id; break;
            case AggregateLevel::Category: key = dim->category; break;
            case AggregateLevel::MetaCategory: key = catalog.meta_map.at(dim->category); break;
        }
        auto& acc = groups[{s->model_id, key}];
        acc.first += s->normalized;
        acc.second += 1;
    }

    std::vector<AggregateRow> out;
    out.reserve(groups.size());
    for (const auto& [group_key, acc] : groups) {
        AggregateRow row;
        row.model_id = group_key.first;
        row.level = level;
        row.key = group_key.second;
        row.mean_normalized = acc.first / static_cast<double>(acc.second);
        row.n = acc.second;
        out.push_back(std::move(row));
    }
    return out;
}

struct DistributionRow {
    std::string model_id;
    int bucket = 1;  // raw score 1..4
    double percentage = 0.0;
};

/// Percentage of scores landing in each raw bucket, per model. Four rows per
/// model; models with no scores simply do not appear.
inline std::vector<DistributionRow> score_distribution(const std::vector<DimensionScore>& scores) {
    std::map<std::string, std::array<std::size_t, 4>> counts;
    for (const auto& s : scores) {
        if (s.raw < 1 || s.raw > 4)
            throw ValidationError("raw score outside 1..4 in distribution input");
        counts[s.model_id][static_cast<std::size_t>(s.raw - 1)] += 1;
    }
    std::vector<DistributionRow> out;
    for (const auto& [model, buckets] : counts) {
        const std::size_t total = buckets[0] + buckets[1] + buckets[2] + buckets[3];
        for (int b = 1; b <= 4; ++b)
            out.push_back({model, b,
                           100.0 * static_cast<double>(buckets[static_cast<std::size_t>(b - 1)]) /
                               static_cast<double>(total)});
    }
    return out;
}

struct CampaignSummaryRow {
    std::string model_id;  // "(all)" for the overall row
    std::size_t conversations = 0;
    double median_length = 0.0;
    int p20_length = 0;  // middle-60% band, nearest-rank percentiles
    int p80_length = 0;
    std::size_t cap_reached = 0;
    std::size_t failed = 0;
};

namespace detail {

inline int nearest_rank(const std::vector<int>& sorted, double percentile) {
    // Nearest-rank definition: the smallest value with at least p% of mass at
    // or below it.
    const std::size_t n = sorted.size();
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(percentile / 100.0 * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

inline CampaignSummaryRow summarize_group(const std::string& label,
                                          const std::vector<const Transcript*>& group) {
    CampaignSummaryRow row;
    row.model_id = label;
    row.conversations = group.size();
    std::vector<int> lengths;
    lengths.reserve(group.size());
    for (const Transcript* t : group) {
        lengths.push_back(static_cast<int>(t->messages.size()));
        if (t->termination == Termination::CapReached) ++row.cap_reached;
        if (t->termination == Termination::Failed) ++row.failed;
    }
    std::sort(lengths.begin(), lengths.end());
    const std::size_t n = lengths.size();
    row.median_length = (n % 2 == 1)
                            ? lengths[n / 2]
                            : (lengths[n / 2 - 1] + lengths[n / 2]) / 2.0;
    row.p20_length = nearest_rank(lengths, 20.0);
    row.p80_length = nearest_rank(lengths, 80.0);
    return row;
}

}  // namespace detail

/// Per-model conversation counts and length statistics, with an overall
/// "(all)" row last.
inline std::vector<CampaignSummaryRow> summarize_campaign(
    const std::vector<Transcript>& transcripts) {
    if (transcripts.empty()) throw ValidationError("summarize_campaign requires transcripts");
    std::map<std::string, std::vector<const Transcript*>> by_model;
    std::vector<const Transcript*> all;
    for (const auto& t : transcripts) {
        by_model[t.model_id].push_back(&t);
        all.push_back(&t);
    }
    std::vector<CampaignSummaryRow> out;
    for (const auto& [model, group] : by_model)
        out.push_back(detail::summarize_group(model, group));
    out.push_back(detail::summarize_group("(all)", all));
    return out;
}

inline std::string render_summary(const std::vector<CampaignSummaryRow>& rows) {
    std::string out =
        "model\tconversations\tmedian_length\tp20_length\tp80_length\tcap_reached\tfailed\n";
    for (const auto& r : rows) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s\t%zu\t%.1f\t%d\t%d\t%zu\t%zu\n", r.model_id.c_str(),
                      r.conversations, r.median_length, r.p20_length, r.p80_length, r.cap_reached,
                      r.failed);
        out += buf;
    }
    return out;
}

namespace detail {

struct Demographics {
    std::string gender, race, education, ses, age;
};

inline Demographics demographics_for(const Cohort* cohort, const std::string& patient_id) {
    Demographics d;
    if (!cohort) return d;
    const PatientPacket* p = cohort->find_packet(patient_id);
    if (!p) return d;  // transcripts from outside this cohort get empty columns
    d.gender = std::string(gender_table().name(p->gender));
    d.race = std::string(race_table().name(p->race_ethnicity));
    d.education = std::string(education_table().name(p->education));
    d.ses = std::string(ses_table().name(p->ses));
    d.age = std::to_string(age_at(p->birth_date, p->encounter_time));
    return d;
}

inline std::string join_refs(const std::vector<int>& refs) {
    std::string out;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (i) out += ";";
        out += std::to_string(refs[i]);
    }
    return out;
}

inline std::string closure_label(const std::optional<bool>& v) {
    if (!v.has_value()) return "";
    return *v ? "yes" : "no";
}

}  // namespace detail

/// Writes the full release-artifact file set into out_dir and returns the
/// paths. Inputs are re-sorted internally, so file bytes depend only on the
/// logical content.
inline std::vector<std::filesystem::path> export_artifacts(
    const std::vector<Transcript>& transcripts, const JudgeResult& judge,
    const RubricCatalog& catalog, const Cohort* cohort,
    const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    std::vector<const Transcript*> ts;
    for (const auto& t : transcripts) ts.push_back(&t);
    std::sort(ts.begin(), ts.end(), [](const Transcript* a, const Transcript* b) {
        return a->conversation_id < b->conversation_id;
    });
    std::map<std::string, const Transcript*> t_by_id;
    for (const Transcript* t : ts) t_by_id[t->conversation_id] = t;

    std::vector<const DimensionScore*> scores;
    for (const auto& s : judge.scores) scores.push_back(&s);
    std::sort(scores.begin(), scores.end(),
              [](const DimensionScore* a, const DimensionScore* b) {
                  if (a->conversation_id != b->conversation_id)
                      return a->conversation_id < b->conversation_id;
                  return a->dimension_id < b->dimension_id;
              });

    // (a) Full transcripts, one row per speaker turn.
    {
        const auto path = out_dir / "transcripts.csv";
        CsvWriter w(path.string(),
                    {"conversation_id", "model_id", "patient_id", "encounter_reason",
                     "encounter_objective", "repeat_index", "termination", "closure_reasonable",
                     "message_index", "speaker", "text"});
        for (const Transcript* t : ts)
            for (const auto& m : t->messages)
                w.write_row({t->conversation_id, t->model_id, t->patient_id,
                             std::string(to_id(t->cell.reason)),
                             std::string(to_id(t->cell.objective)),
                             std::to_string(t->repeat_index), to_string(t->termination),
                             detail::closure_label(t->closure_reasonable),
                             std::to_string(m.index), to_string(m.speaker), m.text});
        written.push_back(path);
    }

    // Conversation-level index with demographics.
    {
        const auto path = out_dir / "conversations.csv";
        CsvWriter w(path.string(),
                    {"conversation_id", "model_id", "patient_id", "encounter_reason",
                     "encounter_objective", "repeat_index", "termination", "closure_reasonable",
                     "n_messages", "patient_turns", "gender", "race", "education",
                     "socioeconomic_status", "age"});
        for (const Transcript* t : ts) {
            const auto d = detail::demographics_for(cohort, t->patient_id);
            w.write_row({t->conversation_id, t->model_id, t->patient_id,
                         std::string(to_id(t->cell.reason)), std::string(to_id(t->cell.objective)),
                         std::to_string(t->repeat_index), to_string(t->termination),
                         detail::closure_label(t->closure_reasonable),
                         std::to_string(t->messages.size()), std::to_string(t->patient_turns),
                         d.gender, d.race, d.education, d.ses, d.age});
        }
        written.push_back(path);
    }

    // (b) Per-dimension score rows joined to conversation and catalog.
    {
        const auto path = out_dir / "conversation_scores.csv";
        CsvWriter w(path.string(),
                    {"conversation_id", "model_id", "patient_id", "encounter_reason",
                     "encounter_objective", "gender", "race", "education",
                     "socioeconomic_status", "dimension_id", "dimension_name", "category",
                     "meta_category", "raw", "normalized", "source", "discussionless",
                     "rationale", "evidence_refs"});
        for (const DimensionScore* s : scores) {
            auto it = t_by_id.find(s->conversation_id);
            if (it == t_by_id.end())
                throw ValidationError("score references unknown conversation: " +
                                      s->conversation_id);
            const Transcript* t = it->second;
            const DimensionSpec* dim = catalog.find_dimension(s->dimension_id);
            if (!dim)
                throw ValidationError("score references unknown dimension: " + s->dimension_id);
            const auto d = detail::demographics_for(cohort, t->patient_id);
            w.write_row({s->conversation_id, s->model_id, t->patient_id,
                         std::string(to_id(t->cell.reason)), std::string(to_id(t->cell.objective)),
                         d.gender, d.race, d.education, d.ses, dim->dimension_id, dim->name,
                         dim->category, catalog.meta_map.at(dim->category),
                         std::to_string(s->raw), csv_real(s->normalized), to_string(s->source),
                         s->discussionless ? "true" : "false", s->rationale,
                         detail::join_refs(s->evidence_refs)});
        }
        written.push_back(path);
    }

    // Per-conversation category means.
    {
        const auto path = out_dir / "conversation_category_scores.csv";
        CsvWriter w(path.string(), {"conversation_id", "model_id", "category", "mean_normalized",
                                    "n_dimensions"});
        std::map<std::pair<std::string, std::string>,
                 std::pair<double, std::size_t>> groups;
        std::map<std::pair<std::string, std::string>, std::string> model_of;
        for (const DimensionScore* s : scores) {
            const DimensionSpec* dim = catalog.find_dimension(s->dimension_id);
            const auto key = std::make_pair(s->conversation_id, dim->category);
            auto& acc = groups[key];
            acc.first += s->normalized;
            acc.second += 1;
            model_of[key] = s->model_id;
        }
        for (const auto& [key, acc] : groups)
            w.write_row({key.first, model_of.at(key), key.second,
                         csv_real(acc.first / static_cast<double>(acc.second)),
                         std::to_string(acc.second)});
        written.push_back(path);
    }

    // (c) Aggregates at the three levels plus the raw-score distribution.
    for (const AggregateLevel level :
         {AggregateLevel::Dimension, AggregateLevel::Category, AggregateLevel::MetaCategory}) {
        const auto path =
            out_dir / (std::string("aggregate_") + to_string(level) + ".csv");
        CsvWriter w(path.string(), {"model_id", "level", "key", "mean_normalized", "n"});
        for (const auto& row : aggregate(judge.scores, catalog, level))
            w.write_row({row.model_id, to_string(row.level), row.key,
                         csv_real(row.mean_normalized), std::to_string(row.n)});
        written.push_back(path);
    }
    {
        const auto path = out_dir / "score_distribution.csv";
        CsvWriter w(path.string(), {"model_id", "bucket", "percentage"});
        for (const auto& row : score_distribution(judge.scores))
            w.write_row({row.model_id, std::to_string(row.bucket), csv_real(row.percentage)});
        written.push_back(path);
    }

    // Flagged failures travel with the artifacts for audit.
    {
        const auto path = out_dir / "score_failures.csv";
        CsvWriter w(path.string(),
                    {"conversation_id", "dimension_id", "category", "stage", "diagnostics"});
        std::vector<const ScoreFailure*> fails;
        for (const auto& f : judge.failures) fails.push_back(&f);
        std::sort(fails.begin(), fails.end(), [](const ScoreFailure* a, const ScoreFailure* b) {
            if (a->conversation_id != b->conversation_id)
                return a->conversation_id < b->conversation_id;
            return a->dimension_id < b->dimension_id;
        });
        for (const ScoreFailure* f : fails)
            w.write_row({f->conversation_id, f->dimension_id, f->category, f->stage,
                         f->diagnostics});
        written.push_back(path);
    }

    return written;
}

}  // namespace clinsim

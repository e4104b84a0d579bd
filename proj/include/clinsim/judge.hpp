#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clinsim/orchestrator.hpp"
#include "clinsim/rubric.hpp"

// Two-stage judging: one committee discussion per category, then one score
// per applicable dimension with the discussion supplied as deliberation
// context. Failures degrade per dimension, never per conversation.

namespace clinsim {

struct CommitteeDiscussion {
    std::string conversation_id;
    std::string category;
    std::string text;
    std::vector<int> evidence_refs;
};

enum class ScoreSource { AiJudge, Human };

inline const char* to_string(ScoreSource s) {
    return s == ScoreSource::AiJudge ? "ai_judge" : "human";
}

inline ScoreSource parse_score_source(const std::string& s) {
    if (s == "ai_judge") return ScoreSource::AiJudge;
    if (s == "human") return ScoreSource::Human;
    throw ParseError("unknown score source: " + s);
}

struct DimensionScore {
    std::string conversation_id;
    std::string dimension_id;
    std::string model_id;  // judged doctor model, for aggregation
    int raw = 1;
    double normalized = 0.0;
    std::string rationale;
    std::vector<int> evidence_refs;
    ScoreSource source = ScoreSource::AiJudge;
    bool discussionless = false;  // scored without a committee discussion
};

struct ScoreFailure {
    std::string conversation_id;
    std::string dimension_id;
    std::string category;
    std::string stage;  // "discussion" or "score"
    std::string diagnostics;
};

struct JudgeConfig {
    std::string committee_template;  // empty = built-in default
    std::string scorer_template;     // empty = built-in default
    int transport_retries = 2;
    int parallelism = 1;
};

namespace detail {

inline int parse_ref_int(const std::string& s, const char* label) {
    int v = 0;
    if (!parse_int_strict(s, v))
        throw ParseError(std::string(label) + " is not an integer: '" + s + "'");
    return v;
}

/// Pulls the trailing "evidence:" line out of a reply. Returns the refs and
/// the reply with that line removed.
inline std::pair<std::vector<int>, std::string> split_evidence_line(const std::string& reply) {
    std::vector<std::string> lines = split_lines(reply);
    std::vector<int> refs;
    for (std::size_t i = lines.size(); i-- > 0;) {
        const std::string t = trim(lines[i]);
        if (t.empty()) continue;
        if (t.rfind("evidence:", 0) == 0) {
            const std::string body = trim(t.substr(std::string("evidence:").size()));
            std::size_t start = 0;
            while (start <= body.size() && !body.empty()) {
                std::size_t comma = body.find(',', start);
                const std::string tok = trim(comma == std::string::npos
                                                 ? body.substr(start)
                                                 : body.substr(start, comma - start));
                if (!tok.empty()) refs.push_back(parse_ref_int(tok, "evidence ref"));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(i));
        }
        break;  // only the last non-empty line counts
    }
    std::string rest;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) rest += "\n";
        rest += lines[i];
    }
    while (!rest.empty() && (rest.back() == '\n' || rest.back() == ' ')) rest.pop_back();
    return {std::move(refs), std::move(rest)};
}

inline void validate_evidence(const std::vector<int>& refs, const Transcript& t) {
    for (int r : refs)
        if (r < 0 || r >= static_cast<int>(t.messages.size()))
            throw ValidationError("evidence ref " + std::to_string(r) + " out of range for " +
                                  std::to_string(t.messages.size()) + "-message transcript");
}

}  // namespace detail

/// Stage one. The backend sees the transcript, the category description,
/// and the multi-viewpoint role specification; its deliberation is kept
/// verbatim. Out-of-range evidence references are rejected.
inline CommitteeDiscussion committee_discussion(const Transcript& t, const std::string& category,
                                                const RubricCatalog& catalog, Backend& backend,
                                                const JudgeConfig& config = {}) {
    const CategorySpec* spec = catalog.find_category(category);
    if (!spec) throw ValidationError("category not in catalog: " + category);
    const std::string& tmpl = config.committee_template.empty()
                                  ? std::string(kCommitteePromptTemplate)
                                  : config.committee_template;
    const std::string prompt =
        replace_placeholders(tmpl, {{"category", spec->name},
                                    {"category_description", spec->description},
                                    {"transcript", render_transcript(t)}});
    const std::string reply =
        complete_with_retry(backend, prompt, {}, config.transport_retries);
    auto [refs, _] = detail::split_evidence_line(reply);
    detail::validate_evidence(refs, t);
    CommitteeDiscussion out;
    out.conversation_id = t.conversation_id;
    out.category = category;
    out.text = reply;
    out.evidence_refs = std::move(refs);
    return out;
}

struct ScoreAttempt {
    std::optional<DimensionScore> score;
    std::string diagnostics;  // set when score is absent
    bool ok() const { return score.has_value(); }
};

namespace detail {

inline std::optional<int> extract_score(const std::string& reply) {
    const std::vector<std::string> lines = split_lines(reply);
    for (std::size_t i = lines.size(); i-- > 0;) {
        const std::string t = trim(lines[i]);
        if (t.empty()) continue;
        if (t.rfind("score:", 0) != 0) return std::nullopt;
        int v = 0;
        if (!parse_int_strict(trim(t.substr(std::string("score:").size())), v))
            return std::nullopt;
        return v;
    }
    return std::nullopt;
}

}  // namespace detail

/// Stage two. The raw value comes from the backend's final "score:" line;
/// normalization happens locally. An invalid reply earns exactly one re-ask.
inline ScoreAttempt score_dimension(const Transcript& t, const DimensionSpec& dim,
                                    const std::optional<CommitteeDiscussion>& discussion,
                                    Backend& backend, const JudgeConfig& config = {}) {
    const std::string& tmpl = config.scorer_template.empty() ? std::string(kScorerPromptTemplate)
                                                             : config.scorer_template;
    const std::string prompt = replace_placeholders(
        tmpl, {{"dimension_name", dim.name},
               {"dimension_description", dim.description},
               {"anchor_1", dim.anchors[0]},
               {"anchor_2", dim.anchors[1]},
               {"anchor_3", dim.anchors[2]},
               {"anchor_4", dim.anchors[3]},
               {"transcript", render_transcript(t)},
               {"discussion", discussion ? discussion->text
                                         : std::string("(no committee discussion available)")}});

    std::string last_problem;
    std::vector<ChatMessage> history;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string reply;
        try {
            reply = complete_with_retry(backend, prompt, history, config.transport_retries);
        } catch (const BackendError& e) {
            return {std::nullopt, std::string("backend failure: ") + e.what()};
        }
        const std::optional<int> raw = detail::extract_score(reply);
        if (raw && *raw >= 1 && *raw <= 4) {
            auto [refs, rationale] = detail::split_evidence_line([&] {
                // Drop the score line first, then look for an evidence line.
                std::vector<std::string> lines = detail::split_lines(reply);
                for (std::size_t i = lines.size(); i-- > 0;) {
                    if (detail::trim(lines[i]).empty()) continue;
                    lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(i));
                    break;
                }
                std::string rest;
                for (std::size_t i = 0; i < lines.size(); ++i) {
                    if (i) rest += "\n";
                    rest += lines[i];
                }
                return rest;
            }());
            try {
                detail::validate_evidence(refs, t);
            } catch (const ValidationError& e) {
                last_problem = e.what();
                history.push_back({"assistant", reply});
                history.push_back({"user",
                                   "Your evidence references messages that do not exist. Use only "
                                   "the numbered messages shown, and finish with a final line "
                                   "\"score: <1, 2, 3, or 4>\"."});
                continue;
            }
            DimensionScore score;
            score.conversation_id = t.conversation_id;
            score.dimension_id = dim.dimension_id;
            score.model_id = t.model_id;
            score.raw = *raw;
            score.normalized = normalize_score(*raw);
            score.rationale = rationale;
            score.evidence_refs = std::move(refs);
            score.source = ScoreSource::AiJudge;
            score.discussionless = !discussion.has_value();
            return {std::move(score), ""};
        }
        last_problem = raw ? "score " + std::to_string(*raw) + " outside 1..4"
                           : "reply has no final \"score:\" line";
        history.push_back({"assistant", reply});
        history.push_back({"user",
                           "That was not a usable score. Finish with a final line \"score: <1, "
                           "2, 3, or 4>\" and nothing after it."});
    }
    return {std::nullopt, "unscored after re-ask: " + last_problem};
}

struct JudgeResult {
    std::vector<CommitteeDiscussion> discussions;
    std::vector<DimensionScore> scores;
    std::vector<ScoreFailure> failures;
    std::vector<std::string> warnings;
};

/// Judges one transcript end to end: a discussion per category that has at
/// least one applicable dimension, then a score (or flagged failure) per
/// dimension. Every (conversation, applicable dimension) pair lands in
/// exactly one of scores/failures.
inline JudgeResult judge_conversation(const Transcript& t, const RubricCatalog& catalog,
                                      Backend& backend, const JudgeConfig& config = {}) {
    JudgeResult out;
    const std::vector<DimensionSpec> dims = applicable_dimensions(catalog, t.cell);
    if (dims.empty()) {
        out.warnings.push_back(t.conversation_id + ": no applicable dimensions");
        return out;
    }

    // Category order follows the catalog; dimensions stay id-sorted inside.
    std::map<std::string, std::vector<const DimensionSpec*>> by_category;
    for (const auto& d : dims) by_category[d.category].push_back(&d);

    for (const auto& cat : catalog.categories) {
        auto it = by_category.find(cat.name);
        if (it == by_category.end()) continue;

        std::optional<CommitteeDiscussion> discussion;
        std::string discussion_problem;
        try {
            discussion = committee_discussion(t, cat.name, catalog, backend, config);
            out.discussions.push_back(*discussion);
        } catch (const std::exception& e) {
            discussion_problem = e.what();
            out.warnings.push_back(t.conversation_id + ": category '" + cat.name +
                                   "' undiscussed: " + discussion_problem);
        }

        for (const DimensionSpec* dim : it->second) {
            ScoreAttempt attempt = score_dimension(t, *dim, discussion, backend, config);
            if (attempt.ok()) {
                out.scores.push_back(std::move(*attempt.score));
            } else {
                out.failures.push_back({t.conversation_id, dim->dimension_id, cat.name, "score",
                                        attempt.diagnostics});
            }
        }
    }
    return out;
}

/// Judges a batch of transcripts, skipping those with no patient turns.
/// Results are merged in deterministic order regardless of parallelism.
inline JudgeResult judge_transcripts(const std::vector<Transcript>& transcripts,
                                     const RubricCatalog& catalog, Backend& backend,
                                     const JudgeConfig& config = {}) {
    std::vector<const Transcript*> eligible;
    JudgeResult out;
    for (const auto& t : transcripts) {
        if (t.patient_turns == 0) {
            out.warnings.push_back(t.conversation_id + ": skipped, no patient turns");
            continue;
        }
        eligible.push_back(&t);
    }

    std::vector<JudgeResult> partials(eligible.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= eligible.size()) return;
            partials[i] = judge_conversation(*eligible[i], catalog, backend, config);
        }
    };
    const std::size_t n_threads = std::min<std::size_t>(
        std::max(1, config.parallelism), std::max<std::size_t>(eligible.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i + 1 < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (auto& p : partials) {
        out.discussions.insert(out.discussions.end(), p.discussions.begin(), p.discussions.end());
        out.scores.insert(out.scores.end(), p.scores.begin(), p.scores.end());
        out.failures.insert(out.failures.end(), p.failures.begin(), p.failures.end());
        out.warnings.insert(out.warnings.end(), p.warnings.begin(), p.warnings.end());
    }
    return out;
}

// ---- Human calibration ----

struct AgreementStats {
    std::size_t overlap = 0;
    std::size_t exact_matches = 0;
    double exact_match_rate = 0.0;  // meaningful only when overlap > 0
    double mean_abs_diff = 0.0;
};

struct MergedScores {
    std::vector<DimensionScore> effective;    // human value wins per key
    std::vector<DimensionScore> all_records;  // AI and human records, both kept
    AgreementStats agreement;
};

/// Merges human ratings over AI scores. Human values take precedence per
/// (conversation, dimension) key; neither input list is mutated.
inline MergedScores ingest_human_scores(const std::vector<DimensionScore>& human,
                                        const std::vector<DimensionScore>& existing) {
    std::map<std::pair<std::string, std::string>, const DimensionScore*> ai_by_key;
    for (const auto& s : existing) ai_by_key[{s.conversation_id, s.dimension_id}] = &s;

    std::map<std::pair<std::string, std::string>, const DimensionScore*> human_by_key;
    std::vector<std::string> dangling;
    for (const auto& h : human) {
        if (h.source != ScoreSource::Human)
            throw ValidationError("ingest_human_scores given a non-human record for " +
                                  h.conversation_id + "/" + h.dimension_id);
        const auto key = std::make_pair(h.conversation_id, h.dimension_id);
        if (!ai_by_key.count(key)) dangling.push_back(h.conversation_id + "/" + h.dimension_id);
        if (human_by_key.count(key))
            throw ValidationError("duplicate human score for " + h.conversation_id + "/" +
                                  h.dimension_id);
        human_by_key[key] = &h;
    }
    if (!dangling.empty()) {
        std::string msg = "human scores reference unknown keys:";
        for (const auto& k : dangling) msg += " " + k;
        throw ValidationError(msg);
    }

    MergedScores out;
    for (const auto& s : existing) {
        const auto key = std::make_pair(s.conversation_id, s.dimension_id);
        auto it = human_by_key.find(key);
        if (it == human_by_key.end()) {
            out.effective.push_back(s);
        } else {
            out.effective.push_back(*it->second);
            out.agreement.overlap += 1;
            if (it->second->raw == s.raw) out.agreement.exact_matches += 1;
            out.agreement.mean_abs_diff += std::abs(it->second->raw - s.raw);
        }
        out.all_records.push_back(s);
    }
    for (const auto& h : human) out.all_records.push_back(h);
    if (out.agreement.overlap > 0) {
        out.agreement.exact_match_rate = static_cast<double>(out.agreement.exact_matches) /
                                         static_cast<double>(out.agreement.overlap);
        out.agreement.mean_abs_diff /= static_cast<double>(out.agreement.overlap);
    }
    return out;
}

// ---- Line-delimited score store ----

inline void write_score_store(const JudgeResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "scores.jsonl", std::ios::trunc);
        if (!out) throw IoError("cannot write score store: " + (dir / "scores.jsonl").string());
        for (const auto& s : result.scores) {
            nlohmann::json j;
            j["type"] = "score";
            j["conversation_id"] = s.conversation_id;
            j["dimension_id"] = s.dimension_id;
            j["model_id"] = s.model_id;
            j["raw"] = s.raw;
            j["normalized"] = s.normalized;
            j["rationale"] = s.rationale;
            j["evidence_refs"] = s.evidence_refs;
            j["source"] = to_string(s.source);
            j["discussionless"] = s.discussionless;
            out << j.dump() << "\n";
        }
        for (const auto& f : result.failures) {
            nlohmann::json j;
            j["type"] = "failure";
            j["conversation_id"] = f.conversation_id;
            j["dimension_id"] = f.dimension_id;
            j["category"] = f.category;
            j["stage"] = f.stage;
            j["diagnostics"] = f.diagnostics;
            out << j.dump() << "\n";
        }
    }
    {
        std::ofstream out(dir / "discussions.jsonl", std::ios::trunc);
        if (!out)
            throw IoError("cannot write discussions: " + (dir / "discussions.jsonl").string());
        for (const auto& d : result.discussions) {
            nlohmann::json j;
            j["type"] = "discussion";
            j["conversation_id"] = d.conversation_id;
            j["category"] = d.category;
            j["text"] = d.text;
            j["evidence_refs"] = d.evidence_refs;
            out << j.dump() << "\n";
        }
    }
    {
        std::ofstream out(dir / "judge_warnings.txt", std::ios::trunc);
        for (const auto& w : result.warnings) out << w << "\n";
    }
}

inline JudgeResult load_score_store(const std::filesystem::path& dir) {
    JudgeResult out;
    const auto scores_path = dir / "scores.jsonl";
    std::ifstream in(scores_path);
    if (!in) throw IoError("cannot read score store: " + scores_path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(scores_path.string() + ":" + std::to_string(line_no) + ": " +
                             e.what());
        }
        const std::string type = j.value("type", "");
        if (type == "score") {
            DimensionScore s;
            s.conversation_id = j.at("conversation_id").get<std::string>();
            s.dimension_id = j.at("dimension_id").get<std::string>();
            s.model_id = j.value("model_id", "");
            s.raw = j.at("raw").get<int>();
            s.normalized = j.at("normalized").get<double>();
            s.rationale = j.value("rationale", "");
            if (j.contains("evidence_refs"))
                s.evidence_refs = j.at("evidence_refs").get<std::vector<int>>();
            s.source = parse_score_source(j.value("source", "ai_judge"));
            s.discussionless = j.value("discussionless", false);
            if (s.raw < 1 || s.raw > 4)
                throw ValidationError(scores_path.string() + ": raw score outside 1..4");
            out.scores.push_back(std::move(s));
        } else if (type == "failure") {
            ScoreFailure f;
            f.conversation_id = j.at("conversation_id").get<std::string>();
            f.dimension_id = j.at("dimension_id").get<std::string>();
            f.category = j.value("category", "");
            f.stage = j.value("stage", "");
            f.diagnostics = j.value("diagnostics", "");
            out.failures.push_back(std::move(f));
        } else {
            throw ParseError(scores_path.string() + ": unknown record type: " + type);
        }
    }
    return out;
}

}  // namespace clinsim

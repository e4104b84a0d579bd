// Acceptance gate. Prints one PASS/FAIL line per criterion and exits with
// the number of failed criteria. argv[1] is the repository root, argv[2]
// the path to the command-line binary (used by the end-to-end criterion).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clinsim/affect.hpp"
#include "clinsim/cohortgen.hpp"
#include "clinsim/config.hpp"
#include "clinsim/judge.hpp"
#include "clinsim/memory.hpp"
#include "clinsim/orchestrator.hpp"
#include "clinsim/report.hpp"
#include "clinsim/rubric.hpp"
#include "clinsim/scripted_backends.hpp"

namespace fs = std::filesystem;
using namespace clinsim;

namespace {

int g_failures = 0;

void report_line(const std::string& name, bool pass, double seconds,
                 const std::string& detail) {
    if (!pass) ++g_failures;
    std::printf("%s  %-28s (%.2fs)%s%s\n", pass ? "PASS" : "FAIL", name.c_str(), seconds,
                detail.empty() ? "" : "  ", detail.c_str());
    std::fflush(stdout);
}

/// Runs one criterion, timing it and catching anything it throws.
void criterion(const std::string& name, const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = true;
    std::string detail;
    try {
        body();
    } catch (const std::exception& e) {
        pass = false;
        detail = e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report_line(name, pass, seconds, detail);
}

struct CheckFailure : std::runtime_error {
    explicit CheckFailure(const std::string& what) : std::runtime_error(what) {}
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailure(what);
}

std::string slurp_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(static_cast<bool>(in), "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempTree {
    fs::path root;
    explicit TempTree(const std::string& tag) {
        root = fs::temp_directory_path() /
               (tag + "-" + std::to_string(std::random_device{}()));
        fs::create_directories(root);
    }
    ~TempTree() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
};

// ---- retrieval oracle (independent of the library implementation) ----

double oracle_score(const std::vector<double>& query, const EmotionVector& mood, Timestamp now,
                    const MemoryRecord& m, const RetrievalWeights& w) {
    double dot = 0.0;
    for (std::size_t i = 0; i < query.size(); ++i) dot += query[i] * m.embedding[i];
    const double semantic = (1.0 + dot) / 2.0;

    const double elapsed_hours = static_cast<double>(now - m.last_accessed) / 3600.0;
    const double recency = std::pow(w.decay_rate, elapsed_hours / w.unit_hours);

    double edot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        edot += mood[i] * m.emotions[i];
        na += mood[i] * mood[i];
        nb += m.emotions[i] * m.emotions[i];
    }
    const double denom = na + nb - edot;
    const double congruence = denom == 0.0 ? 1.0 : edot / denom;

    return w.semantic * semantic + w.recency * recency + w.importance * m.importance +
           w.emotion * congruence;
}

std::vector<double> random_unit_vector(std::mt19937_64& rng, std::size_t dim) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(dim);
    double norm2 = 0.0;
    while (norm2 == 0.0) {
        norm2 = 0.0;
        for (auto& x : v) {
            x = u(rng);
            norm2 += x * x;
        }
    }
    const double norm = std::sqrt(norm2);
    for (auto& x : v) x /= norm;
    return v;
}

// ---- fixtures shared by several criteria ----

Cohort cohort_subset(const Cohort& full, const std::vector<std::size_t>& indices) {
    Cohort out;
    out.encounter_time = full.encounter_time;
    for (std::size_t i : indices) {
        out.index_by_id[full.manifest[i].patient_id] = out.manifest.size();
        out.manifest.push_back(full.manifest[i]);
        out.packets.push_back(full.packets[i]);
    }
    return out;
}

std::vector<std::size_t> pick_by_cells(const Cohort& full,
                                       const std::vector<TaskCell>& wanted_cells,
                                       std::size_t per_cell) {
    std::vector<std::size_t> out;
    for (const TaskCell& cell : wanted_cells) {
        std::size_t taken = 0;
        for (std::size_t i = 0; i < full.manifest.size() && taken < per_cell; ++i) {
            if (full.manifest[i].cell == cell) {
                out.push_back(i);
                ++taken;
            }
        }
        require(taken == per_cell, "cohort lacks patients for a requested cell");
    }
    return out;
}

std::string emotion_reply(const std::map<std::string, int>& overrides,
                          const std::set<std::string>& dropped) {
    std::string out;
    auto emit = [&](const std::string& key, int fallback) {
        if (dropped.count(key)) return;
        auto it = overrides.find(key);
        out += key + ": " + std::to_string(it == overrides.end() ? fallback : it->second) + "\n";
    };
    for (const auto& name : kEmotionNames) emit(std::string(name), 0);
    emit("valence", 1);
    emit("arousal", 3);
    if (!dropped.count("reflection")) out += "reflection: The visit stayed manageable.\n";
    emit("poignancy", 4);
    return out;
}

bool accepts(const std::string& reply) {
    try {
        parse_emotion_output(reply);
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        out[fs::relative(entry.path(), root).generic_string()] = slurp_file(entry.path());
    }
    return out;
}

int run_cli(const std::string& command) {
    return std::system((command + " > /dev/null 2>&1").c_str());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: %s <repo-root> <cli-binary>\n", argv[0]);
        return 2;
    }
    const fs::path repo = argv[1];
    const std::string cli = argv[2];

    // 1. Score normalization.
    criterion("normalization", [] {
        const auto start = std::chrono::steady_clock::now();
        const double expected[] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
        for (int raw = 1; raw <= 4; ++raw)
            require(std::abs(normalize_score(raw) - expected[raw - 1]) <= 1e-12,
                    "normalize_score(" + std::to_string(raw) + ") off");
        for (int raw : {0, 5, -3}) {
            bool threw = false;
            try {
                normalize_score(raw);
            } catch (const ValidationError&) {
                threw = true;
            }
            require(threw, "out-of-range raw score accepted");
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        require(seconds < 1.0, "normalization exceeded 1s");
    });

    // 2. Retrieval ordering against the brute-force oracle.
    criterion("retrieval-oracle", [] {
        const auto start = std::chrono::steady_clock::now();
        const std::size_t dim = 8;
        for (int trial = 0; trial < 1000; ++trial) {
            std::mt19937_64 rng(0x51aBull * 1000 + static_cast<unsigned>(trial));
            std::uniform_int_distribution<int> n_dist(1, 64);
            std::uniform_int_distribution<int> small(0, 4);
            std::uniform_int_distribution<int> quant(0, 4);
            const std::size_t n = static_cast<std::size_t>(n_dist(rng));

            RetrievalWeights w;
            const double levels[] = {0.0, 0.5, 1.0, 2.0, 4.0};
            do {
                w.semantic = levels[quant(rng)];
                w.recency = levels[quant(rng)];
                w.importance = levels[quant(rng)];
                w.emotion = levels[quant(rng)];
            } while (w.semantic + w.recency + w.importance + w.emotion == 0.0);
            w.decay_rate = (trial % 3 == 0) ? 0.9 : (trial % 3 == 1 ? 0.95 : 0.995);
            w.unit_hours = (trial % 2 == 0) ? 1.0 : 24.0;

            const Timestamp base = 1'700'000'000;
            MemoryStore store;
            std::vector<MemoryRecord> mirror;
            for (std::size_t i = 0; i < n; ++i) {
                MemoryRecord m;
                char id[16];
                std::snprintf(id, sizeof(id), "m-%03zu", i);
                m.memory_id = id;
                m.text = "memory";
                if (i > 0 && small(rng) == 0) {
                    // Clone an earlier record's signals to force score ties.
                    const MemoryRecord& src = mirror[static_cast<std::size_t>(rng() % i)];
                    m.embedding = src.embedding;
                    m.emotions = src.emotions;
                    m.importance = src.importance;
                    m.created_at = src.created_at;
                    m.last_accessed = src.last_accessed;
                } else {
                    m.embedding = random_unit_vector(rng, dim);
                    for (auto& v : m.emotions.values) v = quant(rng) / 4.0;
                    if (small(rng) == 0) m.emotions = EmotionVector{};
                    m.importance = quant(rng) / 4.0;
                    m.created_at = base + 3600 * small(rng);
                    m.last_accessed = m.created_at + 3600 * small(rng);
                }
                store.add(m);
                mirror.push_back(std::move(m));
            }

            Timestamp now = base;
            for (const auto& m : mirror) now = std::max(now, m.last_accessed);
            now += 3600 * small(rng);

            const std::vector<double> query = random_unit_vector(rng, dim);
            EmotionVector mood;
            if (small(rng) != 0)
                for (auto& v : mood.values) v = quant(rng) / 4.0;
            const std::size_t k = 1 + static_cast<std::size_t>(rng() % (n + 3));

            // Oracle ranking from the pre-retrieval state.
            std::vector<std::size_t> order(mirror.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::vector<double> scores(mirror.size());
            for (std::size_t i = 0; i < mirror.size(); ++i)
                scores[i] = oracle_score(query, mood, now, mirror[i], w);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (scores[a] != scores[b]) return scores[a] > scores[b];
                if (mirror[a].created_at != mirror[b].created_at)
                    return mirror[a].created_at > mirror[b].created_at;
                return mirror[a].memory_id < mirror[b].memory_id;
            });

            const auto hits = store.retrieve(query, mood, now, k, w);
            const std::size_t take = std::min(k, mirror.size());
            require(hits.size() == take, "retrieve returned wrong count");
            for (std::size_t i = 0; i < take; ++i) {
                require(hits[i].record.memory_id == mirror[order[i]].memory_id,
                        "trial " + std::to_string(trial) + ": rank " + std::to_string(i) +
                            " is " + hits[i].record.memory_id + ", oracle wants " +
                            mirror[order[i]].memory_id);
                require(std::abs(hits[i].score - scores[order[i]]) <= 1e-12,
                        "score mismatch at trial " + std::to_string(trial));
            }
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        require(seconds < 30.0, "retrieval oracle exceeded 30s");
    });

    // 3. Tanimoto similarity laws.
    criterion("tanimoto-laws", [] {
        std::mt19937_64 rng(271828);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 10000; ++i) {
            EmotionVector a, b;
            for (auto& v : a.values) v = u(rng);
            for (auto& v : b.values) v = u(rng);
            const double ab = tanimoto(a, b).value;
            const double ba = tanimoto(b, a).value;
            require(std::abs(ab - ba) <= 1e-9, "tanimoto asymmetric");
            require(ab >= -1e-9 && ab <= 1.0 + 1e-9, "tanimoto out of range");
            require(std::abs(tanimoto(a, a).value - 1.0) <= 1e-9, "self-similarity not 1");
        }
    });

    // 4. Recency decay value and monotonicity.
    criterion("recency-decay", [] {
        MemoryRecord m;
        m.memory_id = "m";
        m.created_at = 0;
        m.last_accessed = 0;
        const double at_100h = recency_score(100 * 3600, m, 0.995, 1.0);
        require(std::abs(at_100h - 0.60577) <= 1e-4,
                "0.995^100 = " + std::to_string(at_100h));
        double prev = recency_score(0, m, 0.995, 1.0);
        require(prev == 1.0, "zero-elapsed recency not 1");
        for (int h = 1; h <= 500; ++h) {
            const double cur = recency_score(static_cast<Timestamp>(h) * 3600, m, 0.995, 1.0);
            require(cur < prev, "recency not strictly decreasing at h=" + std::to_string(h));
            prev = cur;
        }
    });

    // 5. Hard cap with never-closing backends over 100 conversations.
    criterion("protocol-cap", [] {
        CohortGenConfig gen_config;
        const Cohort full = generate_cohort(gen_config);
        std::vector<std::size_t> indices(50);
        for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i * 7;  // varied cells
        const Cohort cohort = cohort_subset(full, indices);

        HashEmbedder embedder(32, 5);
        ScriptedEffortBackend effort("FOCUSED");
        ScriptedEmotionBackend emotion(ScriptedEmotionBackend::Mode::Hash, 3);
        ScriptedBackend responder(
            "patient", {}, std::string("It has stayed about the same.\nused_memories: none"));
        PatientBackends backends{&effort, &emotion, &responder};
        ScriptedBackend doc_a("a", {}, std::string("Tell me more about that."));
        ScriptedBackend doc_b("b", {}, std::string("And how does that feel day to day?"));
        const std::vector<DoctorModel> models = {{"endless-a", &doc_a, {}, nullptr, "scripted"},
                                                 {"endless-b", &doc_b, {}, nullptr, "scripted"}};
        PatientAgentConfig patient_config;
        CampaignConfig config;
        config.repeats = 1;
        config.parallelism = 4;
        config.cap = 50;

        const CampaignResult result =
            run_campaign(cohort, models, backends, embedder, patient_config, config);
        require(result.failures.empty(), "campaign reported failures");
        require(result.transcripts.size() == 100, "expected 100 conversations, got " +
                                                      std::to_string(result.transcripts.size()));
        for (const auto& t : result.transcripts) {
            require(t.termination == Termination::CapReached,
                    t.conversation_id + " did not hit the cap");
            require(t.messages.size() == 50,
                    t.conversation_id + " has " + std::to_string(t.messages.size()) +
                        " messages");
            for (std::size_t i = 0; i < t.messages.size(); ++i) {
                require(t.messages[i].index == static_cast<int>(i),
                        "non-contiguous message index");
                const Speaker expected = (i % 2 == 0) ? Speaker::Doctor : Speaker::Patient;
                require(t.messages[i].speaker == expected,
                        t.conversation_id + " breaks alternation at " + std::to_string(i));
            }
        }
    });

    // 6. Task-matrix fidelity of the released cohort.
    criterion("task-matrix", [&repo] {
        const Cohort cohort = load_cohort(repo / "data" / "cohort");
        require(cohort.manifest.size() == 366,
                "total is " + std::to_string(cohort.manifest.size()));

        const auto counts = cell_counts(cohort);
        std::map<std::string, int> row_totals, column_totals;
        for (const auto& [key, count] : counts) {
            row_totals[key.first] += count;
            column_totals[key.second] += count;
        }
        const std::map<std::string, int> expected_rows = {
            {"anxiety", 60},       {"asthma", 48},          {"breast_cancer", 24},
            {"depression", 60},    {"dermatitis", 48},      {"lupus", 48},
            {"pregnancy", 6},      {"seizure_disorder", 48}, {"wellness_checkup", 24}};
        const std::map<std::string, int> expected_columns = {{"diagnosis", 24},
                                                             {"lifestyle_advice", 93},
                                                             {"medical_screening", 81},
                                                             {"medication_advice", 90},
                                                             {"treatment_advice", 78}};
        require(row_totals == expected_rows, "row totals differ");
        require(column_totals == expected_columns, "column totals differ");

        // Per-cell counts match the matrix exactly.
        for (std::size_t r = 0; r < kReasonCount; ++r) {
            for (std::size_t o = 0; o < kObjectiveCount; ++o) {
                const auto key = std::make_pair(
                    std::string(to_id(static_cast<EncounterReason>(r))),
                    std::string(to_id(static_cast<EncounterObjective>(o))));
                const int want = kCellPatientCounts[r][o];
                const auto it = counts.find(key);
                const int got = it == counts.end() ? 0 : it->second;
                require(got == want, "cell " + key.first + "/" + key.second + " has " +
                                         std::to_string(got) + ", expected " +
                                         std::to_string(want));
                if (want == 0) {
                    bool threw = false;
                    try {
                        make_task_cell(static_cast<EncounterReason>(r),
                                       static_cast<EncounterObjective>(o));
                    } catch (const ValidationError&) {
                        threw = true;
                    }
                    require(threw, "unpopulated cell accepted: " + key.first + "/" + key.second);
                }
            }
        }

        // A manifest that names an unpopulated cell must be rejected.
        TempTree tmp("badcell");
        nlohmann::json manifest;
        std::ifstream in(repo / "data" / "cohort" / "manifest.json");
        in >> manifest;
        manifest["patients"][0]["encounter_reason"] = "asthma";
        manifest["patients"][0]["encounter_objective"] = "diagnosis";
        std::ofstream out(tmp.root / "manifest.json");
        out << manifest.dump();
        out.close();
        bool threw = false;
        try {
            load_cohort(tmp.root);
        } catch (const ValidationError&) {
            threw = true;
        }
        require(threw, "em-dash cell in manifest accepted");
    });

    // 7. Catalog fidelity.
    criterion("catalog", [&repo] {
        const RubricCatalog cat = load_catalog(repo / "assets" / "catalog.json");
        require(cat.dimensions.size() == 105,
                "dimensions: " + std::to_string(cat.dimensions.size()));
        require(cat.categories.size() == 29,
                "categories: " + std::to_string(cat.categories.size()));
        require(cat.meta_categories().size() == 7,
                "meta-categories: " + std::to_string(cat.meta_categories().size()));
        require_full_profile(cat);

        const RubricCatalog toy = load_catalog(repo / "assets" / "catalog_toy.json");
        require(toy.dimensions.size() == 10, "toy catalog did not load through the validator");
    });

    // 8. Judging completeness and reproducibility on 12 scripted transcripts.
    criterion("judging-completeness", [&repo] {
        const RubricCatalog toy = load_catalog(repo / "assets" / "catalog_toy.json");
        CohortGenConfig gen_config;
        const Cohort full = generate_cohort(gen_config);
        const std::vector<TaskCell> cells = {
            make_task_cell(EncounterReason::Anxiety, EncounterObjective::Diagnosis),
            make_task_cell(EncounterReason::Asthma, EncounterObjective::MedicationAdvice),
            make_task_cell(EncounterReason::WellnessCheckup, EncounterObjective::LifestyleAdvice),
        };
        const Cohort cohort = cohort_subset(full, pick_by_cells(full, cells, 2));

        HashEmbedder embedder(32, 5);
        ScriptedEffortBackend effort("OPEN");
        ScriptedEmotionBackend emotion(ScriptedEmotionBackend::Mode::Neutral, 0);
        ScriptedBackend responder(
            "patient", {}, std::string("Mostly in the evenings, I think.\nused_memories: none"));
        PatientBackends backends{&effort, &emotion, &responder};
        ScriptedBackend doc_a("a", {}, std::string("Can you walk me through a typical day?"));
        ScriptedBackend doc_b("b", {}, std::string("When did you first notice it?"));
        const std::vector<DoctorModel> models = {{"doc-a", &doc_a, {}, nullptr, "scripted"},
                                                 {"doc-b", &doc_b, {}, nullptr, "scripted"}};
        PatientAgentConfig patient_config;
        CampaignConfig config;
        config.repeats = 1;
        config.parallelism = 2;
        config.cap = 6;

        const CampaignResult campaign =
            run_campaign(cohort, models, backends, embedder, patient_config, config);
        require(campaign.transcripts.size() == 12, "expected 12 transcripts");

        // The judge deterministically fails one dimension to exercise the
        // flagged-failure path alongside ordinary scores.
        ScriptedJudgeBackend inner(17);
        const std::string sabotage = toy.find_dimension("toy-04")->name;
        FunctionBackend judge_backend("judge", [&](const std::string& prompt, const auto& h) {
            if (prompt.find("score:") != std::string::npos &&
                prompt.find(sabotage) != std::string::npos)
                return std::string("This one refuses to commit to a band.");
            return inner.complete(prompt, h);
        });

        auto run_once = [&](const fs::path& dir) {
            const JudgeResult result =
                judge_transcripts(campaign.transcripts, toy, judge_backend, {});
            write_score_store(result, dir);
            return result;
        };
        TempTree tmp("judging");
        const JudgeResult first = run_once(tmp.root / "a");
        const JudgeResult second = run_once(tmp.root / "b");
        for (const char* name : {"scores.jsonl", "discussions.jsonl", "judge_warnings.txt"})
            require(slurp_file(tmp.root / "a" / name) == slurp_file(tmp.root / "b" / name),
                    std::string("re-run differs in ") + name);
        (void)second;

        // Exactly one score or one failure per (conversation, applicable dim).
        std::map<std::string, std::set<std::string>> covered;
        for (const auto& s : first.scores)
            require(covered[s.conversation_id].insert(s.dimension_id).second,
                    "duplicate score for " + s.conversation_id + "/" + s.dimension_id);
        std::size_t failure_count = 0;
        for (const auto& f : first.failures) {
            require(covered[f.conversation_id].insert(f.dimension_id).second,
                    "dimension both scored and failed: " + f.dimension_id);
            ++failure_count;
        }
        require(failure_count == 12, "expected one flagged failure per conversation");
        for (const auto& t : campaign.transcripts) {
            const auto dims = applicable_dimensions(toy, t.cell);
            const auto& got = covered[t.conversation_id];
            require(got.size() == dims.size(),
                    t.conversation_id + " covered " + std::to_string(got.size()) + " of " +
                        std::to_string(dims.size()) + " dimensions");
            for (const auto& d : dims)
                require(got.count(d.dimension_id) == 1,
                        t.conversation_id + " missing " + d.dimension_id);
        }
    });

    // 9. Emotion schema, exhaustive single-field perturbation.
    criterion("emotion-schema", [] {
        require(accepts(emotion_reply({}, {})), "baseline reply rejected");
        for (const auto& name : kEmotionNames) {
            const std::string key(name);
            for (int v = -13; v <= 13; ++v) {
                const bool legal = v >= -10 && v <= 10;
                require(accepts(emotion_reply({{key, v}}, {})) == legal,
                        key + "=" + std::to_string(v) + " mishandled");
            }
            require(!accepts(emotion_reply({}, {key})), key + " missing but accepted");
        }
        for (int v = -13; v <= 13; ++v)
            require(accepts(emotion_reply({{"valence", v}}, {})) == (v >= -10 && v <= 10),
                    "valence=" + std::to_string(v) + " mishandled");
        for (int v = -3; v <= 13; ++v)
            require(accepts(emotion_reply({{"arousal", v}}, {})) == (v >= 0 && v <= 10),
                    "arousal=" + std::to_string(v) + " mishandled");
        for (int v = -2; v <= 13; ++v)
            require(accepts(emotion_reply({{"poignancy", v}}, {})) == (v >= 1 && v <= 10),
                    "poignancy=" + std::to_string(v) + " mishandled");
        for (const char* key : {"valence", "arousal", "poignancy", "reflection"})
            require(!accepts(emotion_reply({}, {key})),
                    std::string(key) + " missing but accepted");
    });

    // 10. Aggregation on a hand-computed fixture.
    criterion("aggregation", [&repo] {
        const RubricCatalog toy = load_catalog(repo / "assets" / "catalog_toy.json");
        auto mk = [](const char* conv, const char* model, const char* dim, int raw) {
            DimensionScore s;
            s.conversation_id = conv;
            s.model_id = model;
            s.dimension_id = dim;
            s.raw = raw;
            s.normalized = normalize_score(raw);
            return s;
        };
        const std::vector<DimensionScore> scores = {
            mk("c-1", "m-a", "toy-01", 1), mk("c-1", "m-a", "toy-02", 2),
            mk("c-1", "m-a", "toy-03", 3), mk("c-1", "m-a", "toy-04", 4),
            mk("c-1", "m-a", "toy-05", 4), mk("c-1", "m-a", "toy-06", 2),
            mk("c-1", "m-a", "toy-07", 3), mk("c-2", "m-a", "toy-01", 4),
            mk("c-2", "m-a", "toy-02", 4), mk("c-2", "m-a", "toy-05", 1),
            mk("c-2", "m-a", "toy-08", 2), mk("c-2", "m-a", "toy-09", 3),
            mk("c-2", "m-a", "toy-10", 4), mk("c-3", "m-b", "toy-01", 2),
            mk("c-3", "m-b", "toy-03", 2), mk("c-3", "m-b", "toy-05", 3),
            mk("c-3", "m-b", "toy-06", 1), mk("c-3", "m-b", "toy-08", 4),
            mk("c-3", "m-b", "toy-09", 1), mk("c-3", "m-b", "toy-10", 2),
        };

        auto expect = [](const std::vector<AggregateRow>& rows, const std::string& model,
                         const std::string& key, double mean, std::size_t n) {
            for (const auto& r : rows) {
                if (r.model_id == model && r.key == key) {
                    require(std::abs(r.mean_normalized - mean) <= 1e-9,
                            model + "/" + key + " mean " + std::to_string(r.mean_normalized));
                    require(r.n == n, model + "/" + key + " n " + std::to_string(r.n));
                    return;
                }
            }
            throw CheckFailure("missing aggregate row " + model + "/" + key);
        };

        const auto by_category = aggregate(scores, toy, AggregateLevel::Category);
        expect(by_category, "m-a", "history taking", 2.0 / 3.0, 6);
        expect(by_category, "m-a", "communication", 0.5, 4);
        expect(by_category, "m-a", "medication guidance", 2.0 / 3.0, 3);
        expect(by_category, "m-b", "history taking", 1.0 / 3.0, 2);
        expect(by_category, "m-b", "communication", 1.0 / 3.0, 2);
        expect(by_category, "m-b", "medication guidance", 4.0 / 9.0, 3);

        const auto by_meta = aggregate(scores, toy, AggregateLevel::MetaCategory);
        expect(by_meta, "m-a", "Clinical Skill", 2.0 / 3.0, 9);
        expect(by_meta, "m-a", "Interpersonal Skill", 0.5, 4);
        expect(by_meta, "m-b", "Clinical Skill", 0.4, 5);
        expect(by_meta, "m-b", "Interpersonal Skill", 1.0 / 3.0, 2);

        std::map<std::string, double> totals;
        for (const auto& row : score_distribution(scores)) totals[row.model_id] += row.percentage;
        for (const auto& [model, total] : totals)
            require(std::abs(total - 100.0) <= 1e-9, model + " buckets sum to " +
                                                         std::to_string(total));
    });

    // 11. End-to-end determinism through the command-line interface.
    criterion("end-to-end-determinism", [&repo, &cli] {
        const auto start = std::chrono::steady_clock::now();
        TempTree tmp("e2e");

        // Self-contained stage: config, fixtures, and a small mixed cohort.
        for (const char* name : {"campaign_small.json", "responder_plain.json",
                                 "doctor_closing.json", "doctor_endless.json"})
            fs::copy_file(repo / "assets" / "fixtures" / name, tmp.root / name);
        CohortGenConfig gen_config;
        const Cohort full = generate_cohort(gen_config);
        const std::vector<TaskCell> cells = {
            make_task_cell(EncounterReason::Anxiety, EncounterObjective::Diagnosis),
            make_task_cell(EncounterReason::Asthma, EncounterObjective::MedicationAdvice),
            make_task_cell(EncounterReason::Depression, EncounterObjective::TreatmentAdvice),
            make_task_cell(EncounterReason::WellnessCheckup,
                           EncounterObjective::LifestyleAdvice),
        };
        write_cohort(cohort_subset(full, pick_by_cells(full, cells, 1)), tmp.root / "cohort");

        const std::string catalog = (repo / "assets" / "catalog_toy.json").string();
        std::vector<std::map<std::string, std::string>> trees;
        for (int run = 1; run <= 3; ++run) {
            const fs::path out = tmp.root / ("run" + std::to_string(run));
            require(run_cli(cli + " simulate --cohort " + (tmp.root / "cohort").string() +
                            " --models " + (tmp.root / "campaign_small.json").string() +
                            " --repeats 1 --out " + out.string()) == 0,
                    "simulate failed on run " + std::to_string(run));
            require(run_cli(cli + " judge --transcripts " + (out / "transcripts").string() +
                            " --models " + (tmp.root / "campaign_small.json").string() +
                            " --catalog " + catalog + " --out " + (out / "scores").string()) == 0,
                    "judge failed on run " + std::to_string(run));
            require(run_cli(cli + " report --scores " + (out / "scores").string() +
                            " --transcripts " + (out / "transcripts").string() + " --catalog " +
                            catalog + " --out " + (out / "report").string()) == 0,
                    "report failed on run " + std::to_string(run));
            trees.push_back(read_tree(out));
        }
        require(!trees[0].empty(), "no output files produced");
        require(trees[0].count("report/aggregate_category.csv") == 1,
                "report artifacts missing");
        for (int run = 1; run < 3; ++run) {
            require(trees[0].size() == trees[static_cast<std::size_t>(run)].size(),
                    "run produced a different file set");
            for (const auto& [rel, bytes] : trees[0]) {
                const auto& other = trees[static_cast<std::size_t>(run)];
                const auto it = other.find(rel);
                require(it != other.end(), "missing file on re-run: " + rel);
                require(it->second == bytes, "bytes differ across runs: " + rel);
            }
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        require(seconds < 60.0, "end-to-end exceeded 60s");
    });

    // 12. Campaign summary statistics.
    criterion("summary-statistics", [] {
        auto stub = [](const std::string& id, const std::string& model, int length,
                       Termination term) {
            Transcript t;
            t.conversation_id = id;
            t.model_id = model;
            t.patient_id = "p-0001";
            t.cell = make_task_cell(EncounterReason::Anxiety, EncounterObjective::Diagnosis);
            t.termination = term;
            for (int i = 0; i < length; ++i)
                t.messages.push_back({i, i % 2 == 0 ? Speaker::Doctor : Speaker::Patient, "m"});
            t.patient_turns = length / 2;
            return t;
        };
        // Length multiset shaped like the published campaign: bulk in the
        // low teens, a long tail, and a few conversations pinned at the cap.
        const std::vector<int> lengths_a = {9, 10, 11, 11, 12, 12, 12, 13, 13, 13};
        const std::vector<int> lengths_b = {13, 14, 14, 15, 16, 16, 17, 18, 50, 50};
        std::vector<Transcript> ts;
        for (std::size_t i = 0; i < lengths_a.size(); ++i)
            ts.push_back(stub("a-" + std::to_string(i), "m-a", lengths_a[i],
                              Termination::ClosedByDoctor));
        for (std::size_t i = 0; i < lengths_b.size(); ++i)
            ts.push_back(stub("b-" + std::to_string(i), "m-b", lengths_b[i],
                              lengths_b[i] == 50 ? Termination::CapReached
                                                 : Termination::ClosedByDoctor));

        const auto rows = summarize_campaign(ts);
        require(rows.size() == 3, "expected two model rows plus the overall row");
        const auto& all = rows.back();
        require(all.model_id == "(all)", "overall row missing");
        require(all.conversations == 20, "overall count wrong");
        require(std::abs(all.median_length - 13.0) <= 1e-12,
                "median is " + std::to_string(all.median_length));
        require(all.cap_reached == 2, "overall cap-reached count wrong");
        for (const auto& r : rows) {
            if (r.model_id == "m-a") require(r.cap_reached == 0, "m-a cap count wrong");
            if (r.model_id == "m-b") require(r.cap_reached == 2, "m-b cap count wrong");
        }
    });

    if (g_failures == 0) std::printf("all criteria passed\n");
    return g_failures;
}

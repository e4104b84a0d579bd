#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clinsim/backend.hpp"
#include "clinsim/cohort.hpp"
#include "clinsim/patient.hpp"
#include "clinsim/prompts.hpp"

// Conversation protocol: the doctor always speaks first, speakers strictly
// alternate, and no conversation exceeds the message cap.

namespace clinsim {

enum class Speaker { Doctor, Patient };

inline const char* to_string(Speaker s) { return s == Speaker::Doctor ? "doctor" : "patient"; }

enum class Termination { ClosedByDoctor, ClosedByPatient, CapReached, Failed };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::ClosedByDoctor: return "closed_by_doctor";
        case Termination::ClosedByPatient: return "closed_by_patient";
        case Termination::CapReached: return "cap_reached";
        case Termination::Failed: return "failed";
    }
    return "failed";
}

inline Termination parse_termination(const std::string& s) {
    if (s == "closed_by_doctor") return Termination::ClosedByDoctor;
    if (s == "closed_by_patient") return Termination::ClosedByPatient;
    if (s == "cap_reached") return Termination::CapReached;
    if (s == "failed") return Termination::Failed;
    throw ParseError("unknown termination label: " + s);
}

struct Message {
    int index = 0;
    Speaker speaker = Speaker::Doctor;
    std::string text;
};

struct Transcript {
    std::string conversation_id;
    std::string model_id;
    std::string patient_id;
    TaskCell cell{EncounterReason::Anxiety, EncounterObjective::Diagnosis};
    int repeat_index = 1;
    Termination termination = Termination::Failed;
    std::optional<bool> closure_reasonable;  // filled by the labeling pass
    std::vector<Message> messages;
    int patient_turns = 0;
    std::string failure_stage;    // empty unless termination == Failed
    std::string failure_message;  // empty unless termination == Failed
    std::vector<std::string> notes;
};

/// Renders a transcript with bracketed message indices, the form every
/// judging prompt and evidence reference uses.
inline std::string render_transcript(const Transcript& t) {
    std::string out;
    for (const auto& m : t.messages) {
        if (!out.empty()) out += "\n";
        out += "[" + std::to_string(m.index) + "] " + to_string(m.speaker) + ": " + m.text;
    }
    return out;
}

/// The doctor system prompt carries only the patient's name and the
/// encounter reason; everything else must be elicited in conversation.
inline std::string build_doctor_prompt(const std::string& patient_name,
                                       const std::string& encounter_reason) {
    if (patient_name.empty()) throw ValidationError("doctor prompt requires a patient name");
    if (encounter_reason.empty())
        throw ValidationError("doctor prompt requires an encounter reason");
    return replace_placeholders(kDoctorPromptTemplate, {{"patient_name", patient_name},
                                                        {"encounter_reason", encounter_reason}});
}

struct ClosureDetection {
    enum class Mode { Marker, Classifier } mode = Mode::Marker;
    std::string marker = "[END_OF_ENCOUNTER]";
    Backend* classifier = nullptr;  // required in Classifier mode
};

struct DoctorModel {
    std::string model_id;
    Backend* backend = nullptr;
    ClosureDetection closure;
    std::shared_ptr<RateLimiter> limiter;  // may be null
    std::string sampling_note = "provider-default";
};

namespace detail {

inline bool yes_no(const std::string& reply, bool fallback) {
    const std::string t = to_lower(trim(reply));
    if (t.rfind("yes", 0) == 0) return true;
    if (t.rfind("no", 0) == 0) return false;
    return fallback;
}

inline bool doctor_wants_dismissal(const ClosureDetection& cfg, const std::string& message,
                                   std::vector<std::string>& notes) {
    if (cfg.mode == ClosureDetection::Mode::Marker)
        return message.find(cfg.marker) != std::string::npos;
    if (!cfg.classifier) throw ValidationError("classifier closure mode without a classifier");
    const std::string prompt =
        replace_placeholders(kDismissalPromptTemplate, {{"message", message}});
    try {
        return yes_no(complete_with_retry(*cfg.classifier, prompt, {}, 2), false);
    } catch (const BackendError& e) {
        // Detection failure must not kill the conversation; the cap still bounds it.
        notes.push_back(std::string("dismissal classifier failed: ") + e.what());
        return false;
    }
}

}  // namespace detail

struct ConversationSetup {
    std::string conversation_id;
    int repeat_index = 1;
    int cap = 50;
    Timestamp start_time = 0;
    int seconds_per_message = 60;
};

/// Runs one full encounter. A dismissal by the doctor grants the patient one
/// final reply; a patient-side closure marker ends the conversation at once.
/// Patient-pipeline and doctor-backend failures terminate with Failed and
/// keep the partial transcript.
inline Transcript run_conversation(const DoctorModel& doctor, PatientAgentState& agent,
                                   const PatientBackends& patient_backends, Embedder& embedder,
                                   const PatientAgentConfig& patient_config,
                                   const ConversationSetup& setup) {
    if (setup.cap < 2) throw ValidationError("message cap must allow at least one exchange");
    if (!doctor.backend) throw ValidationError("doctor model has no backend");

    Transcript t;
    t.conversation_id = setup.conversation_id;
    t.model_id = doctor.model_id;
    t.patient_id = agent.packet->patient_id;
    t.repeat_index = setup.repeat_index;

    const std::string system = build_doctor_prompt(agent.packet->name, agent.context_reason);
    std::vector<ChatMessage> doctor_history;   // doctor = assistant
    std::vector<ChatMessage> patient_history;  // doctor = user
    Timestamp now = setup.start_time;

    try {
        while (true) {
            if (doctor.limiter) doctor.limiter->acquire();
            const std::string dmsg =
                complete_with_retry(*doctor.backend, system, doctor_history, 2);
            t.messages.push_back({static_cast<int>(t.messages.size()), Speaker::Doctor, dmsg});
            doctor_history.push_back({"assistant", dmsg});
            patient_history.push_back({"user", dmsg});
            now += setup.seconds_per_message;

            const bool dismissed = detail::doctor_wants_dismissal(doctor.closure, dmsg, t.notes);
            if (static_cast<int>(t.messages.size()) >= setup.cap) {
                t.termination = dismissed ? Termination::ClosedByDoctor : Termination::CapReached;
                break;
            }

            const PatientTurnOutcome reply = patient_turn(agent, dmsg, patient_backends, embedder,
                                                          patient_config, now, patient_history);
            t.messages.push_back(
                {static_cast<int>(t.messages.size()), Speaker::Patient, reply.reply});
            doctor_history.push_back({"user", reply.reply});
            patient_history.push_back({"assistant", reply.raw_reply});
            now += setup.seconds_per_message;

            if (dismissed) {
                t.termination = Termination::ClosedByDoctor;
                break;
            }
            if (agent.wants_closure) {
                t.termination = Termination::ClosedByPatient;
                break;
            }
            if (static_cast<int>(t.messages.size()) >= setup.cap) {
                t.termination = Termination::CapReached;
                break;
            }
        }
    } catch (const PatientTurnError& e) {
        t.termination = Termination::Failed;
        t.failure_stage = e.stage();
        t.failure_message = e.what();
    } catch (const BackendError& e) {
        t.termination = Termination::Failed;
        t.failure_stage = "doctor";
        t.failure_message = e.what();
    }

    t.cell = agent.cell;
    for (const auto& m : t.messages)
        if (m.speaker == Speaker::Patient) ++t.patient_turns;
    return t;
}

/// Post-hoc label: was ending the conversation reasonable at that point?
/// nullopt means the classifier did not produce a usable yes/no.
inline std::optional<bool> classify_closure(const Transcript& t, Backend& classifier) {
    const std::string prompt = replace_placeholders(
        kClosurePromptTemplate, {{"transcript", render_transcript(t)},
                                 {"termination", to_string(t.termination)}});
    try {
        const std::string reply = detail::to_lower(detail::trim(
            complete_with_retry(classifier, prompt, {}, 2)));
        if (reply.rfind("yes", 0) == 0) return true;
        if (reply.rfind("no", 0) == 0) return false;
        return std::nullopt;
    } catch (const BackendError&) {
        return std::nullopt;
    }
}

// ---- Transcript storage (one JSONL file per conversation) ----

inline void save_transcript(const Transcript& t, const std::filesystem::path& path) {
    nlohmann::json header;
    header["type"] = "header";
    header["conversation_id"] = t.conversation_id;
    header["model_id"] = t.model_id;
    header["patient_id"] = t.patient_id;
    header["encounter_reason"] = std::string(to_id(t.cell.reason));
    header["encounter_objective"] = std::string(to_id(t.cell.objective));
    header["repeat_index"] = t.repeat_index;
    header["termination"] = to_string(t.termination);
    if (t.closure_reasonable.has_value())
        header["closure_reasonable"] = *t.closure_reasonable;
    else
        header["closure_reasonable"] = nullptr;
    header["patient_turns"] = t.patient_turns;
    header["failure_stage"] = t.failure_stage;
    header["failure_message"] = t.failure_message;
    header["notes"] = t.notes;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write transcript: " + path.string());
    out << header.dump() << "\n";
    for (const auto& m : t.messages) {
        nlohmann::json line;
        line["type"] = "message";
        line["index"] = m.index;
        line["speaker"] = to_string(m.speaker);
        line["text"] = m.text;
        out << line.dump() << "\n";
    }
}

inline Transcript load_transcript(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read transcript: " + path.string());
    Transcript t;
    std::string line;
    bool saw_header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        const std::string type = j.value("type", "");
        if (type == "header") {
            if (saw_header) throw ParseError(path.string() + ": duplicate header record");
            saw_header = true;
            t.conversation_id = j.at("conversation_id").get<std::string>();
            t.model_id = j.at("model_id").get<std::string>();
            t.patient_id = j.at("patient_id").get<std::string>();
            t.cell = make_task_cell(parse_reason(j.at("encounter_reason").get<std::string>()),
                                    parse_objective(j.at("encounter_objective").get<std::string>()));
            t.repeat_index = j.at("repeat_index").get<int>();
            t.termination = parse_termination(j.at("termination").get<std::string>());
            if (j.contains("closure_reasonable") && !j.at("closure_reasonable").is_null())
                t.closure_reasonable = j.at("closure_reasonable").get<bool>();
            t.patient_turns = j.value("patient_turns", 0);
            t.failure_stage = j.value("failure_stage", "");
            t.failure_message = j.value("failure_message", "");
            if (j.contains("notes")) t.notes = j.at("notes").get<std::vector<std::string>>();
        } else if (type == "message") {
            if (!saw_header) throw ParseError(path.string() + ": message before header");
            Message m;
            m.index = j.at("index").get<int>();
            const std::string sp = j.at("speaker").get<std::string>();
            if (sp == "doctor") {
                m.speaker = Speaker::Doctor;
            } else if (sp == "patient") {
                m.speaker = Speaker::Patient;
            } else {
                throw ParseError(path.string() + ": unknown speaker: " + sp);
            }
            m.text = j.at("text").get<std::string>();
            if (m.index != static_cast<int>(t.messages.size()))
                throw ParseError(path.string() + ": non-contiguous message index " +
                                 std::to_string(m.index));
            t.messages.push_back(std::move(m));
        } else {
            throw ParseError(path.string() + ": unknown record type: " + type);
        }
    }
    if (!saw_header) throw ParseError(path.string() + ": missing header record");
    return t;
}

/// Loads every *.jsonl transcript in a directory, sorted by file name.
inline std::vector<Transcript> load_transcripts(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<Transcript> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(load_transcript(f));
    return out;
}

// ---- Campaign runner ----

struct CampaignConfig {
    int repeats = 3;
    int parallelism = 4;
    int cap = 50;
    int seconds_per_message = 60;
};

struct ConversationFailure {
    std::string conversation_id;
    std::string model_id;
    std::string patient_id;
    std::string stage;
    std::string message;
};

struct CampaignResult {
    std::vector<Transcript> transcripts;  // sorted by conversation_id
    std::vector<ConversationFailure> failures;
    std::map<std::pair<std::string, std::string>, int> completed;  // (model, patient)
};

inline std::string sanitize_id(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        out += ok ? c : '-';
    }
    return out.empty() ? std::string("x") : out;
}

inline std::string make_conversation_id(const std::string& model_id,
                                        const std::string& patient_id, int repeat) {
    return sanitize_id(model_id) + "__" + sanitize_id(patient_id) + "__r" +
           std::to_string(repeat);
}

/// Runs models x patients x repeats. Each conversation gets a fresh agent.
/// Worker threads share stateless backends; per-provider rate limiters live
/// on the DoctorModel.
inline CampaignResult run_campaign(const Cohort& cohort, const std::vector<DoctorModel>& models,
                                   const PatientBackends& patient_backends, Embedder& embedder,
                                   const PatientAgentConfig& patient_config,
                                   const CampaignConfig& config) {
    if (config.repeats < 1 || config.repeats > 3)
        throw ValidationError("repeats must be between 1 and 3");
    if (config.parallelism < 1) throw ValidationError("parallelism must be at least 1");
    if (models.empty()) throw ValidationError("campaign needs at least one doctor model");

    struct Job {
        const DoctorModel* model;
        const ManifestEntry* entry;
        int repeat;
    };
    std::vector<Job> jobs;
    for (const auto& model : models)
        for (const auto& entry : cohort.manifest)
            for (int r = 1; r <= config.repeats; ++r) jobs.push_back({&model, &entry, r});

    std::vector<Transcript> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& job = jobs[i];
            ConversationSetup setup;
            setup.conversation_id =
                make_conversation_id(job.model->model_id, job.entry->patient_id, job.repeat);
            setup.repeat_index = job.repeat;
            setup.cap = config.cap;
            setup.start_time = cohort.encounter_time;
            setup.seconds_per_message = config.seconds_per_message;
            try {
                const PatientPacket* packet = cohort.find_packet(job.entry->patient_id);
                if (!packet)
                    throw ValidationError("manifest entry without packet: " +
                                          job.entry->patient_id);
                PatientAgentState agent = make_patient_agent(*packet, job.entry->cell, embedder);
                results[i] = run_conversation(*job.model, agent, patient_backends, embedder,
                                              patient_config, setup);
            } catch (const std::exception& e) {
                // Packet or agent construction failed; record it as a failed run.
                Transcript t;
                t.conversation_id = setup.conversation_id;
                t.model_id = job.model->model_id;
                t.patient_id = job.entry->patient_id;
                t.cell = job.entry->cell;
                t.repeat_index = job.repeat;
                t.termination = Termination::Failed;
                t.failure_stage = "setup";
                t.failure_message = e.what();
                results[i] = std::move(t);
            }
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), jobs.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i + 1 < std::max<std::size_t>(n_threads, 1); ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    CampaignResult out;
    out.transcripts = std::move(results);
    std::sort(out.transcripts.begin(), out.transcripts.end(),
              [](const Transcript& a, const Transcript& b) {
                  return a.conversation_id < b.conversation_id;
              });
    for (const auto& t : out.transcripts) {
        if (t.termination == Termination::Failed) {
            out.failures.push_back({t.conversation_id, t.model_id, t.patient_id, t.failure_stage,
                                    t.failure_message});
        } else {
            out.completed[{t.model_id, t.patient_id}] += 1;
        }
    }
    return out;
}

/// Flat key-value campaign manifest. Line order is fixed by construction so
/// re-runs produce identical bytes.
inline void write_campaign_manifest(const CampaignResult& result,
                                    const std::vector<DoctorModel>& models,
                                    const CampaignConfig& config,
                                    const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write campaign manifest: " + path.string());
    out << "campaign.cap: " << config.cap << "\n";
    out << "campaign.parallelism: " << config.parallelism << "\n";
    out << "campaign.repeats: " << config.repeats << "\n";
    out << "campaign.seconds_per_message: " << config.seconds_per_message << "\n";
    for (const auto& m : models) {
        int conversations = 0, failures = 0;
        for (const auto& t : result.transcripts) {
            if (t.model_id != m.model_id) continue;
            ++conversations;
            if (t.termination == Termination::Failed) ++failures;
        }
        const std::string key = sanitize_id(m.model_id);
        out << "model." << key << ".sampling: " << m.sampling_note << "\n";
        out << "model." << key << ".conversations: " << conversations << "\n";
        out << "model." << key << ".failures: " << failures << "\n";
    }
    for (const auto& [pair, count] : result.completed)
        out << "pair." << sanitize_id(pair.first) << "." << sanitize_id(pair.second)
            << ".completed: " << count << "\n";
    out << "total.conversations: " << result.transcripts.size() << "\n";
    out << "total.failed: " << result.failures.size() << "\n";
}

}  // namespace clinsim

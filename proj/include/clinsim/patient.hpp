#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "clinsim/affect.hpp"
#include "clinsim/backend.hpp"
#include "clinsim/embedding.hpp"
#include "clinsim/memory.hpp"
#include "clinsim/packet.hpp"
#include "clinsim/prompts.hpp"
#include "clinsim/task_matrix.hpp"

// The AI-patient agent. One turn composes effort classification, memory
// retrieval, the emotion-state update, reflection storage, and reply
// generation, in that order.

namespace clinsim {

struct PatientBackends {
    Backend* effort = nullptr;
    Backend* emotion = nullptr;
    Backend* responder = nullptr;
};

struct PatientAgentConfig {
    std::size_t top_k = 5;
    RetrievalWeights weights;
    std::string closure_marker = "[END_OF_ENCOUNTER]";
    int transport_retries = 2;
    std::size_t conversation_window = 8;  // messages shown to the emotion backend
    std::string responder_template;       // empty = built-in default
};

struct PatientAgentState {
    const PatientPacket* packet = nullptr;
    TaskCell cell{EncounterReason::Anxiety, EncounterObjective::Diagnosis};
    std::string persona;
    std::string context;
    std::string context_reason;  // display form, also used in the doctor prompt
    MemoryStore store;
    EmotionState emotion;
    std::set<std::string> disclosed;
    int turn_index = 0;
    bool wants_closure = false;
};

namespace detail {

inline std::string demographic_line(const PatientPacket& p) {
    return std::string("Gender: ") + std::string(gender_table().name(p.gender)) +
           "; race/ethnicity: " + std::string(race_table().name(p.race_ethnicity)) +
           "; education: " + std::string(education_table().name(p.education)) +
           "; socioeconomic status: " + std::string(ses_table().name(p.ses));
}

}  // namespace detail

/// Instantiates a fresh agent from a packet: seeds the memory log and
/// starts from a neutral emotional state.
inline PatientAgentState make_patient_agent(const PatientPacket& packet, const TaskCell& cell,
                                            Embedder& embedder) {
    PatientAgentState state;
    state.packet = &packet;
    state.cell = cell;
    state.persona = "Name: " + packet.name + "\nBorn: " + format_iso_date(packet.birth_date) +
                    "\n" + detail::demographic_line(packet);
    if (!packet.persona_notes.empty()) state.persona += "\nNotes: " + packet.persona_notes;
    state.context_reason = std::string(display_name(cell.reason));
    state.context = "A text-chat medical consultation you booked because of " +
                    state.context_reason + "; what you want from the visit is " +
                    std::string(display_name(cell.objective)) + ".";
    for (auto& m : seed_memories(packet, embedder, packet.encounter_time)) state.store.add(std::move(m));
    return state;
}

/// Deterministic prompt block handed to the responder: persona, the top-3
/// current emotions, retrieved memories oldest-first, and the size of the
/// disclosure ledger.
inline std::string build_patient_context(const PatientAgentState& state,
                                         const std::vector<RetrievedMemory>& retrieved) {
    std::string out = "## Who you are\n" + state.persona + "\n\n## Setting\n" + state.context;

    std::array<std::size_t, kEmotionCount> order;
    for (std::size_t i = 0; i < kEmotionCount; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return state.emotion.emotions[a] > state.emotion.emotions[b];
    });
    out += "\n\n## How you feel right now\n";
    for (std::size_t i = 0; i < 3; ++i) {
        if (i) out += ", ";
        out += std::string(kEmotionNames[order[i]]) + " " +
               std::to_string(state.emotion.emotions[order[i]]);
    }
    out += " (valence " + std::to_string(state.emotion.valence) + ", arousal " +
           std::to_string(state.emotion.arousal) + ")";

    std::vector<const MemoryRecord*> oldest_first;
    oldest_first.reserve(retrieved.size());
    for (const auto& r : retrieved) oldest_first.push_back(&r.record);
    std::stable_sort(oldest_first.begin(), oldest_first.end(),
                     [](const MemoryRecord* a, const MemoryRecord* b) {
                         if (a->created_at != b->created_at) return a->created_at < b->created_at;
                         return a->memory_id < b->memory_id;
                     });
    out += "\n\n## Memories that came to mind\n";
    if (oldest_first.empty()) {
        out += "none";
    } else {
        for (std::size_t i = 0; i < oldest_first.size(); ++i) {
            if (i) out += "\n";
            out += "- [" + oldest_first[i]->memory_id + "] " + oldest_first[i]->text;
        }
    }
    out += "\n\n## Disclosure ledger\n" + std::to_string(state.disclosed.size()) +
           " memories already shared with the doctor";
    return out;
}

struct ResponderOutput {
    std::string reply;      // marker and trailer stripped
    std::string raw_reply;  // exactly what the backend produced
    bool closure = false;
    std::vector<std::string> used_memory_ids;
};

/// Splits the responder's reply into plain text, the optional closure
/// marker line, and the used-memory-ids trailer.
inline ResponderOutput parse_responder_output(const std::string& raw,
                                              const std::string& closure_marker) {
    ResponderOutput out;
    out.raw_reply = raw;
    std::vector<std::string> kept;
    for (const std::string& line : detail::split_lines(raw)) {
        const std::string trimmed = detail::trim(line);
        if (trimmed == closure_marker) {
            out.closure = true;
            continue;
        }
        if (trimmed.rfind("used_memories:", 0) == 0) {
            std::string ids = detail::trim(trimmed.substr(std::string("used_memories:").size()));
            if (ids != "none" && !ids.empty()) {
                std::size_t start = 0;
                while (start <= ids.size()) {
                    std::size_t comma = ids.find(',', start);
                    const std::string id = detail::trim(
                        comma == std::string::npos ? ids.substr(start)
                                                   : ids.substr(start, comma - start));
                    if (!id.empty()) out.used_memory_ids.push_back(id);
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            }
            continue;
        }
        kept.push_back(line);
    }
    while (!kept.empty() && detail::trim(kept.back()).empty()) kept.pop_back();
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i) out.reply += "\n";
        out.reply += kept[i];
    }
    return out;
}

struct PatientTurnOutcome {
    std::string reply;      // transcript text (stripped)
    std::string raw_reply;  // for the responder's own history
};

namespace detail {

inline std::string render_chat(const std::vector<ChatMessage>& messages, std::size_t window) {
    const std::size_t begin = messages.size() > window ? messages.size() - window : 0;
    std::string out;
    for (std::size_t i = begin; i < messages.size(); ++i) {
        if (!out.empty()) out += "\n";
        out += (messages[i].role == "user" ? "Doctor: " : "Patient: ") + messages[i].content;
    }
    return out.empty() ? "(no prior messages)" : out;
}

}  // namespace detail

/// One full patient turn. `conversation` is the dialogue from the patient's
/// point of view (doctor = user, patient = assistant) including the current
/// doctor message as its last entry. Any backend failure aborts the turn
/// with the pipeline stage attached.
inline PatientTurnOutcome patient_turn(PatientAgentState& state, const std::string& doctor_message,
                                       const PatientBackends& backends, Embedder& embedder,
                                       const PatientAgentConfig& config, Timestamp now,
                                       const std::vector<ChatMessage>& conversation) {
    if (detail::trim(doctor_message).empty())
        throw ValidationError("patient_turn requires a non-empty doctor message");

    // 1. Effort classification.
    CognitiveEffort effort;
    try {
        effort = classify_cognitive_effort(doctor_message, state.context, *backends.effort);
    } catch (const std::exception& e) {
        throw PatientTurnError("effort", e.what());
    }

    // 2. Retrieval, doctor message as query, current emotions as mood.
    std::vector<RetrievedMemory> hits;
    std::string retrieval_summary;
    try {
        const std::vector<double> query = embedder.embed(doctor_message);
        hits = state.store.retrieve(query, state.emotion.unit(), now, config.top_k, config.weights);
        if (hits.empty()) {
            retrieval_summary = "none";
        } else {
            for (std::size_t i = 0; i < hits.size(); ++i) {
                if (i) retrieval_summary += "\n";
                retrieval_summary += "- " + hits[i].record.text;
            }
        }
    } catch (const std::exception& e) {
        throw PatientTurnError("retrieval", e.what());
    }

    // 3. Emotion-state update.
    EmotionUpdate update;
    try {
        std::vector<ChatMessage> prior(conversation.begin(),
                                       conversation.empty() ? conversation.end()
                                                            : conversation.end() - 1);
        EmotionUpdateInputs in;
        in.persona = state.persona;
        in.interlocutor = "Doctor AI";
        in.context = state.context;
        in.conversation = detail::render_chat(prior, config.conversation_window);
        in.recent_message = doctor_message;
        in.effort = effort;
        in.retrieval_summary = retrieval_summary;
        update = update_emotion_state(in, *backends.emotion, config.transport_retries);
    } catch (const std::exception& e) {
        throw PatientTurnError("emotion", e.what());
    }
    update.state.updated_at_turn = 2 * state.turn_index;  // index of the doctor message
    state.emotion = update.state;

    // 4. Store the reflection as a new memory.
    try {
        MemoryRecord refl;
        char id[16];
        std::snprintf(id, sizeof(id), "refl-%03d", state.turn_index);
        refl.memory_id = id;
        refl.text = update.reflection.text;
        refl.embedding = embedder.embed(refl.text);
        refl.emotions = state.emotion.unit();
        refl.importance = update.reflection.importance();
        refl.created_at = now;
        refl.last_accessed = now;
        state.store.add(std::move(refl));
    } catch (const std::exception& e) {
        throw PatientTurnError("reflection", e.what());
    }

    // 5. Reply generation.
    ResponderOutput parsed;
    try {
        const std::string& tmpl = config.responder_template.empty()
                                      ? std::string(kResponderPromptTemplate)
                                      : config.responder_template;
        const std::string prompt = replace_placeholders(
            tmpl, {{"patient_context", build_patient_context(state, hits)},
                   {"closure_marker", config.closure_marker}});
        const std::string raw = complete_with_retry(*backends.responder, prompt, conversation,
                                                    config.transport_retries);
        parsed = parse_responder_output(raw, config.closure_marker);
    } catch (const std::exception& e) {
        throw PatientTurnError("responder", e.what());
    }

    // 6. Disclosure ledger; ids not present in the store are dropped.
    for (const auto& id : parsed.used_memory_ids)
        if (state.store.contains(id)) state.disclosed.insert(id);

    // 7. Closure intent.
    if (parsed.closure) state.wants_closure = true;

    state.turn_index += 1;
    return {parsed.reply, parsed.raw_reply};
}

}  // namespace clinsim

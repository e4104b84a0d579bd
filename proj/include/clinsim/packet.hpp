#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "clinsim/clock.hpp"
#include "clinsim/embedding.hpp"
#include "clinsim/errors.hpp"
#include "clinsim/memory.hpp"

// Patient Packets: the ground-truth synthetic records a patient agent is
// instantiated from. The file format is a flat JSON document per patient.

namespace clinsim {

enum class Gender { Female, Male };
enum class RaceEthnicity { Asian, Black, Hispanic, Native, Other, White };
enum class Education { LessThanHs, HsDegree, SomeCollege, BsDegree };
enum class Ses { Low, Middle, High };
enum class EventKind { Diagnosis, Medication, Allergy, Procedure, LifeEvent };

namespace detail {

template <typename Enum>
struct EnumTable {
    const char* field;
    std::vector<std::pair<std::string_view, Enum>> entries;

    std::string_view name(Enum v) const {
        for (const auto& [n, e] : entries)
            if (e == v) return n;
        return "?";
    }

    Enum parse(std::string_view s) const {
        for (const auto& [n, e] : entries)
            if (n == s) return e;
        throw ValidationError(std::string(field) + " value '" + std::string(s) +
                              "' is not a recognized category");
    }
};

inline const EnumTable<Gender>& gender_table() {
    static const EnumTable<Gender> t{"gender", {{"female", Gender::Female}, {"male", Gender::Male}}};
    return t;
}

inline const EnumTable<RaceEthnicity>& race_table() {
    static const EnumTable<RaceEthnicity> t{"race_ethnicity",
                                            {{"asian", RaceEthnicity::Asian},
                                             {"black", RaceEthnicity::Black},
                                             {"hispanic", RaceEthnicity::Hispanic},
                                             {"native", RaceEthnicity::Native},
                                             {"other", RaceEthnicity::Other},
                                             {"white", RaceEthnicity::White}}};
    return t;
}

inline const EnumTable<Education>& education_table() {
    static const EnumTable<Education> t{"education",
                                        {{"less_than_hs", Education::LessThanHs},
                                         {"hs_degree", Education::HsDegree},
                                         {"some_college", Education::SomeCollege},
                                         {"bs_degree", Education::BsDegree}}};
    return t;
}

inline const EnumTable<Ses>& ses_table() {
    static const EnumTable<Ses> t{"ses", {{"low", Ses::Low}, {"middle", Ses::Middle}, {"high", Ses::High}}};
    return t;
}

inline const EnumTable<EventKind>& kind_table() {
    static const EnumTable<EventKind> t{"kind",
                                        {{"diagnosis", EventKind::Diagnosis},
                                         {"medication", EventKind::Medication},
                                         {"allergy", EventKind::Allergy},
                                         {"procedure", EventKind::Procedure},
                                         {"life_event", EventKind::LifeEvent}}};
    return t;
}

}  // namespace detail

struct ClinicalEvent {
    EventKind kind = EventKind::Diagnosis;
    std::string code;
    std::string display;
    Timestamp onset = 0;
    std::optional<Timestamp> resolved;
    double salience = 0.5;
};

struct Observation {
    std::string code;
    std::string display;
    double value = 0.0;
    std::string unit;
    Timestamp taken_at = 0;
};

struct PatientPacket {
    std::string patient_id;
    std::string name;
    Timestamp birth_date = 0;
    Gender gender = Gender::Female;
    RaceEthnicity race_ethnicity = RaceEthnicity::Other;
    Education education = Education::HsDegree;
    Ses ses = Ses::Middle;
    std::vector<ClinicalEvent> conditions;
    std::vector<ClinicalEvent> medications;
    std::vector<ClinicalEvent> allergies;
    std::vector<Observation> observations;
    std::string persona_notes;
    Timestamp encounter_time = 0;  // validation context, set at parse time
};

namespace detail {

inline std::string require_string(const nlohmann::json& j, const char* field) {
    if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'");
    if (!j[field].is_string())
        throw ParseError(std::string("field '") + field + "' must be a string");
    return j[field].get<std::string>();
}

inline Timestamp parse_event_timestamp(const nlohmann::json& j, const char* field,
                                       const std::string& where) {
    if (!j.contains(field))
        throw ParseError("missing field '" + std::string(field) + "' in " + where);
    if (!j[field].is_string())
        throw ParseError("field '" + std::string(field) + "' in " + where + " must be a string");
    return parse_iso8601(j[field].get<std::string>());
}

inline ClinicalEvent parse_event(const nlohmann::json& j, EventKind default_kind,
                                 const std::string& list_name, std::size_t index) {
    const std::string where = list_name + "[" + std::to_string(index) + "]";
    if (!j.is_object()) throw ParseError(where + " must be an object");
    ClinicalEvent ev;
    ev.kind = j.contains("kind") ? kind_table().parse(j["kind"].get<std::string>()) : default_kind;
    ev.code = require_string(j, "code");
    ev.display = require_string(j, "display");
    ev.onset = parse_event_timestamp(j, "onset", where);
    if (j.contains("resolved") && !j["resolved"].is_null())
        ev.resolved = parse_event_timestamp(j, "resolved", where);
    if (j.contains("salience")) {
        if (!j["salience"].is_number()) throw ParseError("salience in " + where + " must be a number");
        ev.salience = j["salience"].get<double>();
    }
    if (!(ev.salience >= 0.0 && ev.salience <= 1.0))
        throw ValidationError("salience outside [0,1] on " + where + " ('" + ev.display + "')");
    if (ev.resolved && *ev.resolved < ev.onset)
        throw ValidationError("event '" + ev.display + "' in " + list_name +
                              " resolved before its onset");
    return ev;
}

inline Observation parse_observation(const nlohmann::json& j, std::size_t index) {
    const std::string where = "observations[" + std::to_string(index) + "]";
    if (!j.is_object()) throw ParseError(where + " must be an object");
    Observation ob;
    ob.code = require_string(j, "code");
    ob.display = require_string(j, "display");
    if (!j.contains("value") || !j["value"].is_number())
        throw ParseError("field 'value' in " + where + " must be a number");
    ob.value = j["value"].get<double>();
    if (!std::isfinite(ob.value)) throw ValidationError("non-finite value in " + where);
    ob.unit = require_string(j, "unit");
    if (ob.unit.empty()) throw ValidationError("empty unit in " + where);
    ob.taken_at = parse_event_timestamp(j, "taken_at", where);
    return ob;
}

}  // namespace detail

/// Parses and validates one packet document. `encounter_time` anchors the
/// rule that no event may postdate the encounter. Unknown optional fields
/// are ignored.
inline PatientPacket parse_packet(const nlohmann::json& doc, Timestamp encounter_time) {
    if (!doc.is_object()) throw ParseError("packet document must be a JSON object");
    PatientPacket p;
    p.encounter_time = encounter_time;
    p.patient_id = detail::require_string(doc, "patient_id");
    if (p.patient_id.empty()) throw ValidationError("patient_id must be non-empty");
    p.name = detail::require_string(doc, "name");
    p.birth_date = parse_iso8601(detail::require_string(doc, "birth_date"));
    p.gender = detail::gender_table().parse(detail::require_string(doc, "gender"));
    p.race_ethnicity = detail::race_table().parse(detail::require_string(doc, "race_ethnicity"));
    p.education = detail::education_table().parse(detail::require_string(doc, "education"));
    p.ses = detail::ses_table().parse(detail::require_string(doc, "ses"));

    auto parse_events = [&](const char* field, EventKind kind, std::vector<ClinicalEvent>& out) {
        if (!doc.contains(field)) return;
        if (!doc[field].is_array())
            throw ParseError(std::string("field '") + field + "' must be an array");
        std::size_t i = 0;
        for (const auto& item : doc[field]) out.push_back(detail::parse_event(item, kind, field, i++));
    };
    parse_events("conditions", EventKind::Diagnosis, p.conditions);
    parse_events("medications", EventKind::Medication, p.medications);
    parse_events("allergies", EventKind::Allergy, p.allergies);

    if (doc.contains("observations")) {
        if (!doc["observations"].is_array())
            throw ParseError("field 'observations' must be an array");
        std::size_t i = 0;
        for (const auto& item : doc["observations"])
            p.observations.push_back(detail::parse_observation(item, i++));
    }
    if (doc.contains("persona_notes")) p.persona_notes = doc["persona_notes"].get<std::string>();

    for (const auto* list : {&p.conditions, &p.medications, &p.allergies})
        for (const auto& ev : *list) {
            if (ev.onset > encounter_time)
                throw ValidationError("event '" + ev.display + "' of patient '" + p.patient_id +
                                      "' starts after the encounter date");
            if (ev.resolved && *ev.resolved > encounter_time)
                throw ValidationError("event '" + ev.display + "' of patient '" + p.patient_id +
                                      "' resolves after the encounter date");
        }
    for (const auto& ob : p.observations)
        if (ob.taken_at > encounter_time)
            throw ValidationError("observation '" + ob.display + "' of patient '" + p.patient_id +
                                  "' taken after the encounter date");
    return p;
}

inline nlohmann::json serialize_packet(const PatientPacket& p) {
    nlohmann::json doc;
    doc["patient_id"] = p.patient_id;
    doc["name"] = p.name;
    doc["birth_date"] = format_iso_date(p.birth_date);
    doc["gender"] = std::string(detail::gender_table().name(p.gender));
    doc["race_ethnicity"] = std::string(detail::race_table().name(p.race_ethnicity));
    doc["education"] = std::string(detail::education_table().name(p.education));
    doc["ses"] = std::string(detail::ses_table().name(p.ses));

    auto emit_events = [](const std::vector<ClinicalEvent>& events) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& ev : events) {
            nlohmann::json e;
            e["kind"] = std::string(detail::kind_table().name(ev.kind));
            e["code"] = ev.code;
            e["display"] = ev.display;
            e["onset"] = format_iso8601(ev.onset);
            if (ev.resolved) e["resolved"] = format_iso8601(*ev.resolved);
            e["salience"] = ev.salience;
            arr.push_back(std::move(e));
        }
        return arr;
    };
    doc["conditions"] = emit_events(p.conditions);
    doc["medications"] = emit_events(p.medications);
    doc["allergies"] = emit_events(p.allergies);

    nlohmann::json obs = nlohmann::json::array();
    for (const auto& ob : p.observations) {
        nlohmann::json o;
        o["code"] = ob.code;
        o["display"] = ob.display;
        o["value"] = ob.value;
        o["unit"] = ob.unit;
        o["taken_at"] = format_iso8601(ob.taken_at);
        obs.push_back(std::move(o));
    }
    doc["observations"] = obs;
    doc["persona_notes"] = p.persona_notes;
    return doc;
}

struct Violation {
    std::string patient_id;
    std::string field;
    std::string message;
};

/// Cross-packet checks; violations are data, not errors.
inline std::vector<Violation> validate_cohort(const std::vector<PatientPacket>& packets) {
    std::vector<Violation> out;
    std::set<std::string> seen;
    for (const auto& p : packets) {
        if (p.patient_id.empty())
            out.push_back({p.patient_id, "patient_id", "patient_id is empty"});
        else if (!seen.insert(p.patient_id).second)
            out.push_back({p.patient_id, "patient_id", "duplicate patient_id in cohort"});
        for (const auto* list : {&p.conditions, &p.medications, &p.allergies})
            for (const auto& ev : *list) {
                if (ev.resolved && *ev.resolved < ev.onset)
                    out.push_back({p.patient_id, ev.display, "resolved precedes onset"});
                if (!(ev.salience >= 0.0 && ev.salience <= 1.0))
                    out.push_back({p.patient_id, ev.display, "salience outside [0,1]"});
                if (ev.onset > p.encounter_time)
                    out.push_back({p.patient_id, ev.display, "onset after encounter date"});
            }
        for (const auto& ob : p.observations)
            if (ob.taken_at > p.encounter_time)
                out.push_back({p.patient_id, ob.display, "observation after encounter date"});
    }
    return out;
}

namespace detail {

inline std::string event_memory_text(const ClinicalEvent& ev) {
    const std::string date = format_iso_date(ev.onset);
    std::string text;
    switch (ev.kind) {
        case EventKind::Diagnosis:
            text = "I was diagnosed with " + ev.display + " on " + date + ".";
            break;
        case EventKind::Medication:
            text = "I started taking " + ev.display + " on " + date + ".";
            break;
        case EventKind::Allergy:
            text = "I found out on " + date + " that I am allergic to " + ev.display + ".";
            break;
        case EventKind::Procedure:
            text = "I had " + ev.display + " on " + date + ".";
            break;
        case EventKind::LifeEvent:
            text = "On " + date + ", " + ev.display + ".";
            break;
    }
    if (ev.resolved) text += " It resolved on " + format_iso_date(*ev.resolved) + ".";
    return text;
}

}  // namespace detail

/// Derives the initial memory log: one record per clinical event, plus one
/// summary record per distinct observation code. Seeded memories start
/// emotionally neutral (all-zero vector).
inline std::vector<MemoryRecord> seed_memories(const PatientPacket& packet, Embedder& embedder,
                                               Timestamp encounter_time) {
    std::vector<MemoryRecord> out;
    auto embed_or_raise = [&](const std::string& text) {
        try {
            return embedder.embed(text);
        } catch (const std::exception& e) {
            throw BackendError("embedding failed for memory \"" + text + "\": " + e.what(),
                               /*transport_failure=*/false);
        }
    };

    std::size_t index = 0;
    for (const auto* list : {&packet.conditions, &packet.medications, &packet.allergies})
        for (const auto& ev : *list) {
            MemoryRecord m;
            char id[16];
            std::snprintf(id, sizeof(id), "ev-%03zu", index++);
            m.memory_id = id;
            m.text = detail::event_memory_text(ev);
            m.embedding = embed_or_raise(m.text);
            m.importance = ev.salience;
            m.created_at = ev.onset;
            m.last_accessed = ev.onset;
            out.push_back(std::move(m));
        }

    // Observations with the same code collapse into one summary memory.
    std::vector<std::string> code_order;
    std::map<std::string, std::vector<const Observation*>> by_code;
    for (const auto& ob : packet.observations) {
        auto& group = by_code[ob.code];
        if (group.empty()) code_order.push_back(ob.code);
        group.push_back(&ob);
    }
    for (const auto& code : code_order) {
        const auto& group = by_code[code];
        const Observation* latest = group.front();
        Timestamp first = latest->taken_at;
        for (const Observation* ob : group) {
            if (ob->taken_at > latest->taken_at) latest = ob;
            if (ob->taken_at < first) first = ob->taken_at;
        }
        char value_buf[32];
        std::snprintf(value_buf, sizeof(value_buf), "%g", latest->value);
        MemoryRecord m;
        m.memory_id = "obs-" + code;
        if (group.size() == 1) {
            m.text = "My " + latest->display + " was measured at " + value_buf + " " +
                     latest->unit + " on " + format_iso_date(latest->taken_at) + ".";
        } else {
            m.text = "My " + latest->display + " was checked " + std::to_string(group.size()) +
                     " times between " + format_iso_date(first) + " and " +
                     format_iso_date(latest->taken_at) + "; the most recent reading was " +
                     value_buf + " " + latest->unit + ".";
        }
        m.embedding = embed_or_raise(m.text);
        m.importance = 0.5;
        m.created_at = latest->taken_at;
        m.last_accessed = latest->taken_at;
        out.push_back(std::move(m));
    }

    for (const auto& m : out)
        if (m.created_at > encounter_time)
            throw ValidationError("seeded memory '" + m.memory_id + "' postdates the encounter");
    return out;
}

}  // namespace clinsim

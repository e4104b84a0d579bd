#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "clinsim/cohort.hpp"
#include "clinsim/hashing.hpp"
#include "clinsim/packet.hpp"
#include "clinsim/task_matrix.hpp"

// Synthetic cohort generator. Produces 366 packets whose task-matrix cell
// counts and demographic marginals follow the released distribution exactly;
// joint attributes are pseudo-random under a fixed seed. The generated files
// are committed, so regeneration is only needed when templates change.

namespace clinsim {

struct CohortGenConfig {
    std::uint64_t seed = 24061;
    std::string encounter_date = "2025-06-02T09:00:00Z";
};

namespace gen {

// Small deterministic PRNG (xorshift*), stable across platforms; std
// distributions are implementation-defined and would tie the data to one
// standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545f4914f6cdd1dull;
    }

    // Uniform in [0, n)
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    int range(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    bool chance(int percent) { return static_cast<int>(below(100)) < percent; }

    double real(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(next() >> 11) / 9007199254740992.0);
    }

private:
    std::uint64_t state_;
};

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

/// Expands {value: count} pairs into a flat multiset.
template <typename T>
std::vector<T> expand(std::initializer_list<std::pair<T, int>> spec) {
    std::vector<T> out;
    for (const auto& [value, count] : spec)
        for (int i = 0; i < count; ++i) out.push_back(value);
    return out;
}

inline const std::vector<std::string>& female_names() {
    static const std::vector<std::string> v = {
        "Aiko",  "Amara", "Beatriz", "Chen",   "Dana",   "Elena",  "Fatima", "Grace",
        "Hana",  "Ingrid", "Jade",   "Keiko",  "Leila",  "Mei",    "Nadia",  "Olivia",
        "Priya", "Rosa",  "Sofia",   "Tara",   "Uma",    "Valeria", "Wendy", "Yuki"};
    return v;
}

inline const std::vector<std::string>& male_names() {
    static const std::vector<std::string> v = {
        "Ahmed", "Bruno", "Carlos", "Daniel", "Emil",  "Felix", "Gabriel", "Hiroshi",
        "Ivan",  "Jamal", "Kenji",  "Liam",   "Mateo", "Noah",  "Omar",    "Pavel",
        "Quan",  "Ravi",  "Samuel", "Tomas",  "Umar",  "Victor", "Wei",    "Yusuf"};
    return v;
}

inline const std::vector<std::string>& surnames() {
    static const std::vector<std::string> v = {
        "Abe",      "Becker",  "Chen",     "Diaz",    "Eriksen", "Fujita",  "Garcia",
        "Hassan",   "Ito",     "Johnson",  "Kim",     "Lee",     "Mori",    "Nakamura",
        "Okafor",   "Park",    "Quintero", "Rossi",   "Sato",    "Tanaka",  "Umeda",
        "Vasquez",  "Wang",    "Xu",       "Yamamoto", "Zhou",   "Olsen",   "Petrov",
        "Silva",    "Takahashi", "Novak",  "Weber",   "Kaur",    "Moreau",  "Costa",
        "Dubois",   "Hernandez", "Iqbal",  "Jensen",  "Klein"};
    return v;
}

inline const std::vector<std::string>& persona_note_pool() {
    static const std::vector<std::string> v = {
        "Tends to downplay symptoms until directly asked.",
        "Prefers plain explanations without medical jargon.",
        "Worries a lot about medication side effects.",
        "Keeps a written log of symptoms and brings notes.",
        "Gets flustered when rushed and needs a moment to answer.",
        "Skeptical of new medications after a bad past reaction.",
        "Asks many follow-up questions before agreeing to a plan.",
        "Often consults online sources and arrives with theories.",
        "Reserved at first and opens up slowly.",
        "Talks around difficult topics instead of naming them.",
        "Juggles caregiving duties and struggles to find time for appointments.",
        "Is on a tight budget and asks about cheaper options.",
        "Travels frequently for work and sometimes misses doses.",
        "Values second opinions and double-checks recommendations."};
    return v;
}

inline ClinicalEvent event(EventKind kind, std::string code, std::string display,
                           Timestamp onset, double salience) {
    ClinicalEvent ev;
    ev.kind = kind;
    ev.code = std::move(code);
    ev.display = std::move(display);
    ev.onset = onset;
    ev.salience = salience;
    return ev;
}

inline Observation obs(std::string code, std::string display, double value, std::string unit,
                       Timestamp taken_at) {
    Observation o;
    o.code = std::move(code);
    o.display = std::move(display);
    o.value = value;
    o.unit = std::move(unit);
    o.taken_at = taken_at;
    return o;
}

/// Fills the reason-specific clinical story of one packet.
inline void fill_clinical_content(PatientPacket& p, EncounterReason reason, Rng& rng,
                                  Timestamp enc) {
    auto days_ago = [&](int lo, int hi) { return enc - static_cast<Timestamp>(rng.range(lo, hi)) * 86400; };
    const Timestamp recent = days_ago(3, 21);

    switch (reason) {
        case EncounterReason::Anxiety:
            p.conditions.push_back(event(EventKind::Diagnosis, "F41.1",
                                         "generalized anxiety disorder", days_ago(200, 900), 0.9));
            if (rng.chance(50))
                p.conditions.push_back(
                    event(EventKind::Diagnosis, "G47.00", "insomnia", days_ago(60, 400), 0.6));
            if (rng.chance(60))
                p.medications.push_back(event(EventKind::Medication, "sertraline",
                                              "sertraline 50 mg daily", days_ago(30, 300), 0.6));
            p.observations.push_back(
                obs("70274-6", "GAD-7 anxiety score", rng.range(10, 19), "score", recent));
            break;
        case EncounterReason::Asthma:
            p.conditions.push_back(
                event(EventKind::Diagnosis, "J45.909", "asthma", days_ago(1000, 4000), 0.9));
            p.medications.push_back(event(EventKind::Medication, "albuterol",
                                          "albuterol inhaler as needed", days_ago(900, 3900),
                                          0.7));
            if (rng.chance(40))
                p.medications.push_back(event(EventKind::Medication, "fluticasone",
                                              "fluticasone inhaler daily", days_ago(100, 800),
                                              0.5));
            if (rng.chance(40))
                p.allergies.push_back(event(EventKind::Allergy, "dust-mites", "dust mites",
                                            days_ago(1000, 4000), 0.5));
            p.observations.push_back(obs("33452-4", "peak expiratory flow", rng.range(250, 450),
                                         "L/min", recent));
            p.observations.push_back(
                obs("82674-0", "asthma control score", rng.range(12, 22), "score", recent));
            break;
        case EncounterReason::BreastCancer:
            p.conditions.push_back(event(EventKind::Diagnosis, "C50.911",
                                         "breast cancer, stage II", days_ago(100, 400), 1.0));
            if (rng.chance(60))
                p.conditions.push_back(event(EventKind::Procedure, "lumpectomy", "a lumpectomy",
                                             days_ago(30, 90), 0.9));
            if (rng.chance(70))
                p.medications.push_back(event(EventKind::Medication, "tamoxifen",
                                              "tamoxifen 20 mg daily", days_ago(20, 90), 0.8));
            p.observations.push_back(
                obs("6875-9", "CA 15-3 tumor marker", rng.range(15, 40), "U/mL", recent));
            break;
        case EncounterReason::Depression:
            p.conditions.push_back(event(EventKind::Diagnosis, "F33.1",
                                         "major depressive disorder", days_ago(150, 800), 0.9));
            if (rng.chance(40))
                p.conditions.push_back(
                    event(EventKind::Diagnosis, "G47.00", "insomnia", days_ago(60, 400), 0.6));
            if (rng.chance(50))
                p.medications.push_back(event(EventKind::Medication, "fluoxetine",
                                              "fluoxetine 20 mg daily", days_ago(30, 400), 0.6));
            p.observations.push_back(
                obs("44261-6", "PHQ-9 depression score", rng.range(10, 20), "score", recent));
            break;
        case EncounterReason::Dermatitis:
            p.conditions.push_back(event(EventKind::Diagnosis, "L20.9", "atopic dermatitis",
                                         days_ago(300, 3000), 0.8));
            if (rng.chance(50))
                p.allergies.push_back(event(EventKind::Allergy, "fragrance-mix", "fragrance mix",
                                            days_ago(300, 2900), 0.5));
            if (rng.chance(60))
                p.medications.push_back(event(EventKind::Medication, "triamcinolone",
                                              "triamcinolone 0.1% cream", days_ago(20, 200),
                                              0.5));
            p.observations.push_back(obs("80282-4", "affected body surface area",
                                         rng.range(2, 9), "%", recent));
            break;
        case EncounterReason::Lupus:
            p.conditions.push_back(event(EventKind::Diagnosis, "M32.9",
                                         "systemic lupus erythematosus", days_ago(400, 2500),
                                         1.0));
            if (rng.chance(80))
                p.medications.push_back(event(EventKind::Medication, "hydroxychloroquine",
                                              "hydroxychloroquine 200 mg daily",
                                              days_ago(300, 2400), 0.7));
            if (rng.chance(30))
                p.medications.push_back(event(EventKind::Medication, "prednisone",
                                              "prednisone 5 mg daily", days_ago(30, 300), 0.6));
            p.observations.push_back(obs("30341-2", "erythrocyte sedimentation rate",
                                         rng.range(15, 50), "mm/h", recent));
            break;
        case EncounterReason::Pregnancy:
            p.conditions.push_back(event(EventKind::Diagnosis, "Z34.92",
                                         "an intrauterine pregnancy, now in the second trimester",
                                         days_ago(100, 160), 1.0));
            if (rng.chance(90))
                p.medications.push_back(event(EventKind::Medication, "prenatal-vitamins",
                                              "prenatal vitamins daily", days_ago(80, 150),
                                              0.6));
            p.observations.push_back(
                obs("11881-0", "fundal height", rng.range(20, 28), "cm", recent));
            break;
        case EncounterReason::SeizureDisorder:
            p.conditions.push_back(event(EventKind::Diagnosis, "G40.209", "focal epilepsy",
                                         days_ago(500, 3000), 0.95));
            if (rng.chance(85))
                p.medications.push_back(event(EventKind::Medication, "levetiracetam",
                                              "levetiracetam 500 mg twice daily",
                                              days_ago(400, 2900), 0.8));
            if (rng.chance(40))
                p.conditions.push_back(event(EventKind::LifeEvent, "breakthrough-seizure",
                                             "I had a breakthrough seizure at work",
                                             days_ago(10, 60), 0.9));
            p.observations.push_back(
                obs("seizure-freq", "seizures per month", rng.range(0, 4), "count", recent));
            break;
        case EncounterReason::WellnessCheckup:
            p.conditions.push_back(event(EventKind::LifeEvent, "new-job",
                                         "I started a new job with long hours",
                                         days_ago(30, 200), 0.5));
            p.observations.push_back(obs("2093-3", "total cholesterol", rng.range(150, 240),
                                         "mg/dL", recent));
            p.observations.push_back(
                obs("4548-4", "hemoglobin A1c", 4.9 + 0.1 * rng.range(0, 9), "%", recent));
            break;
    }

    // Shared vitals; blood pressure gets two readings a few days apart.
    const Timestamp v1 = days_ago(2, 10);
    const Timestamp v2 = v1 - static_cast<Timestamp>(rng.range(30, 120)) * 86400;
    const int sys = rng.range(105, 145);
    p.observations.push_back(obs("8480-6", "systolic blood pressure", sys, "mmHg", v1));
    p.observations.push_back(
        obs("8480-6", "systolic blood pressure", sys + rng.range(-8, 8), "mmHg", v2));
    p.observations.push_back(
        obs("8462-4", "diastolic blood pressure", rng.range(65, 92), "mmHg", v1));
    p.observations.push_back(obs("8867-4", "heart rate", rng.range(60, 95), "beats/min", v1));

    if (rng.chance(25)) {
        static const char* pool[][2] = {{"penicillin", "penicillin"},
                                        {"peanuts", "peanuts"},
                                        {"shellfish", "shellfish"},
                                        {"latex", "latex"}};
        const auto& pick = pool[rng.below(4)];
        p.allergies.push_back(
            event(EventKind::Allergy, pick[0], pick[1], days_ago(1500, 6000), 0.5));
    }
}

}  // namespace gen

/// Builds the full 366-patient cohort in memory. Cell counts follow the task
/// matrix in enum order; each demographic attribute is an exact multiset
/// shuffled independently, so marginals match the released distribution.
inline Cohort generate_cohort(const CohortGenConfig& config = {}) {
    const Timestamp enc = parse_iso8601(config.encounter_date);

    struct Slot {
        EncounterReason reason;
        EncounterObjective objective;
    };
    std::vector<Slot> slots;
    for (std::size_t r = 0; r < kReasonIds.size(); ++r)
        for (std::size_t o = 0; o < kObjectiveIds.size(); ++o)
            for (int k = 0; k < kCellPatientCounts[r][o]; ++k)
                slots.push_back({static_cast<EncounterReason>(r), static_cast<EncounterObjective>(o)});
    const std::size_t n = slots.size();  // 366 by construction

    using gen::expand;
    std::vector<Gender> genders = expand<Gender>({{Gender::Female, 198}, {Gender::Male, 168}});
    std::vector<std::pair<int, int>> age_bands = expand<std::pair<int, int>>(
        {{{21, 34}, 142}, {{35, 49}, 26}, {{50, 64}, 18}, {{65, 90}, 180}});
    std::vector<RaceEthnicity> races = expand<RaceEthnicity>({{RaceEthnicity::Asian, 245},
                                                              {RaceEthnicity::Black, 38},
                                                              {RaceEthnicity::Hispanic, 22},
                                                              {RaceEthnicity::Native, 23},
                                                              {RaceEthnicity::Other, 17},
                                                              {RaceEthnicity::White, 21}});
    std::vector<Education> education = expand<Education>({{Education::BsDegree, 90},
                                                          {Education::HsDegree, 108},
                                                          {Education::LessThanHs, 41},
                                                          {Education::SomeCollege, 127}});
    std::vector<Ses> ses = expand<Ses>({{Ses::Low, 106}, {Ses::Middle, 99}, {Ses::High, 161}});

    {
        gen::Rng r1(hash_combine(config.seed, std::uint64_t(1)));
        gen::shuffle(genders, r1);
        gen::Rng r2(hash_combine(config.seed, std::uint64_t(2)));
        gen::shuffle(age_bands, r2);
        gen::Rng r3(hash_combine(config.seed, std::uint64_t(3)));
        gen::shuffle(races, r3);
        gen::Rng r4(hash_combine(config.seed, std::uint64_t(4)));
        gen::shuffle(education, r4);
        gen::Rng r5(hash_combine(config.seed, std::uint64_t(5)));
        gen::shuffle(ses, r5);
    }

    // Pregnancy slots must land on female patients; swap genders with a
    // female non-pregnancy patient when needed. Marginals are unaffected.
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i].reason != EncounterReason::Pregnancy || genders[i] == Gender::Female)
            continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (genders[j] == Gender::Female && slots[j].reason != EncounterReason::Pregnancy) {
                std::swap(genders[i], genders[j]);
                break;
            }
        }
    }

    Cohort cohort;
    cohort.encounter_time = enc;
    int ey;
    unsigned em, ed;
    detail::civil_from_days(enc / 86400, ey, em, ed);

    for (std::size_t i = 0; i < n; ++i) {
        gen::Rng rng(hash_combine(hash_combine(config.seed, std::uint64_t(100)), i));
        PatientPacket p;
        char id[16];
        std::snprintf(id, sizeof(id), "p-%04zu", i + 1);
        p.patient_id = id;
        p.gender = genders[i];
        p.race_ethnicity = races[i];
        p.education = education[i];
        p.ses = ses[i];
        const auto& pool =
            p.gender == Gender::Female ? gen::female_names() : gen::male_names();
        p.name = pool[rng.below(pool.size())] + " " +
                 gen::surnames()[rng.below(gen::surnames().size())];

        const int age = rng.range(age_bands[i].first, age_bands[i].second);
        // Back off up to 364 extra days; the completed age stays exact.
        p.birth_date = make_timestamp(ey - age, em, ed) -
                       static_cast<Timestamp>(rng.range(0, 364)) * 86400;
        p.encounter_time = enc;

        gen::fill_clinical_content(p, slots[i].reason, rng, enc);

        const auto& notes = gen::persona_note_pool();
        const std::size_t a = rng.below(notes.size());
        std::size_t b = rng.below(notes.size());
        if (b == a) b = (b + 1) % notes.size();
        p.persona_notes = notes[a] + " " + notes[b];

        cohort.index_by_id[p.patient_id] = cohort.manifest.size();
        cohort.manifest.push_back({p.patient_id, make_task_cell(slots[i].reason, slots[i].objective)});
        cohort.packets.push_back(std::move(p));
    }
    return cohort;
}

}  // namespace clinsim

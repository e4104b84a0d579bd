#pragma once

#include <array>
#include <string>
#include <string_view>

#include "clinsim/errors.hpp"

// The task matrix: encounter reason x encounter objective. Only some cells
// are populated; sampling an unpopulated cell is an error.

namespace clinsim {

enum class EncounterReason {
    Anxiety,
    Asthma,
    BreastCancer,
    Depression,
    Dermatitis,
    Lupus,
    Pregnancy,
    SeizureDisorder,
    WellnessCheckup,
};

enum class EncounterObjective {
    Diagnosis,
    LifestyleAdvice,
    MedicalScreening,
    MedicationAdvice,
    TreatmentAdvice,
};

inline constexpr std::size_t kReasonCount = 9;
inline constexpr std::size_t kObjectiveCount = 5;

inline constexpr std::array<std::string_view, kReasonCount> kReasonIds = {
    "anxiety",          "asthma", "breast_cancer",    "depression",      "dermatitis",
    "lupus",            "pregnancy", "seizure_disorder", "wellness_checkup"};

inline constexpr std::array<std::string_view, kReasonCount> kReasonDisplay = {
    "Anxiety",   "Asthma",    "Breast Cancer",    "Depression",       "Dermatitis",
    "Lupus",     "Pregnancy", "Seizure Disorder", "Wellness Checkup"};

inline constexpr std::array<std::string_view, kObjectiveCount> kObjectiveIds = {
    "diagnosis", "lifestyle_advice", "medical_screening", "medication_advice",
    "treatment_advice"};

inline constexpr std::array<std::string_view, kObjectiveCount> kObjectiveDisplay = {
    "Diagnosis", "Lifestyle Advice", "Medical Screening", "Medication Advice",
    "Treatment Advice"};

// Patients per populated cell; 0 marks an unpopulated cell.
inline constexpr int kCellPatientCounts[kReasonCount][kObjectiveCount] = {
    {12, 12, 12, 12, 12},  // anxiety
    {0, 12, 12, 12, 12},   // asthma
    {0, 6, 6, 6, 6},       // breast_cancer
    {12, 12, 12, 12, 12},  // depression
    {0, 12, 12, 12, 12},   // dermatitis
    {0, 12, 12, 12, 12},   // lupus
    {0, 3, 3, 0, 0},       // pregnancy
    {0, 12, 12, 12, 12},   // seizure_disorder
    {0, 12, 0, 12, 0},     // wellness_checkup
};

inline std::string_view to_id(EncounterReason r) {
    return kReasonIds[static_cast<std::size_t>(r)];
}
inline std::string_view to_id(EncounterObjective o) {
    return kObjectiveIds[static_cast<std::size_t>(o)];
}
inline std::string_view display_name(EncounterReason r) {
    return kReasonDisplay[static_cast<std::size_t>(r)];
}
inline std::string_view display_name(EncounterObjective o) {
    return kObjectiveDisplay[static_cast<std::size_t>(o)];
}

inline EncounterReason parse_reason(std::string_view id) {
    for (std::size_t i = 0; i < kReasonCount; ++i)
        if (kReasonIds[i] == id) return static_cast<EncounterReason>(i);
    throw ValidationError("unknown encounter_reason: '" + std::string(id) + "'");
}

inline EncounterObjective parse_objective(std::string_view id) {
    for (std::size_t i = 0; i < kObjectiveCount; ++i)
        if (kObjectiveIds[i] == id) return static_cast<EncounterObjective>(i);
    throw ValidationError("unknown encounter_objective: '" + std::string(id) + "'");
}

inline bool cell_populated(EncounterReason r, EncounterObjective o) {
    return kCellPatientCounts[static_cast<std::size_t>(r)][static_cast<std::size_t>(o)] > 0;
}

struct TaskCell {
    EncounterReason reason = EncounterReason::Anxiety;
    EncounterObjective objective = EncounterObjective::Diagnosis;

    bool operator==(const TaskCell&) const = default;
};

/// Throws when the (reason, objective) pair is not populated in the matrix.
inline TaskCell make_task_cell(EncounterReason r, EncounterObjective o) {
    if (!cell_populated(r, o))
        throw ValidationError("task cell (" + std::string(to_id(r)) + ", " +
                              std::string(to_id(o)) + ") is not populated in the task matrix");
    return TaskCell{r, o};
}

}  // namespace clinsim

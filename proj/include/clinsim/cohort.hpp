#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "clinsim/packet.hpp"
#include "clinsim/task_matrix.hpp"

// A cohort is a directory: manifest.json plus packets/<patient_id>.json.
// The manifest binds each patient to a task cell and carries the shared
// encounter date.

namespace clinsim {

struct ManifestEntry {
    std::string patient_id;
    TaskCell cell;
};

struct Cohort {
    Timestamp encounter_time = 0;
    std::vector<ManifestEntry> manifest;  // manifest order
    std::vector<PatientPacket> packets;   // same order as manifest
    std::map<std::string, std::size_t> index_by_id;

    const PatientPacket* find_packet(const std::string& patient_id) const {
        auto it = index_by_id.find(patient_id);
        return it == index_by_id.end() ? nullptr : &packets[it->second];
    }
};

/// Returns the task cell bound to the patient. Unknown patients and cells
/// outside the populated matrix are errors.
inline TaskCell sample_task(const Cohort& cohort, const std::string& patient_id) {
    auto it = cohort.index_by_id.find(patient_id);
    if (it == cohort.index_by_id.end())
        throw ValidationError("patient '" + patient_id + "' is not in the cohort manifest");
    const TaskCell& cell = cohort.manifest[it->second].cell;
    return make_task_cell(cell.reason, cell.objective);
}

inline Cohort load_cohort(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open cohort manifest: " + manifest_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad cohort manifest " + manifest_path.string() + ": " + e.what());
    }

    Cohort cohort;
    cohort.encounter_time = parse_iso8601(j.value("encounter_date", "2025-06-02T09:00:00Z"));
    if (!j.contains("patients") || !j["patients"].is_array())
        throw ParseError("cohort manifest must contain a 'patients' array");

    for (const auto& entry : j["patients"]) {
        ManifestEntry m;
        m.patient_id = detail::require_string(entry, "patient_id");
        // make_task_cell rejects unpopulated (em-dash) cells outright.
        m.cell = make_task_cell(parse_reason(detail::require_string(entry, "encounter_reason")),
                                parse_objective(detail::require_string(entry, "encounter_objective")));
        if (cohort.index_by_id.count(m.patient_id))
            throw ValidationError("duplicate patient '" + m.patient_id + "' in cohort manifest");

        const auto packet_path = dir / "packets" / (m.patient_id + ".json");
        std::ifstream pin(packet_path);
        if (!pin) throw IoError("cannot open packet file: " + packet_path.string());
        nlohmann::json pj;
        try {
            pin >> pj;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("bad packet file " + packet_path.string() + ": " + e.what());
        }
        PatientPacket packet = parse_packet(pj, cohort.encounter_time);
        if (packet.patient_id != m.patient_id)
            throw ValidationError("packet file " + packet_path.string() +
                                  " declares patient_id '" + packet.patient_id + "'");
        cohort.index_by_id[m.patient_id] = cohort.manifest.size();
        cohort.manifest.push_back(m);
        cohort.packets.push_back(std::move(packet));
    }
    return cohort;
}

inline void write_cohort(const Cohort& cohort, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "packets");
    nlohmann::json manifest;
    manifest["encounter_date"] = format_iso8601(cohort.encounter_time);
    nlohmann::json patients = nlohmann::json::array();
    for (std::size_t i = 0; i < cohort.manifest.size(); ++i) {
        const auto& m = cohort.manifest[i];
        patients.push_back({{"patient_id", m.patient_id},
                            {"encounter_reason", std::string(to_id(m.cell.reason))},
                            {"encounter_objective", std::string(to_id(m.cell.objective))}});
        std::ofstream out(dir / "packets" / (m.patient_id + ".json"));
        if (!out) throw IoError("cannot write packet file for " + m.patient_id);
        out << serialize_packet(cohort.packets[i]).dump(2) << '\n';
    }
    manifest["patients"] = patients;
    std::ofstream mout(dir / "manifest.json");
    if (!mout) throw IoError("cannot write cohort manifest");
    mout << manifest.dump(2) << '\n';
}

/// Patients per (reason, objective) cell, as loaded; useful for checking a
/// cohort against the task-matrix distribution.
inline std::map<std::pair<std::string, std::string>, int> cell_counts(const Cohort& cohort) {
    std::map<std::pair<std::string, std::string>, int> counts;
    for (const auto& m : cohort.manifest)
        ++counts[{std::string(to_id(m.cell.reason)), std::string(to_id(m.cell.objective))}];
    return counts;
}

}  // namespace clinsim

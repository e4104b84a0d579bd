#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "clinsim/clinsim.hpp"

namespace testutil {

inline std::filesystem::path repo_dir() { return std::filesystem::path(CLINSIM_REPO_DIR); }

inline std::filesystem::path asset(const std::string& rel) { return repo_dir() / "assets" / rel; }

/// Fresh scratch directory per test, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("clinsim-test-" + tag + "-" + std::to_string(counter++) + "-" +
                 std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline clinsim::MemoryRecord make_memory(const std::string& id, clinsim::Embedder& embedder,
                                         const std::string& text, double importance,
                                         clinsim::Timestamp created,
                                         clinsim::Timestamp accessed) {
    clinsim::MemoryRecord m;
    m.memory_id = id;
    m.text = text;
    m.embedding = embedder.embed(text);
    m.importance = importance;
    m.created_at = created;
    m.last_accessed = accessed;
    return m;
}

/// Minimal well-formed packet for agent tests.
inline clinsim::PatientPacket make_packet(const std::string& id = "pt-test") {
    clinsim::PatientPacket p;
    p.patient_id = id;
    p.name = "Avery Quinn";
    p.gender = clinsim::Gender::Female;
    p.race_ethnicity = clinsim::RaceEthnicity::Asian;
    p.education = clinsim::Education::BsDegree;
    p.ses = clinsim::Ses::Middle;
    p.encounter_time = clinsim::make_timestamp(2025, 6, 2, 9, 0, 0);
    p.birth_date = clinsim::make_timestamp(1991, 3, 14);

    clinsim::ClinicalEvent c;
    c.kind = clinsim::EventKind::Diagnosis;
    c.code = "F41.1";
    c.display = "generalized anxiety disorder";
    c.onset = clinsim::make_timestamp(2023, 5, 1);
    c.salience = 0.8;
    p.conditions.push_back(c);

    clinsim::ClinicalEvent m;
    m.kind = clinsim::EventKind::Medication;
    m.code = "sertraline-50";
    m.display = "sertraline 50 mg daily";
    m.onset = clinsim::make_timestamp(2023, 6, 15);
    m.salience = 0.6;
    p.medications.push_back(m);

    clinsim::Observation o;
    o.code = "70274-6";
    o.display = "GAD-7 anxiety score";
    o.value = 12;
    o.unit = "score";
    o.taken_at = clinsim::make_timestamp(2025, 5, 20);
    p.observations.push_back(o);

    p.persona_notes = "Prefers concrete plans. Tends to downplay symptoms at first.";
    return p;
}

inline std::string valid_emotion_reply() {
    std::string out;
    for (auto name : clinsim::kEmotionNames) {
        out += std::string(name);
        out += ": 0\n";
    }
    out += "valence: 1\narousal: 3\nreflection: The visit felt manageable today.\npoignancy: 4\n";
    return out;
}

}  // namespace testutil

#include <map>
#include <set>

#include <catch_amalgamated.hpp>

#include "clinsim/cohort.hpp"
#include "clinsim/cohortgen.hpp"
#include "helpers.hpp"

using namespace clinsim;

namespace {

Cohort make_default_cohort() {
    CohortGenConfig config;
    return generate_cohort(config);
}

}  // namespace

TEST_CASE("generated cohort fills the task matrix exactly", "[cohortgen]") {
    const Cohort cohort = make_default_cohort();
    REQUIRE(cohort.packets.size() == 366);
    REQUIRE(cohort.manifest.size() == 366);

    const auto counts = cell_counts(cohort);
    int total = 0;
    for (std::size_t r = 0; r < kReasonCount; ++r)
        for (std::size_t o = 0; o < kObjectiveCount; ++o) {
            const auto it = counts.find(
                {std::string(kReasonIds[r]), std::string(kObjectiveIds[o])});
            const int got = it == counts.end() ? 0 : it->second;
            CHECK(got == kCellPatientCounts[r][o]);
            total += got;
        }
    CHECK(total == 366);
}

TEST_CASE("generated cohort hits the demographic marginals", "[cohortgen]") {
    const Cohort cohort = make_default_cohort();
    std::map<Gender, int> gender;
    std::map<RaceEthnicity, int> race;
    std::map<Education, int> edu;
    std::map<Ses, int> ses;
    std::map<std::string, int> age_bands;
    for (const auto& p : cohort.packets) {
        gender[p.gender]++;
        race[p.race_ethnicity]++;
        edu[p.education]++;
        ses[p.ses]++;
        const int age = age_at(p.birth_date, p.encounter_time);
        if (age >= 21 && age <= 34)
            age_bands["21-34"]++;
        else if (age <= 49)
            age_bands["35-49"]++;
        else if (age <= 64)
            age_bands["50-64"]++;
        else if (age >= 65)
            age_bands["65+"]++;
        CHECK(age >= 21);
    }
    CHECK(gender[Gender::Female] == 198);
    CHECK(gender[Gender::Male] == 168);
    CHECK(age_bands["21-34"] == 142);
    CHECK(age_bands["35-49"] == 26);
    CHECK(age_bands["50-64"] == 18);
    CHECK(age_bands["65+"] == 180);
    CHECK(race[RaceEthnicity::Asian] == 245);
    CHECK(race[RaceEthnicity::Black] == 38);
    CHECK(race[RaceEthnicity::Hispanic] == 22);
    CHECK(race[RaceEthnicity::Native] == 23);
    CHECK(race[RaceEthnicity::Other] == 17);
    CHECK(race[RaceEthnicity::White] == 21);
    CHECK(edu[Education::BsDegree] == 90);
    CHECK(edu[Education::HsDegree] == 108);
    CHECK(edu[Education::LessThanHs] == 41);
    CHECK(edu[Education::SomeCollege] == 127);
    CHECK(ses[Ses::Low] == 106);
    CHECK(ses[Ses::Middle] == 99);
    CHECK(ses[Ses::High] == 161);
}

TEST_CASE("pregnancy encounters only go to female patients", "[cohortgen]") {
    const Cohort cohort = make_default_cohort();
    for (std::size_t i = 0; i < cohort.manifest.size(); ++i)
        if (cohort.manifest[i].cell.reason == EncounterReason::Pregnancy)
            CHECK(cohort.packets[i].gender == Gender::Female);
}

TEST_CASE("generation is deterministic in the seed", "[cohortgen]") {
    const Cohort a = make_default_cohort();
    const Cohort b = make_default_cohort();
    REQUIRE(a.packets.size() == b.packets.size());
    for (std::size_t i = 0; i < a.packets.size(); ++i) {
        CHECK(a.packets[i].patient_id == b.packets[i].patient_id);
        CHECK(a.packets[i].name == b.packets[i].name);
        CHECK(a.packets[i].birth_date == b.packets[i].birth_date);
        CHECK(a.packets[i].persona_notes == b.packets[i].persona_notes);
    }
    CohortGenConfig other;
    other.seed = 999;
    const Cohort c = generate_cohort(other);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.packets.size(); ++i)
        if (a.packets[i].name != c.packets[i].name) any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("every generated packet is internally valid", "[cohortgen]") {
    const Cohort cohort = make_default_cohort();
    const auto violations = validate_cohort(cohort.packets);
    for (const auto& v : violations)
        INFO(v.patient_id << " " << v.field << ": " << v.message);
    CHECK(violations.empty());

    std::set<std::string> ids;
    for (const auto& p : cohort.packets) {
        CHECK(ids.insert(p.patient_id).second);
        CHECK_FALSE(p.name.empty());
        CHECK_FALSE((p.conditions.empty() && p.medications.empty() && p.observations.empty()));
        CHECK_FALSE(p.persona_notes.empty());
    }
    CHECK(*ids.begin() == "p-0001");
}

TEST_CASE("cohort write and load round trips", "[cohortgen]") {
    const Cohort full = make_default_cohort();
    Cohort subset;
    subset.encounter_time = full.encounter_time;
    for (std::size_t i = 0; i < 5; ++i) {
        subset.index_by_id[full.manifest[i].patient_id] = subset.manifest.size();
        subset.manifest.push_back(full.manifest[i]);
        subset.packets.push_back(full.packets[i]);
    }

    testutil::TempDir tmp("cohort");
    write_cohort(subset, tmp.path());
    const Cohort loaded = load_cohort(tmp.path());
    REQUIRE(loaded.packets.size() == 5);
    CHECK(loaded.encounter_time == subset.encounter_time);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(loaded.manifest[i].patient_id == subset.manifest[i].patient_id);
        CHECK(loaded.packets[i].name == subset.packets[i].name);
        CHECK(loaded.packets[i].birth_date == subset.packets[i].birth_date);
    }
    CHECK(loaded.find_packet("does-not-exist") == nullptr);
    CHECK(loaded.find_packet(subset.manifest[0].patient_id) != nullptr);
    CHECK(sample_task(loaded, subset.manifest[0].patient_id).reason ==
          subset.manifest[0].cell.reason);
}

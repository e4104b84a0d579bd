#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clinsim/errors.hpp"
#include "clinsim/task_matrix.hpp"

// The evaluation catalog. Dimension definitions, anchors, and the
// category-to-meta-category mapping are data loaded from a file; the full
// release profile is 105 dimensions over 29 categories and 7 meta-categories.

namespace clinsim {

enum class DimensionScope { Global, SubtaskSpecific };

/// Allow-lists over the task matrix axes. An empty list on an axis means
/// "any value on that axis"; at least one axis must be constrained.
struct ApplicabilityRule {
    std::vector<EncounterReason> reasons;
    std::vector<EncounterObjective> objectives;

    bool accepts(const TaskCell& cell) const {
        const bool reason_ok =
            reasons.empty() ||
            std::find(reasons.begin(), reasons.end(), cell.reason) != reasons.end();
        const bool objective_ok =
            objectives.empty() ||
            std::find(objectives.begin(), objectives.end(), cell.objective) != objectives.end();
        return reason_ok && objective_ok;
    }
};

struct DimensionSpec {
    std::string dimension_id;
    std::string name;
    std::string category;
    std::string description;
    std::array<std::string, 4> anchors;  // index i = anchor for raw score i+1
    DimensionScope scope = DimensionScope::Global;
    std::optional<ApplicabilityRule> applies_to;  // present iff subtask-specific
};

struct CategorySpec {
    std::string name;
    std::string description;
    std::string meta_category;
};

struct RubricCatalog {
    std::vector<DimensionSpec> dimensions;
    std::vector<CategorySpec> categories;
    std::map<std::string, std::string> meta_map;  // category name -> meta-category

    const CategorySpec* find_category(const std::string& name) const {
        for (const auto& c : categories)
            if (c.name == name) return &c;
        return nullptr;
    }

    const DimensionSpec* find_dimension(const std::string& id) const {
        for (const auto& d : dimensions)
            if (d.dimension_id == id) return &d;
        return nullptr;
    }

    /// Distinct meta-categories in first-appearance order.
    std::vector<std::string> meta_categories() const {
        std::vector<std::string> out;
        for (const auto& c : categories)
            if (std::find(out.begin(), out.end(), c.meta_category) == out.end())
                out.push_back(c.meta_category);
        return out;
    }
};

namespace detail {

inline std::vector<EncounterReason> parse_reason_list(const nlohmann::json& arr,
                                                      const std::string& where) {
    std::vector<EncounterReason> out;
    for (const auto& item : arr) {
        try {
            out.push_back(parse_reason(item.get<std::string>()));
        } catch (const std::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<EncounterObjective> parse_objective_list(const nlohmann::json& arr,
                                                            const std::string& where) {
    std::vector<EncounterObjective> out;
    for (const auto& item : arr) {
        try {
            out.push_back(parse_objective(item.get<std::string>()));
        } catch (const std::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    return out;
}

}  // namespace detail

/// Parses and validates a catalog document. The file declares its own
/// expected counts, so reduced test catalogs run through the identical
/// validation path as the full release profile.
inline RubricCatalog parse_catalog(const nlohmann::json& doc, const std::string& context) {
    auto fail = [&](const std::string& msg) -> ValidationError {
        return ValidationError(context + ": " + msg);
    };
    if (!doc.is_object()) throw fail("catalog document must be a JSON object");
    for (const char* key : {"dimension_count", "category_count", "meta_category_count",
                            "categories", "dimensions"})
        if (!doc.contains(key)) throw fail(std::string("missing required field: ") + key);

    RubricCatalog cat;
    std::set<std::string> category_names;
    for (const auto& cj : doc.at("categories")) {
        CategorySpec c;
        c.name = cj.at("name").get<std::string>();
        c.description = cj.at("description").get<std::string>();
        c.meta_category = cj.at("meta_category").get<std::string>();
        if (c.name.empty()) throw fail("category with empty name");
        if (c.description.empty()) throw fail("category without description: " + c.name);
        if (c.meta_category.empty()) throw fail("category without meta-category: " + c.name);
        if (!category_names.insert(c.name).second) throw fail("duplicate category: " + c.name);
        cat.meta_map[c.name] = c.meta_category;
        cat.categories.push_back(std::move(c));
    }

    std::set<std::string> dimension_ids;
    for (const auto& dj : doc.at("dimensions")) {
        DimensionSpec d;
        d.dimension_id = dj.at("dimension_id").get<std::string>();
        const std::string where = "dimension " + d.dimension_id;
        d.name = dj.at("name").get<std::string>();
        d.category = dj.at("category").get<std::string>();
        d.description = dj.at("description").get<std::string>();
        if (d.dimension_id.empty()) throw fail("dimension with empty id");
        if (!dimension_ids.insert(d.dimension_id).second)
            throw fail("duplicate dimension id: " + d.dimension_id);
        if (!category_names.count(d.category))
            throw fail(where + ": unknown category: " + d.category);

        if (!dj.contains("anchors") || !dj.at("anchors").is_object())
            throw fail(where + ": missing anchors");
        const auto& anchors = dj.at("anchors");
        if (anchors.size() != 4) throw fail(where + ": anchors must cover exactly levels 1..4");
        for (int level = 1; level <= 4; ++level) {
            const std::string key = std::to_string(level);
            if (!anchors.contains(key)) throw fail(where + ": missing anchor " + key);
            d.anchors[level - 1] = anchors.at(key).get<std::string>();
            if (d.anchors[level - 1].empty()) throw fail(where + ": empty anchor " + key);
        }

        const std::string scope = dj.at("scope").get<std::string>();
        if (scope == "global") {
            d.scope = DimensionScope::Global;
            if (dj.contains("applies_to"))
                throw fail(where + ": global dimensions must not declare applies_to");
        } else if (scope == "subtask_specific") {
            d.scope = DimensionScope::SubtaskSpecific;
            if (!dj.contains("applies_to"))
                throw fail(where + ": subtask-specific dimensions require applies_to");
            ApplicabilityRule rule;
            const auto& aj = dj.at("applies_to");
            if (aj.contains("reasons"))
                rule.reasons = detail::parse_reason_list(aj.at("reasons"), context + ": " + where);
            if (aj.contains("objectives"))
                rule.objectives =
                    detail::parse_objective_list(aj.at("objectives"), context + ": " + where);
            if (rule.reasons.empty() && rule.objectives.empty())
                throw fail(where + ": applies_to constrains neither axis");
            d.applies_to = std::move(rule);
        } else {
            throw fail(where + ": unknown scope: " + scope);
        }
        cat.dimensions.push_back(std::move(d));
    }

    const auto check_count = [&](const char* key, std::size_t actual) {
        const auto declared = doc.at(key).get<std::int64_t>();
        if (declared < 0 || static_cast<std::size_t>(declared) != actual)
            throw fail(std::string(key) + " declares " + std::to_string(declared) +
                       " but the file contains " + std::to_string(actual));
    };
    check_count("dimension_count", cat.dimensions.size());
    check_count("category_count", cat.categories.size());
    check_count("meta_category_count", cat.meta_categories().size());
    return cat;
}

inline RubricCatalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read catalog: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return parse_catalog(doc, path.string());
}

/// Canonical category-to-meta-category mapping of the release profile.
inline const std::map<std::string, std::string>& full_profile_meta_map() {
    static const std::map<std::string, std::string> map = {
        {"medical knowledge", "Core Medical Competence"},
        {"clinical reasoning", "Core Medical Competence"},
        {"review of symptoms", "Core Medical Competence"},
        {"symptom interpretation", "Core Medical Competence"},
        {"differential diagnosis", "Core Medical Competence"},
        {"final diagnosis", "Core Medical Competence"},
        {"first-line treatment recommendation", "Therapeutic Management"},
        {"alternative treatment options", "Therapeutic Management"},
        {"treatment contraindications", "Therapeutic Management"},
        {"non-pharmacologic advice", "Therapeutic Management"},
        {"medication selection", "Therapeutic Management"},
        {"medication management", "Therapeutic Management"},
        {"lifestyle recommendation", "Preventive Care & Screening"},
        {"lifestyle influences", "Preventive Care & Screening"},
        {"lifestyle tracking", "Preventive Care & Screening"},
        {"screening eligibility", "Preventive Care & Screening"},
        {"test selection", "Preventive Care & Screening"},
        {"test interpretation", "Preventive Care & Screening"},
        {"communication", "Communication Skills"},
        {"adaptive dialogue", "Communication Skills"},
        {"interaction efficiency", "Communication Skills"},
        {"medication-related communication", "Communication Skills"},
        {"patient care", "Patient Safety & Care"},
        {"ethical practice", "Patient Safety & Care"},
        {"medication safety", "Patient Safety & Care"},
        {"contextual awareness", "Contextual & System Integration"},
        {"real-world impact", "Contextual & System Integration"},
        {"model reliability", "Technical Reliability"},
        {"operational competence", "Technical Reliability"},
    };
    return map;
}

/// Enforces the release profile on an already-valid catalog: 105 dimensions,
/// 29 categories, 7 meta-categories, with the canonical mapping.
inline void require_full_profile(const RubricCatalog& cat) {
    if (cat.dimensions.size() != 105)
        throw ValidationError("full catalog requires 105 dimensions, found " +
                              std::to_string(cat.dimensions.size()));
    if (cat.categories.size() != 29)
        throw ValidationError("full catalog requires 29 categories, found " +
                              std::to_string(cat.categories.size()));
    if (cat.meta_categories().size() != 7)
        throw ValidationError("full catalog requires 7 meta-categories, found " +
                              std::to_string(cat.meta_categories().size()));
    const auto& canonical = full_profile_meta_map();
    for (const auto& [category, meta] : canonical) {
        auto it = cat.meta_map.find(category);
        if (it == cat.meta_map.end())
            throw ValidationError("full catalog missing category: " + category);
        if (it->second != meta)
            throw ValidationError("category '" + category + "' maps to '" + it->second +
                                  "', expected '" + meta + "'");
    }
    for (const auto& [category, meta] : cat.meta_map)
        if (!canonical.count(category))
            throw ValidationError("full catalog has unexpected category: " + category);
}

/// Global dimensions plus subtask-specific ones whose rule accepts the cell,
/// ordered by dimension_id.
inline std::vector<DimensionSpec> applicable_dimensions(const RubricCatalog& cat,
                                                        const TaskCell& cell) {
    std::vector<DimensionSpec> out;
    for (const auto& d : cat.dimensions) {
        if (d.scope == DimensionScope::Global || d.applies_to->accepts(cell)) out.push_back(d);
    }
    std::sort(out.begin(), out.end(), [](const DimensionSpec& a, const DimensionSpec& b) {
        return a.dimension_id < b.dimension_id;
    });
    return out;
}

/// Maps a raw 1..4 score onto [0,1].
inline double normalize_score(int raw) {
    if (raw < 1 || raw > 4)
        throw ValidationError("raw score must be 1..4, got " + std::to_string(raw));
    return static_cast<double>(raw - 1) / 3.0;
}

}  // namespace clinsim

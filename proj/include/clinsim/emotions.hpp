#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "clinsim/errors.hpp"

// The 27-emotion affect model. Raw scores are integers in [-10, 10] as
// produced by the emotion-state backend; the unit-range form (x+10)/20 is
// what similarity math operates on.

namespace clinsim {

inline constexpr std::size_t kEmotionCount = 27;

/// Fixed emotion list; the order is canonical across prompts, parsers,
/// memory records, and dumps.
inline constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "admiration",
    "adoration",
    "aesthetic appreciation",
    "amusement",
    "anger",
    "anxiety",
    "awe",
    "awareness",
    "boredom",
    "calmness",
    "confusion",
    "craving",
    "disgust",
    "empathetic pain",
    "entrancement",
    "excitement",
    "fear",
    "horror",
    "interest",
    "joy",
    "nostalgia",
    "relief",
    "romance",
    "sadness",
    "satisfaction",
    "sexual desire",
    "surprise",
};

inline int emotion_index(std::string_view name) {
    for (std::size_t i = 0; i < kEmotionCount; ++i)
        if (kEmotionNames[i] == name) return static_cast<int>(i);
    return -1;
}

/// Raw backend scores, one integer in [-10, 10] per emotion.
struct RawEmotions {
    std::array<int, kEmotionCount> values{};

    int& operator[](std::size_t i) { return values[i]; }
    int operator[](std::size_t i) const { return values[i]; }

    bool operator==(const RawEmotions&) const = default;
};

/// Unit-range emotion vector, each component in [0, 1].
struct EmotionVector {
    std::array<double, kEmotionCount> values{};

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    bool all_zero() const {
        for (double v : values)
            if (v != 0.0) return false;
        return true;
    }

    bool operator==(const EmotionVector&) const = default;
};

/// Maps raw scores into unit range via (x+10)/20. Out-of-range components
/// are rejected, never clamped.
inline EmotionVector normalize_emotions(const RawEmotions& raw) {
    EmotionVector out;
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        const int x = raw[i];
        if (x < -10 || x > 10)
            throw ValidationError("emotion '" + std::string(kEmotionNames[i]) +
                                  "' out of range: " + std::to_string(x));
        out[i] = (x + 10) / 20.0;
    }
    return out;
}

struct TanimotoResult {
    double value = 0.0;
    /// Set when both inputs were all-zero and the 1.0 convention applied.
    bool neutral_pair = false;
};

/// Tanimoto similarity a.b / (|a|^2 + |b|^2 - a.b) over unit-range vectors.
/// Two all-zero vectors compare as 1.0 (neutral matches neutral).
inline TanimotoResult tanimoto(const EmotionVector& a, const EmotionVector& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = na + nb - dot;
    if (denom == 0.0) return {1.0, true};
    return {dot / denom, false};
}

inline double tanimoto_value(const EmotionVector& a, const EmotionVector& b) {
    return tanimoto(a, b).value;
}

/// The patient's current affective state.
struct EmotionState {
    RawEmotions emotions;
    int valence = 0;  // [-10, 10]
    int arousal = 0;  // [0, 10]
    int updated_at_turn = 0;

    EmotionVector unit() const { return normalize_emotions(emotions); }
};

/// A self-contained reflective thought with its poignancy in [1, 10].
struct Reflection {
    std::string text;
    int poignancy = 1;

    /// Memory importance is poignancy mapped onto [0.1, 1].
    double importance() const { return poignancy / 10.0; }
};

enum class CognitiveEffort { Trivial, Focused, Open, Complex, Ambiguous };

inline constexpr std::array<std::string_view, 5> kEffortTokens = {
    "TRIVIAL", "FOCUSED", "OPEN", "COMPLEX", "AMBIGUOUS"};

inline std::string_view to_string(CognitiveEffort e) {
    return kEffortTokens[static_cast<std::size_t>(e)];
}

inline CognitiveEffort parse_effort(std::string_view token) {
    for (std::size_t i = 0; i < kEffortTokens.size(); ++i)
        if (kEffortTokens[i] == token) return static_cast<CognitiveEffort>(i);
    throw ValidationError("unknown cognitive-effort token: '" + std::string(token) + "'");
}

}  // namespace clinsim

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "clinsim/backend.hpp"
#include "clinsim/emotions.hpp"
#include "clinsim/errors.hpp"
#include "clinsim/prompts.hpp"

// Emotion-state update pipeline: the line-oriented backend response
// contract, the effort classifier, and the state-update call itself.

namespace clinsim {

struct EmotionUpdate {
    EmotionState state;
    Reflection reflection;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool parse_int_strict(const std::string& s, int& out) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) return false;
    long v = 0;
    for (; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        v = v * 10 + (s[i] - '0');
        if (v > 1000000) return false;
    }
    out = static_cast<int>(s[0] == '-' ? -v : v);
    return true;
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace detail

/// Decodes the emotion backend's "key: value" response. All 27 emotions,
/// valence, arousal, poignancy, and a non-empty reflection must be present,
/// each exactly once and in range. Out-of-range values are rejected, not
/// clamped. Unrecognized lines are ignored.
inline EmotionUpdate parse_emotion_output(std::string_view text) {
    std::map<std::string, int> numbers;
    std::string reflection_text;
    bool have_reflection = false;

    for (const std::string& raw_line : detail::split_lines(text)) {
        const std::size_t colon = raw_line.find(':');
        if (colon == std::string::npos) continue;
        const std::string key = detail::to_lower(detail::trim(raw_line.substr(0, colon)));
        const std::string value = detail::trim(raw_line.substr(colon + 1));
        if (key == "reflection") {
            if (have_reflection) throw ParseError("duplicate key 'reflection' in emotion output");
            reflection_text = value;
            have_reflection = true;
            continue;
        }
        const bool is_emotion = emotion_index(key) >= 0;
        const bool is_scalar = key == "valence" || key == "arousal" || key == "poignancy";
        if (!is_emotion && !is_scalar) continue;
        if (numbers.count(key))
            throw ParseError("duplicate key '" + key + "' in emotion output");
        int v = 0;
        if (!detail::parse_int_strict(value, v))
            throw ParseError("non-integer value for key '" + key + "' in emotion output: '" +
                             value + "'");
        numbers[key] = v;
    }

    EmotionUpdate out;
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        const std::string name(kEmotionNames[i]);
        auto it = numbers.find(name);
        if (it == numbers.end()) throw ParseError("missing key '" + name + "' in emotion output");
        if (it->second < -10 || it->second > 10)
            throw ParseError("value for key '" + name + "' out of range [-10,10]: " +
                             std::to_string(it->second));
        out.state.emotions[i] = it->second;
    }

    auto require_scalar = [&](const std::string& key, int lo, int hi) {
        auto it = numbers.find(key);
        if (it == numbers.end()) throw ParseError("missing key '" + key + "' in emotion output");
        if (it->second < lo || it->second > hi)
            throw ParseError("value for key '" + key + "' out of range [" + std::to_string(lo) +
                             "," + std::to_string(hi) + "]: " + std::to_string(it->second));
        return it->second;
    };
    out.state.valence = require_scalar("valence", -10, 10);
    out.state.arousal = require_scalar("arousal", 0, 10);
    out.reflection.poignancy = require_scalar("poignancy", 1, 10);

    if (!have_reflection || reflection_text.empty())
        throw ParseError("missing key 'reflection' in emotion output");
    out.reflection.text = reflection_text;
    return out;
}

/// Picks the effort level for an incoming message. Empty messages are
/// AMBIGUOUS by rule, without consulting the backend.
inline CognitiveEffort classify_cognitive_effort(const std::string& recent_message,
                                                 const std::string& context, Backend& backend) {
    if (detail::trim(recent_message).empty()) return CognitiveEffort::Ambiguous;
    const std::string prompt = replace_placeholders(
        std::string(kEffortPromptTemplate), {{"context", context}, {"message", recent_message}});
    const std::string reply =
        complete_with_retry(backend, prompt, {{"user", recent_message}});
    return parse_effort(detail::trim(reply));
}

struct EmotionUpdateInputs {
    std::string persona;
    std::string interlocutor;
    std::string context;
    std::string conversation;
    std::string recent_message;
    CognitiveEffort effort = CognitiveEffort::Focused;
    std::string retrieval_summary;
};

/// Runs the emotion-state backend and decodes its reply. Transport failures
/// are retried; a malformed reply is a hard error so affect trajectories are
/// never silently repaired.
inline EmotionUpdate update_emotion_state(const EmotionUpdateInputs& in, Backend& backend,
                                          int transport_retries = 2) {
    const std::string prompt = replace_placeholders(
        emotion_prompt_template(),
        {{"persona", in.persona},
         {"interlocutor", in.interlocutor},
         {"context", in.context},
         {"conversation", in.conversation},
         {"interlocutor_recent_message", in.recent_message},
         {"cognitive_effort", std::string(to_string(in.effort))},
         {"retrieval_summary", in.retrieval_summary}});
    const std::string reply = complete_with_retry(
        backend, prompt, {{"user", in.recent_message}}, transport_retries);
    return parse_emotion_output(reply);
}

}  // namespace clinsim

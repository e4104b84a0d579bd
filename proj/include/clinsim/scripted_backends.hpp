#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "clinsim/backend.hpp"
#include "clinsim/emotions.hpp"
#include "clinsim/hashing.hpp"

// Deterministic stand-in backends. Every reply is a pure function of the
// prompt bytes, so full pipeline runs are reproducible without network access.

namespace clinsim {

/// Emits a syntactically valid emotion-state block. "neutral" scores every
/// emotion 0; "hash" derives integers from the prompt so states move over
/// the course of a conversation.
class ScriptedEmotionBackend : public Backend {
public:
    enum class Mode { Neutral, Hash };

    explicit ScriptedEmotionBackend(Mode mode = Mode::Neutral, std::uint64_t seed = 0)
        : mode_(mode), seed_(seed) {}

    std::string id() const override { return id_; }

    std::string complete(const std::string& system_prompt,
                         const std::vector<ChatMessage>&) override {
        const std::uint64_t base = fnv1a64(system_prompt, 0xcbf29ce484222325ull ^ seed_);
        std::string out;
        for (std::size_t i = 0; i < kEmotionCount; ++i) {
            int value = 0;
            if (mode_ == Mode::Hash)
                value = static_cast<int>(hash_combine(base, i) % 21) - 10;
            out += std::string(kEmotionNames[i]) + ": " + std::to_string(value) + "\n";
        }
        int valence = 0, arousal = 0, poignancy = 2;
        if (mode_ == Mode::Hash) {
            valence = static_cast<int>(hash_combine(base, 101) % 21) - 10;
            arousal = static_cast<int>(hash_combine(base, 102) % 11);
            poignancy = 1 + static_cast<int>(hash_combine(base, 103) % 10);
        }
        char ref[64];
        std::snprintf(ref, sizeof(ref), "This exchange (note %016llx) stays on the mind.",
                      static_cast<unsigned long long>(base));
        out += "valence: " + std::to_string(valence) + "\n";
        out += "arousal: " + std::to_string(arousal) + "\n";
        out += "reflection: " + std::string(ref) + "\n";
        out += "poignancy: " + std::to_string(poignancy) + "\n";
        return out;
    }

private:
    Mode mode_;
    std::uint64_t seed_;
    std::string id_ = "scripted-emotion";
};

/// Replies with a fixed effort token, or one hashed from the prompt.
class ScriptedEffortBackend : public Backend {
public:
    explicit ScriptedEffortBackend(std::string fixed_token = "FOCUSED")
        : fixed_(std::move(fixed_token)) {}

    static ScriptedEffortBackend hashed() {
        ScriptedEffortBackend b;
        b.fixed_.clear();
        return b;
    }

    std::string id() const override { return id_; }

    std::string complete(const std::string& system_prompt,
                         const std::vector<ChatMessage>&) override {
        if (!fixed_.empty()) return fixed_;
        return std::string(kEffortTokens[fnv1a64(system_prompt) % kEffortTokens.size()]);
    }

private:
    std::string fixed_;
    std::string id_ = "scripted-effort";
};

/// Yes/no classifier. "fixed" always gives the same answer; "keyword"
/// answers yes only when the keyword occurs in the prompt.
class ScriptedClassifierBackend : public Backend {
public:
    static ScriptedClassifierBackend fixed(bool answer) {
        ScriptedClassifierBackend b;
        b.fixed_answer_ = answer;
        return b;
    }

    static ScriptedClassifierBackend keyword(std::string needle) {
        ScriptedClassifierBackend b;
        b.keyword_ = std::move(needle);
        return b;
    }

    std::string id() const override { return id_; }

    std::string complete(const std::string& system_prompt,
                         const std::vector<ChatMessage>&) override {
        if (!keyword_.empty())
            return system_prompt.find(keyword_) != std::string::npos ? "yes" : "no";
        return fixed_answer_ ? "yes" : "no";
    }

private:
    bool fixed_answer_ = false;
    std::string keyword_;
    std::string id_ = "scripted-classifier";
};

/// Serves both judging stages. Committee prompts get a short discussion
/// ending in an "evidence:" line; scorer prompts get a rationale ending in
/// a hash-derived "score:" line, so score spread is stable but nontrivial.
class ScriptedJudgeBackend : public Backend {
public:
    explicit ScriptedJudgeBackend(std::uint64_t seed = 0) : seed_(seed) {}

    std::string id() const override { return id_; }

    std::string complete(const std::string& system_prompt,
                         const std::vector<ChatMessage>&) override {
        const std::uint64_t h = fnv1a64(system_prompt, 0xcbf29ce484222325ull ^ seed_);
        const bool is_scorer = system_prompt.find("score:") != std::string::npos;
        if (is_scorer) {
            const int score = 1 + static_cast<int>(h % 4);
            return "The anchors point at a clear band for this behavior.\nscore: " +
                   std::to_string(score);
        }
        return "The skeptic flags gaps in the opening exchange while the advocate credits the "
               "follow-up; the pragmatist lands in between.\nevidence: 0,1";
    }

private:
    std::uint64_t seed_;
    std::string id_ = "scripted-judge";
};

}  // namespace clinsim

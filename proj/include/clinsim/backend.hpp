#pragma once

#include <chrono>
#include <cstddef>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clinsim/errors.hpp"

// Language-model access. Every place the harness talks to a model goes
// through Backend, so scripted stand-ins and live HTTP providers are
// interchangeable.

namespace clinsim {

struct ChatMessage {
    std::string role;  // "user" or "assistant", from the backend's point of view
    std::string content;
};

class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string id() const = 0;

    /// Returns the model's reply or throws BackendError.
    virtual std::string complete(const std::string& system_prompt,
                                 const std::vector<ChatMessage>& history) = 0;
};

/// Retries transport failures only; semantic failures surface immediately.
inline std::string complete_with_retry(Backend& backend, const std::string& system_prompt,
                                       const std::vector<ChatMessage>& history,
                                       int transport_retries = 2) {
    for (int attempt = 0;; ++attempt) {
        try {
            return backend.complete(system_prompt, history);
        } catch (const BackendError& e) {
            if (!e.transport() || attempt >= transport_retries) throw;
        }
    }
}

/// Paces calls to one provider. Shared by every backend of that provider;
/// the only cross-conversation shared state in a campaign.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second = 0.0) {
        if (requests_per_second > 0.0)
            interval_ = std::chrono::duration_cast<std::chrono::nanoseconds>(
                std::chrono::duration<double>(1.0 / requests_per_second));
    }

    void acquire() {
        if (interval_.count() == 0) return;
        std::chrono::steady_clock::time_point wake;
        {
            std::lock_guard<std::mutex> lock(mu_);
            const auto now = std::chrono::steady_clock::now();
            wake = next_ > now ? next_ : now;
            next_ = wake + interval_;
        }
        std::this_thread::sleep_until(wake);
    }

private:
    std::mutex mu_;
    std::chrono::steady_clock::time_point next_{};
    std::chrono::nanoseconds interval_{0};
};

/// Replays canned turns: reply i answers the i-th request in the dialogue,
/// counted by the number of assistant messages already in the history. This
/// keeps the backend stateless and safe to share across conversations.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend(std::string id, std::vector<std::string> turns,
                    std::optional<std::string> fallback = std::nullopt)
        : id_(std::move(id)), turns_(std::move(turns)), fallback_(std::move(fallback)) {}

    static ScriptedBackend from_fixture_file(const std::string& id, const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open scripted fixture: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("bad scripted fixture " + path + ": " + e.what());
        }
        std::vector<std::string> turns;
        for (const auto& t : j.value("turns", nlohmann::json::array()))
            turns.push_back(t.get<std::string>());
        std::optional<std::string> fallback;
        if (j.contains("default")) fallback = j["default"].get<std::string>();
        return ScriptedBackend(id, std::move(turns), std::move(fallback));
    }

    std::string id() const override { return id_; }

    std::string complete(const std::string&, const std::vector<ChatMessage>& history) override {
        std::size_t turn = 0;
        for (const auto& m : history)
            if (m.role == "assistant") ++turn;
        if (turn < turns_.size()) return turns_[turn];
        if (fallback_) return *fallback_;
        if (!turns_.empty()) return turns_.back();
        throw BackendError("scripted backend '" + id_ + "' has no reply for turn " +
                               std::to_string(turn),
                           /*transport_failure=*/false);
    }

private:
    std::string id_;
    std::vector<std::string> turns_;
    std::optional<std::string> fallback_;
};

/// Test shim around a plain function.
class FunctionBackend : public Backend {
public:
    using Fn = std::function<std::string(const std::string&, const std::vector<ChatMessage>&)>;

    FunctionBackend(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

    std::string id() const override { return id_; }

    std::string complete(const std::string& system_prompt,
                         const std::vector<ChatMessage>& history) override {
        return fn_(system_prompt, history);
    }

private:
    std::string id_;
    Fn fn_;
};

}  // namespace clinsim

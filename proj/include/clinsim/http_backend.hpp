#pragma once

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "clinsim/backend.hpp"

// Chat-completions client for OpenAI-compatible providers. Rate limiting is
// handled by the caller's RateLimiter; this class only maps one request to
// one reply and classifies failures as transport or semantic.

namespace clinsim {

struct HttpBackendConfig {
    std::string model_id;                       // name used in transcripts and reports
    std::string endpoint;                       // scheme://host[:port]
    std::string path = "/v1/chat/completions";  // provider route
    std::string model;                          // provider-side model name
    std::string api_key_env;                    // environment variable holding the key
    double temperature = 1.0;
    bool send_temperature = true;  // some providers reject the field
    int timeout_seconds = 120;
};

class HttpChatBackend : public Backend {
public:
    explicit HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
        if (config_.endpoint.empty())
            throw ValidationError("http backend '" + config_.model_id + "' has no endpoint");
        if (config_.model.empty())
            throw ValidationError("http backend '" + config_.model_id + "' has no model name");
    }

    std::string id() const override { return config_.model_id; }

    std::string complete(const std::string& system_prompt,
                         const std::vector<ChatMessage>& history) override {
        nlohmann::json body;
        body["model"] = config_.model;
        if (config_.send_temperature) body["temperature"] = config_.temperature;
        nlohmann::json messages = nlohmann::json::array();
        messages.push_back({{"role", "system"}, {"content", system_prompt}});
        for (const auto& m : history)
            messages.push_back({{"role", m.role}, {"content", m.content}});
        body["messages"] = messages;

        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        httplib::Headers headers;
        if (!config_.api_key_env.empty()) {
            const char* key = std::getenv(config_.api_key_env.c_str());
            if (!key || !*key)
                throw BackendError("environment variable " + config_.api_key_env +
                                       " is empty; no API key for '" + config_.model_id + "'",
                                   /*transport_failure=*/false);
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        auto res = client.Post(config_.path, headers, body.dump(), "application/json");
        if (!res)
            throw BackendError("connection to " + config_.endpoint + " failed: " +
                                   httplib::to_string(res.error()),
                               /*transport_failure=*/true);
        // 429 and 5xx are retryable; other non-2xx responses are not.
        if (res->status == 429 || res->status >= 500)
            throw BackendError("provider returned status " + std::to_string(res->status) +
                                   " for '" + config_.model_id + "'",
                               /*transport_failure=*/true);
        if (res->status < 200 || res->status >= 300)
            throw BackendError("provider returned status " + std::to_string(res->status) +
                                   " for '" + config_.model_id + "': " + res->body,
                               /*transport_failure=*/false);

        try {
            const nlohmann::json reply = nlohmann::json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("unparseable provider response for '" + config_.model_id +
                                   "': " + e.what(),
                               /*transport_failure=*/false);
        }
    }

private:
    HttpBackendConfig config_;
};

}  // namespace clinsim

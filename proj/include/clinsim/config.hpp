#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clinsim/http_backend.hpp"
#include "clinsim/judge.hpp"
#include "clinsim/orchestrator.hpp"
#include "clinsim/scripted_backends.hpp"

// Campaign configuration: one JSON file wires up the doctor models, the
// patient-side backends, the embedder, the judge, and the run parameters.
// Relative paths inside the file resolve against the file's directory.

namespace clinsim {

/// Owns every backend a campaign needs and hands out non-owning views in
/// the shapes the pipeline functions expect.
struct CampaignStack {
    std::vector<std::unique_ptr<Backend>> owned_backends;
    std::vector<std::shared_ptr<RateLimiter>> limiters;
    std::unique_ptr<Embedder> embedder;

    PatientBackends patient_backends;
    PatientAgentConfig patient_config;
    std::vector<DoctorModel> models;
    Backend* judge = nullptr;               // optional
    Backend* closure_classifier = nullptr;  // optional
    CampaignConfig campaign;
    JudgeConfig judge_config;
};

namespace detail {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& rel) {
    const std::filesystem::path p(rel);
    return p.is_absolute() ? p : base / p;
}

/// Instantiates one backend from its config object.
inline std::unique_ptr<Backend> make_backend(const nlohmann::json& j,
                                             const std::filesystem::path& base,
                                             const std::string& where) {
    if (!j.is_object() || !j.contains("kind"))
        throw ParseError(where + ": backend config requires a 'kind' field");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "scripted-fixture") {
        const std::string fixture = j.at("fixture").get<std::string>();
        return std::make_unique<ScriptedBackend>(ScriptedBackend::from_fixture_file(
            j.value("id", std::string("scripted")), resolve(base, fixture).string()));
    }
    if (kind == "scripted-emotion") {
        const std::string mode = j.value("mode", "neutral");
        if (mode != "neutral" && mode != "hash")
            throw ParseError(where + ": scripted-emotion mode must be neutral or hash");
        return std::make_unique<ScriptedEmotionBackend>(
            mode == "hash" ? ScriptedEmotionBackend::Mode::Hash
                           : ScriptedEmotionBackend::Mode::Neutral,
            j.value("seed", std::uint64_t{0}));
    }
    if (kind == "scripted-effort") {
        if (j.value("mode", "fixed") == "hash") {
            return std::make_unique<ScriptedEffortBackend>(ScriptedEffortBackend::hashed());
        }
        return std::make_unique<ScriptedEffortBackend>(j.value("token", std::string("FOCUSED")));
    }
    if (kind == "scripted-classifier") {
        if (j.contains("keyword"))
            return std::make_unique<ScriptedClassifierBackend>(
                ScriptedClassifierBackend::keyword(j.at("keyword").get<std::string>()));
        return std::make_unique<ScriptedClassifierBackend>(
            ScriptedClassifierBackend::fixed(j.value("answer", std::string("no")) == "yes"));
    }
    if (kind == "scripted-judge")
        return std::make_unique<ScriptedJudgeBackend>(j.value("seed", std::uint64_t{0}));
    if (kind == "http") {
        HttpBackendConfig cfg;
        cfg.model_id = j.value("id", j.value("model", std::string("http")));
        cfg.endpoint = j.at("endpoint").get<std::string>();
        cfg.path = j.value("path", cfg.path);
        cfg.model = j.at("model").get<std::string>();
        cfg.api_key_env = j.value("api_key_env", std::string());
        cfg.temperature = j.value("temperature", cfg.temperature);
        cfg.send_temperature = j.value("send_temperature", cfg.send_temperature);
        cfg.timeout_seconds = j.value("timeout_seconds", cfg.timeout_seconds);
        return std::make_unique<HttpChatBackend>(std::move(cfg));
    }
    throw ParseError(where + ": unknown backend kind: " + kind);
}

}  // namespace detail

/// Loads a campaign configuration file and builds the full backend stack.
inline CampaignStack load_campaign_stack(const std::filesystem::path& config_path) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open campaign config: " + config_path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(config_path.string() + ": " + e.what());
    }
    const std::filesystem::path base = config_path.parent_path();

    CampaignStack stack;
    auto own = [&](std::unique_ptr<Backend> b) -> Backend* {
        stack.owned_backends.push_back(std::move(b));
        return stack.owned_backends.back().get();
    };

    stack.campaign.cap = doc.value("cap", stack.campaign.cap);
    stack.campaign.repeats = doc.value("repeats", stack.campaign.repeats);
    stack.campaign.parallelism = doc.value("parallelism", stack.campaign.parallelism);
    stack.campaign.seconds_per_message =
        doc.value("seconds_per_message", stack.campaign.seconds_per_message);

    {
        const nlohmann::json e = doc.value("embedder", nlohmann::json::object());
        const std::string kind = e.value("kind", "hash");
        if (kind != "hash")
            throw ParseError(config_path.string() + ": unknown embedder kind: " + kind);
        stack.embedder = std::make_unique<HashEmbedder>(
            e.value("dim", std::size_t{64}), e.value("seed", std::uint64_t{0x5eedull}));
    }

    if (!doc.contains("patient") || !doc.at("patient").is_object())
        throw ParseError(config_path.string() + ": missing 'patient' section");
    {
        const auto& pj = doc.at("patient");
        stack.patient_backends.effort =
            own(detail::make_backend(pj.at("effort"), base, "patient.effort"));
        stack.patient_backends.emotion =
            own(detail::make_backend(pj.at("emotion"), base, "patient.emotion"));
        stack.patient_backends.responder =
            own(detail::make_backend(pj.at("responder"), base, "patient.responder"));
        stack.patient_config.top_k = pj.value("top_k", stack.patient_config.top_k);
        stack.patient_config.closure_marker =
            pj.value("closure_marker", stack.patient_config.closure_marker);
        if (pj.contains("responder_template_file"))
            stack.patient_config.responder_template = detail::read_text_file(
                detail::resolve(base, pj.at("responder_template_file").get<std::string>()));
        if (pj.contains("weights")) {
            const auto& wj = pj.at("weights");
            auto& w = stack.patient_config.weights;
            w.semantic = wj.value("semantic", w.semantic);
            w.recency = wj.value("recency", w.recency);
            w.importance = wj.value("importance", w.importance);
            w.emotion = wj.value("emotion", w.emotion);
            w.decay_rate = wj.value("decay_rate", w.decay_rate);
            w.unit_hours = wj.value("unit_hours", w.unit_hours);
            w.validate();
        }
    }

    if (doc.contains("closure_classifier"))
        stack.closure_classifier =
            own(detail::make_backend(doc.at("closure_classifier"), base, "closure_classifier"));

    if (!doc.contains("models") || !doc.at("models").is_array() || doc.at("models").empty())
        throw ParseError(config_path.string() + ": 'models' must be a non-empty array");
    for (const auto& mj : doc.at("models")) {
        DoctorModel model;
        model.model_id = mj.at("model_id").get<std::string>();
        model.backend = own(detail::make_backend(mj, base, "model " + model.model_id));
        if (mj.contains("sampling")) model.sampling_note = mj.at("sampling").get<std::string>();
        if (mj.value("kind", "") == "http" && mj.contains("temperature"))
            model.sampling_note = "temperature=" + std::to_string(
                                      mj.at("temperature").get<double>());
        const double rps = mj.value("requests_per_second", 0.0);
        if (rps > 0.0) {
            stack.limiters.push_back(std::make_shared<RateLimiter>(rps));
            model.limiter = stack.limiters.back();
        }
        if (mj.contains("closure")) {
            const auto& cj = mj.at("closure");
            const std::string mode = cj.value("mode", "marker");
            if (mode == "marker") {
                model.closure.mode = ClosureDetection::Mode::Marker;
                model.closure.marker = cj.value("marker", model.closure.marker);
            } else if (mode == "classifier") {
                model.closure.mode = ClosureDetection::Mode::Classifier;
                if (cj.contains("backend")) {
                    model.closure.classifier = own(detail::make_backend(
                        cj.at("backend"), base, "model " + model.model_id + " closure"));
                } else if (stack.closure_classifier) {
                    model.closure.classifier = stack.closure_classifier;
                } else {
                    throw ParseError(config_path.string() + ": model " + model.model_id +
                                     " uses classifier closure but no classifier is configured");
                }
            } else {
                throw ParseError(config_path.string() + ": unknown closure mode: " + mode);
            }
        }
        stack.models.push_back(std::move(model));
    }

    if (doc.contains("judge")) {
        const auto& jj = doc.at("judge");
        stack.judge = own(detail::make_backend(jj, base, "judge"));
        stack.judge_config.parallelism = jj.value("parallelism", stack.judge_config.parallelism);
        if (jj.contains("committee_template_file"))
            stack.judge_config.committee_template = detail::read_text_file(
                detail::resolve(base, jj.at("committee_template_file").get<std::string>()));
        if (jj.contains("scorer_template_file"))
            stack.judge_config.scorer_template = detail::read_text_file(
                detail::resolve(base, jj.at("scorer_template_file").get<std::string>()));
    }
    return stack;
}

}  // namespace clinsim

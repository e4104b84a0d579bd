#include <catch_amalgamated.hpp>

#include "clinsim/affect.hpp"
#include "clinsim/backend.hpp"
#include "clinsim/errors.hpp"
#include "helpers.hpp"

using namespace clinsim;

TEST_CASE("well-formed emotion output parses", "[affect]") {
    const EmotionUpdate u = parse_emotion_output(testutil::valid_emotion_reply());
    for (std::size_t i = 0; i < kEmotionCount; ++i) CHECK(u.state.emotions[i] == 0);
    CHECK(u.state.valence == 1);
    CHECK(u.state.arousal == 3);
    CHECK(u.reflection.poignancy == 4);
    CHECK(u.reflection.text == "The visit felt manageable today.");
    CHECK(u.reflection.importance() == Catch::Approx(0.4));
}

TEST_CASE("key matching is case and whitespace tolerant", "[affect]") {
    std::string reply = testutil::valid_emotion_reply();
    reply.replace(reply.find("anger: 0"), 8, "  Anger :  -3");
    const EmotionUpdate u = parse_emotion_output(reply);
    CHECK(u.state.emotions[emotion_index("anger")] == -3);
}

TEST_CASE("prose lines between keys are ignored", "[affect]") {
    std::string reply = "Here is my assessment of the patient.\n";
    reply += testutil::valid_emotion_reply();
    reply += "\nThat concludes the report.\n";
    CHECK_NOTHROW(parse_emotion_output(reply));
}

TEST_CASE("each missing emotion key is an error", "[affect]") {
    for (auto name : kEmotionNames) {
        std::string reply = testutil::valid_emotion_reply();
        const std::string line = std::string(name) + ": 0\n";
        reply.erase(reply.find(line), line.size());
        CHECK_THROWS_AS(parse_emotion_output(reply), ParseError);
    }
}

TEST_CASE("missing scalar and reflection keys are errors", "[affect]") {
    for (const char* key : {"valence: 1\n", "arousal: 3\n", "poignancy: 4\n",
                            "reflection: The visit felt manageable today.\n"}) {
        std::string reply = testutil::valid_emotion_reply();
        reply.erase(reply.find(key), std::string(key).size());
        CHECK_THROWS_AS(parse_emotion_output(reply), ParseError);
    }
}

TEST_CASE("out-of-range values are rejected", "[affect]") {
    auto with = [](const std::string& key, const std::string& value) {
        std::string reply = testutil::valid_emotion_reply();
        const auto pos = reply.find(key + ":");
        const auto eol = reply.find('\n', pos);
        reply.replace(pos, eol - pos, key + ": " + value);
        return reply;
    };
    CHECK_THROWS_AS(parse_emotion_output(with("joy", "11")), ParseError);
    CHECK_THROWS_AS(parse_emotion_output(with("joy", "-11")), ParseError);
    CHECK_THROWS_AS(parse_emotion_output(with("valence", "12")), ParseError);
    CHECK_THROWS_AS(parse_emotion_output(with("arousal", "-1")), ParseError);
    CHECK_THROWS_AS(parse_emotion_output(with("poignancy", "0")), ParseError);
    CHECK_THROWS_AS(parse_emotion_output(with("poignancy", "11")), ParseError);
    CHECK_THROWS_AS(parse_emotion_output(with("fear", "2.5")), ParseError);
    CHECK_THROWS_AS(parse_emotion_output(with("fear", "high")), ParseError);
    CHECK_NOTHROW(parse_emotion_output(with("fear", "+7")));
}

TEST_CASE("duplicate keys are rejected", "[affect]") {
    std::string reply = testutil::valid_emotion_reply();
    reply += "joy: 5\n";
    CHECK_THROWS_AS(parse_emotion_output(reply), ParseError);
    std::string reply2 = testutil::valid_emotion_reply();
    reply2 += "reflection: another one\n";
    CHECK_THROWS_AS(parse_emotion_output(reply2), ParseError);
}

TEST_CASE("empty messages classify as AMBIGUOUS without a backend call", "[affect]") {
    bool called = false;
    FunctionBackend backend("probe", [&](const std::string&, const auto&) {
        called = true;
        return "FOCUSED";
    });
    CHECK(classify_cognitive_effort("   ", "ctx", backend) == CognitiveEffort::Ambiguous);
    CHECK_FALSE(called);
    CHECK(classify_cognitive_effort("How are you?", "ctx", backend) ==
          CognitiveEffort::Focused);
    CHECK(called);
}

TEST_CASE("effort classification trims and validates the reply", "[affect]") {
    FunctionBackend padded("p", [](const std::string&, const auto&) { return " COMPLEX \n"; });
    CHECK(classify_cognitive_effort("hi", "ctx", padded) == CognitiveEffort::Complex);
    FunctionBackend bad("b", [](const std::string&, const auto&) { return "WHATEVER"; });
    CHECK_THROWS_AS(classify_cognitive_effort("hi", "ctx", bad), ValidationError);
}

TEST_CASE("update_emotion_state fills the prompt and decodes the reply", "[affect]") {
    std::string seen_prompt;
    FunctionBackend backend("emo", [&](const std::string& prompt, const auto&) {
        seen_prompt = prompt;
        std::string reply = testutil::valid_emotion_reply();
        reply.replace(reply.find("sadness: 0"), 10, "sadness: 6");
        return reply;
    });
    EmotionUpdateInputs in;
    in.persona = "PERSONA-TOKEN";
    in.interlocutor = "the doctor";
    in.context = "CONTEXT-TOKEN";
    in.conversation = "CONVO-TOKEN";
    in.recent_message = "How did the new dose feel?";
    in.effort = CognitiveEffort::Focused;
    in.retrieval_summary = "- a memory line";
    const EmotionUpdate u = update_emotion_state(in, backend);
    CHECK(u.state.emotions[emotion_index("sadness")] == 6);
    CHECK(seen_prompt.find("PERSONA-TOKEN") != std::string::npos);
    CHECK(seen_prompt.find("CONTEXT-TOKEN") != std::string::npos);
    CHECK(seen_prompt.find("CONVO-TOKEN") != std::string::npos);
    CHECK(seen_prompt.find("How did the new dose feel?") != std::string::npos);
    CHECK(seen_prompt.find("FOCUSED") != std::string::npos);
    CHECK(seen_prompt.find("{{") == std::string::npos);
}

TEST_CASE("transport failures are retried, semantic failures are not", "[affect]") {
    int calls = 0;
    FunctionBackend flaky("f", [&](const std::string&, const auto&) -> std::string {
        if (++calls < 3) throw BackendError("connection reset", /*transport_failure=*/true);
        return testutil::valid_emotion_reply();
    });
    EmotionUpdateInputs in;
    in.recent_message = "hello";
    CHECK_NOTHROW(update_emotion_state(in, flaky, 2));
    CHECK(calls == 3);

    int semantic_calls = 0;
    FunctionBackend refusing("r", [&](const std::string&, const auto&) -> std::string {
        ++semantic_calls;
        throw BackendError("bad request", /*transport_failure=*/false);
    });
    CHECK_THROWS_AS(update_emotion_state(in, refusing, 2), BackendError);
    CHECK(semantic_calls == 1);
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "specfi/embedding.hpp"  // ProviderConfig

namespace specfi {

struct ChatRequest {
    std::string system;
    std::string user;
    double temperature = 1.0;
    int max_tokens = 256;
    std::optional<std::uint64_t> seed;  // passed through when the endpoint supports it
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string complete(const ChatRequest& req) = 0;
    virtual std::string model_tag() const = 0;
};

// Deterministic stand-in for generation. For the hypothetical-document
// prompts it echoes the target narrative description plus that narrative's
// few-shot example text, followed by a seed-derived filler token so repeated
// samples differ. Output is a pure function of (prompt, seed).
class MockChatProvider : public ChatProvider {
public:
    std::string complete(const ChatRequest& req) override;
    std::string model_tag() const override { return "mock-llm"; }
};

// OpenAI-shaped chat completions endpoint.
class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(ProviderConfig config);
    std::string complete(const ChatRequest& req) override;
    std::string model_tag() const override { return config_.model; }

private:
    ProviderConfig config_;
};

}  // namespace specfi

#include "specfi/llm.hpp"

#include <chrono>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "specfi/errors.hpp"
#include "specfi/text.hpp"
#include "specfi/util.hpp"

namespace specfi {

using nlohmann::json;

namespace {

// Extracts the substring after the last `marker`, up to the next newline
// (or end of string).
std::optional<std::string> after_last(const std::string& text, const std::string& marker) {
    auto pos = text.rfind(marker);
    if (pos == std::string::npos) return std::nullopt;
    auto start = pos + marker.size();
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    return trim(text.substr(start, end - start));
}

}  // namespace

std::string MockChatProvider::complete(const ChatRequest& req) {
    std::string out;
    auto target = after_last(req.user, "Narrative: ");
    if (target && !target->empty()) {
        out = *target;
        // locate this narrative's few-shot example, if any
        std::string pair_marker = "Narrative: " + *target + "\nText: ";
        auto pos = req.user.find(pair_marker);
        if (pos != std::string::npos && pos + pair_marker.size() < req.user.rfind("Narrative: ")) {
            auto start = pos + pair_marker.size();
            auto end = req.user.find("\n\n", start);
            if (end == std::string::npos) end = req.user.size();
            std::string example = trim(req.user.substr(start, end - start));
            if (!example.empty()) out += " " + example;
        }
    } else {
        out = trim(req.user);
    }
    std::uint64_t s = req.seed.value_or(0);
    out += " v" + hex64(fnv1a64_u64(s)).substr(0, 6);
    // honor the output length cap, coarsely (whitespace tokens as proxy)
    auto words = word_count(out);
    if (req.max_tokens > 0 && words > static_cast<std::size_t>(req.max_tokens)) {
        std::size_t count = 0;
        std::size_t i = 0;
        bool in_word = false;
        for (; i < out.size(); ++i) {
            bool ws = std::isspace(static_cast<unsigned char>(out[i])) != 0;
            if (!ws && !in_word && ++count > static_cast<std::size_t>(req.max_tokens)) break;
            in_word = !ws;
        }
        out.resize(i);
        out = trim(out);
    }
    return out;
}

HttpChatProvider::HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {}

std::string HttpChatProvider::complete(const ChatRequest& req) {
    auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw input_error("endpoint must include a scheme: " + config_.endpoint);
    auto path_start = config_.endpoint.find('/', scheme_end + 3);
    std::string base = path_start == std::string::npos ? config_.endpoint
                                                       : config_.endpoint.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

    json body;
    body["model"] = config_.model;
    body["messages"] = json::array({{{"role", "system"}, {"content", req.system}},
                                    {{"role", "user"}, {"content", req.user}}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    if (req.seed) body["seed"] = *req.seed;

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
        httplib::Client cli(base);
        cli.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
        auto res = cli.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "no response from " + base;
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw provider_error("chat endpoint returned HTTP " + std::to_string(res->status));
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty())
            throw provider_error("malformed chat completion response");
        return parsed["choices"][0].at("message").at("content").get<std::string>();
    }
    throw provider_error("chat request failed after " + std::to_string(config_.max_retries + 1) +
                         " attempts: " + last_error);
}

}  // namespace specfi

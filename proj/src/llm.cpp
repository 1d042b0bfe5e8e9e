#include "btforge/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "btforge/btree.hpp"

namespace btforge::llm {

using ordered_json = nlohmann::ordered_json;

void LlmConfig::validate() const {
    if (retries < 0) throw std::invalid_argument("retry count must be >= 0");
    if (timeout_s <= 0.0) throw std::invalid_argument("request timeout must be positive");
    if (max_concurrency < 1) throw std::invalid_argument("max concurrency must be >= 1");
}

namespace {

struct ParsedEndpoint {
    std::string host_port; // scheme://host[:port]
    std::string path_prefix;
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    const std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("endpoint URL must include a scheme: " + endpoint);
    }
    const std::size_t path_start = endpoint.find('/', scheme_end + 3);
    ParsedEndpoint parsed;
    if (path_start == std::string::npos) {
        parsed.host_port = endpoint;
    } else {
        parsed.host_port = endpoint.substr(0, path_start);
        parsed.path_prefix = endpoint.substr(path_start);
        while (!parsed.path_prefix.empty() && parsed.path_prefix.back() == '/') {
            parsed.path_prefix.pop_back();
        }
    }
    return parsed;
}

const char* api_key_from_env() {
    if (const char* key = std::getenv("BTFORGE_API_KEY")) return key;
    if (const char* key = std::getenv("OPENAI_API_KEY")) return key;
    return nullptr;
}

} // namespace

struct HttpChatClient::Slot {
    HttpChatClient* owner;
    ~Slot() {
        std::lock_guard<std::mutex> lock(owner->mutex_);
        --owner->in_flight_;
        owner->cv_.notify_one();
    }
};

HttpChatClient::Slot HttpChatClient::acquire_slot() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [this] { return in_flight_ < config_.max_concurrency; });
    ++in_flight_;
    return Slot{this};
}

HttpChatClient::HttpChatClient(LlmConfig config) : config_(std::move(config)) {
    config_.validate();
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
    return complete_exchange(messages).response;
}

ChatExchange HttpChatClient::complete_exchange(const std::vector<ChatMessage>& messages) {
    const Slot slot = acquire_slot();
    const ParsedEndpoint endpoint = parse_endpoint(config_.endpoint);

    ordered_json body;
    body["model"] = config_.model;
    body["messages"] = ordered_json::array();
    for (const ChatMessage& message : messages) {
        body["messages"].push_back(ordered_json{{"role", message.role}, {"content", message.content}});
    }
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_tokens;
    body["stream"] = false;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* key = api_key_from_env()) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const auto started = std::chrono::steady_clock::now();
    std::string last_error;
    const int attempts = config_.retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
        }
        httplib::Client client(endpoint.host_port);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
        client.set_write_timeout(std::chrono::duration<double>(config_.timeout_s));

        httplib::Result result = client.Post(endpoint.path_prefix + "/chat/completions", headers,
                                             payload, "application/json");
        if (!result) {
            last_error = httplib::to_string(result.error());
            continue; // transport error, retry
        }
        if (result->status < 200 || result->status >= 300) {
            throw std::runtime_error("chat completion failed with HTTP status " +
                                     std::to_string(result->status) + ": " + result->body);
        }

        ordered_json reply;
        try {
            reply = ordered_json::parse(result->body);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("malformed chat completion body: ") + e.what());
        }
        if (!reply.contains("choices") || !reply["choices"].is_array() ||
            reply["choices"].empty() || !reply["choices"][0].contains("message")) {
            throw std::runtime_error("malformed chat completion body: missing choices[0].message");
        }

        ChatExchange exchange;
        exchange.messages = messages;
        exchange.response = reply["choices"][0]["message"].value("content", std::string());
        exchange.latency_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (reply.contains("usage")) {
            exchange.prompt_tokens = reply["usage"].value("prompt_tokens", -1);
            exchange.completion_tokens = reply["usage"].value("completion_tokens", -1);
        }
        return exchange;
    }
    throw std::runtime_error("chat completion transport failed after " +
                             std::to_string(attempts) + " attempts: " + last_error);
}

std::uint64_t fingerprint(const std::vector<ChatMessage>& messages) {
    // FNV-1a, stable across platforms.
    std::uint64_t hash = 1469598103934665603ull;
    const auto mix = [&hash](const std::string& text) {
        for (unsigned char c : text) {
            hash ^= c;
            hash *= 1099511628211ull;
        }
        hash ^= 0x1e;
        hash *= 1099511628211ull;
    };
    for (const ChatMessage& message : messages) {
        mix(message.role);
        mix(message.content);
    }
    return hash;
}

std::string fingerprint_hex(const std::vector<ChatMessage>& messages) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t value = fingerprint(messages);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

void ScriptedMockClient::add_response(const std::vector<ChatMessage>& prompt,
                                      std::string response) {
    scripted_[fingerprint_hex(prompt)] = std::move(response);
}

void ScriptedMockClient::add_response_hex(const std::string& fingerprint_hex,
                                          std::string response) {
    scripted_[fingerprint_hex] = std::move(response);
}

void ScriptedMockClient::set_responder(
    std::function<std::string(const std::vector<ChatMessage>&)> responder) {
    responder_ = std::move(responder);
}

std::string ScriptedMockClient::complete(const std::vector<ChatMessage>& messages) {
    requests_.push_back(messages);
    const auto it = scripted_.find(fingerprint_hex(messages));
    if (it != scripted_.end()) return it->second;
    if (responder_) return responder_(messages);
    return default_response_;
}

std::optional<std::string> extract_bt_xml(const std::string& response) {
    return btree::locate_tree_markup(response);
}

} // namespace btforge::llm

#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace btforge::llm {

struct ChatMessage {
    std::string role; // system | user | assistant
    std::string content;
};

struct LlmConfig {
    std::string endpoint = "http://localhost:11434/v1";
    std::string model;
    double temperature = 0.7;
    int max_tokens = 2048;
    double timeout_s = 120.0;
    int retries = 2;        // extra attempts after the first
    int backoff_ms = 250;   // doubles per retry
    int max_concurrency = 4;

    void validate() const;
};

struct ChatExchange {
    std::vector<ChatMessage> messages;
    std::string response;
    double latency_s = 0.0;
    int prompt_tokens = -1;     // -1 when the server does not report usage
    int completion_tokens = -1;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

// Chat-completions client over HTTP: POST {endpoint}/chat/completions
// with model/messages/temperature fields. Transport failures retry with
// exponential backoff; the assistant text comes back verbatim. Reads the
// API key from BTFORGE_API_KEY or OPENAI_API_KEY when set. Shareable
// across threads; in-flight requests are capped by max_concurrency.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(LlmConfig config);

    std::string complete(const std::vector<ChatMessage>& messages) override;
    ChatExchange complete_exchange(const std::vector<ChatMessage>& messages);

    const LlmConfig& config() const { return config_; }

private:
    struct Slot;
    Slot acquire_slot();

    LlmConfig config_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int in_flight_ = 0;
};

// Stable fingerprint of a rendered prompt (FNV-1a over roles and
// contents); keys scripted mock lookups.
std::uint64_t fingerprint(const std::vector<ChatMessage>& messages);
std::string fingerprint_hex(const std::vector<ChatMessage>& messages);

// Deterministic offline stand-in: canned responses by prompt fingerprint,
// an optional responder function for request-dependent scripts, and a
// default for everything else. Records every request it serves.
class ScriptedMockClient : public ChatClient {
public:
    void add_response(const std::vector<ChatMessage>& prompt, std::string response);
    void add_response_hex(const std::string& fingerprint_hex, std::string response);
    void set_default_response(std::string response) { default_response_ = std::move(response); }
    void set_responder(std::function<std::string(const std::vector<ChatMessage>&)> responder);

    std::string complete(const std::vector<ChatMessage>& messages) override;

    const std::vector<std::vector<ChatMessage>>& requests() const { return requests_; }
    void clear_requests() { requests_.clear(); }

private:
    std::map<std::string, std::string> scripted_;
    std::string default_response_;
    std::function<std::string(const std::vector<ChatMessage>&)> responder_;
    std::vector<std::vector<ChatMessage>> requests_;
};

// Candidate tree markup from a raw model reply: the substring from the
// first "<BehaviorTree" through its balanced closing tag, code fences and
// prose dropped. Absence is a value (counted upstream as a syntactic
// failure), and the function is idempotent.
std::optional<std::string> extract_bt_xml(const std::string& response);

} // namespace btforge::llm

#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>

#include "finpos/provider.hpp"

namespace finpos::agents {

// Chat-completion-style HTTP client. One user message per request; the reply
// text is choices[0].message.content. Retries with exponential backoff; a
// global rate cap is enforced across threads.
class RemoteProvider : public Provider {
public:
    explicit RemoteProvider(ProviderConfig config) : config_(std::move(config)) {
        if (config_.endpoint.empty()) throw ProviderError("remote provider: endpoint not configured");
    }

    std::string complete(const std::string& prompt) override {
        json body;
        body["model"] = config_.model;
        body["temperature"] = config_.temperature;
        body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
        const std::string payload = body.dump();

        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms(attempt)));
            throttle();
            httplib::Client client(config_.endpoint);
            client.set_read_timeout(config_.timeout_seconds, 0);
            client.set_connection_timeout(config_.timeout_seconds, 0);
            httplib::Headers headers;
            if (const char* key = std::getenv(config_.api_key_env.c_str()))
                headers.emplace("Authorization", std::string("Bearer ") + key);

            auto res = client.Post(config_.completion_path, headers, payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429) {
                int retry_after = 0;
                if (res->has_header("Retry-After"))
                    retry_after = std::atoi(res->get_header_value("Retry-After").c_str());
                last_error = "rate limited (429), retry-after " + std::to_string(retry_after) + "s";
                if (attempt == config_.max_retries)
                    throw RateLimitError("remote provider: " + last_error, retry_after);
                continue;
            }
            if (res->status >= 400) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            return extract_text(res->body);
        }
        throw ProviderError("remote provider: retries exhausted; last cause: " + last_error);
    }

private:
    static int backoff_ms(int attempt) { return 250 * (1 << (attempt - 1)); }

    void throttle() {
        if (config_.requests_per_second <= 0) return;
        const auto min_gap = std::chrono::duration<double>(1.0 / config_.requests_per_second);
        std::lock_guard<std::mutex> lock(rate_mutex_);
        const auto now = std::chrono::steady_clock::now();
        if (last_request_.time_since_epoch().count() != 0) {
            const auto next_allowed =
                last_request_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(min_gap);
            if (now < next_allowed) std::this_thread::sleep_for(next_allowed - now);
        }
        last_request_ = std::chrono::steady_clock::now();
    }

    static std::string extract_text(const std::string& body) {
        json parsed;
        try {
            parsed = json::parse(body);
        } catch (const json::parse_error& e) {
            throw ProviderError(std::string("remote provider: malformed response body: ") + e.what());
        }
        try {
            return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            throw ProviderError("remote provider: response missing choices[0].message.content");
        }
    }

    ProviderConfig config_;
    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point last_request_{};
};

inline std::unique_ptr<Provider> make_provider(const ProviderConfig& config, std::uint64_t seed) {
    if (config.mode == ProviderMode::stub) return std::make_unique<StubProvider>(seed);
    return std::make_unique<RemoteProvider>(config);
}

}  // namespace finpos::agents

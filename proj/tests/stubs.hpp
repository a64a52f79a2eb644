#pragma once

#include <deque>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mhc/prompting.hpp"

namespace stubs {

/// Items listed under "## Posts" in a rendered prompt.
inline std::vector<mhc::PromptItem> prompt_items(const std::string& prompt) {
    std::vector<mhc::PromptItem> items;
    std::istringstream in(prompt);
    std::string line;
    bool posts = false;
    while (std::getline(in, line)) {
        if (line.rfind("## ", 0) == 0) {
            posts = line == "## Posts";
            continue;
        }
        if (!posts || line.empty()) continue;
        const auto colon = line.find(": ");
        items.push_back({line.substr(0, colon), line.substr(colon + 2)});
    }
    return items;
}

/// Answers every post with a label chosen per id; echoes the post text.
class LabelingClient : public mhc::LlmClient {
public:
    using Chooser = std::function<std::string(const std::string& id)>;
    explicit LabelingClient(Chooser choose) : choose_(std::move(choose)) {}

    std::string provider() const override { return "stub"; }
    std::string complete(const mhc::LlmRequest& request) override {
        requests.push_back(request);
        std::string out;
        for (const auto& item : prompt_items(request.prompt))
            out += mhc::format_schema_line(item.id, choose_(item.id), item.text) + "\n";
        return out;
    }

    std::vector<mhc::LlmRequest> requests;

private:
    Chooser choose_;
};

/// Throws the queued errors first, then delegates to `next`.
class FailingClient : public mhc::LlmClient {
public:
    FailingClient(std::deque<mhc::LlmApiError> errors, mhc::LlmClient* next)
        : errors_(std::move(errors)), next_(next) {}

    std::string provider() const override { return "stub"; }
    std::string complete(const mhc::LlmRequest& request) override {
        requests.push_back(request);
        if (!errors_.empty()) {
            auto e = errors_.front();
            errors_.pop_front();
            throw e;
        }
        if (!next_) throw mhc::LlmApiError(500, "no delegate");
        return next_->complete(request);
    }

    std::vector<mhc::LlmRequest> requests;

private:
    std::deque<mhc::LlmApiError> errors_;
    mhc::LlmClient* next_;
};

/// Error body returned when a model rejects temperature 0.0.
inline const char* kTemperatureRejected = R"({
  "error": {
    "message": "Unsupported value: 'temperature' does not support 0.0 with this model. Only the default (1) value is supported.",
    "type": "invalid_request_error",
    "param": "temperature",
    "code": "unsupported_value"
  }
})";

}  // namespace stubs

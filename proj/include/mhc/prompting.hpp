#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhc/corpus.hpp"
#include "mhc/evaluate.hpp"
#include "mhc/labels.hpp"

namespace mhc {

/// The exact output schema every prompt states and every response must follow.
inline constexpr std::string_view kOutputSchema = "id - predicted_label - text";
inline constexpr std::string_view kSchemaSeparator = " - ";
inline constexpr std::string_view kUnknownLabel = "Unknown";

struct PromptItem {
    std::string id;
    std::string text;
};

struct Exemplar {
    std::string id;
    std::string text;
    ClassLabel label = ClassLabel::None;
};

struct FewShotBank {
    std::size_t per_class = 3;
    std::uint64_t seed = 0;
    std::vector<Exemplar> exemplars;  // grouped by class, canonical class order

    std::vector<std::string> ids() const;
    nlohmann::json to_json() const;
};

/// Seeded uniform sample of `per_class` training posts for each class present in `labels`.
FewShotBank select_fewshot(const Corpus& train, std::size_t per_class, std::uint64_t seed, const LabelSet& labels);

struct PromptSpec {
    LabelSet labels = LabelSet::all();  // active classes; Unknown is always appended
    std::optional<FewShotBank> few_shot;

    /// Zero-shot spec with the committed default wording.
    static PromptSpec zero_shot(const LabelSet& labels);
    static PromptSpec few_shot_from(const LabelSet& labels, FewShotBank bank);

    /// Active label names followed by "Unknown".
    std::vector<std::string> label_list() const;
};

struct GenerationParams {
    std::string model_name = "gpt-4.1";
    std::optional<double> temperature = 0.0;
    std::optional<double> top_p = 1.0;
    std::size_t batch_size = 5;
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::milliseconds min_interval{0};  // between batches

    void validate() const;
    nlohmann::json to_json() const;
};

/// Renders task definition, context notes, label definitions, uncertainty rules,
/// optional exemplars, the output schema and the items, in that order.
std::string build_prompt(const PromptSpec& spec, const std::vector<PromptItem>& batch, std::size_t max_batch = 5);

/// One schema line "<id> - <label> - <text>" with the text flattened to a single line.
std::string format_schema_line(const std::string& id, std::string_view label, std::string_view text);

// ---------------------------------------------------------------------------
// LLM clients

struct LlmRequest {
    std::string model;
    std::string prompt;
    std::optional<double> temperature;
    std::optional<double> top_p;
};

/// Provider error with the HTTP status and, when the body follows the usual
/// {"error": {"message", "type", "param", "code"}} shape, its fields.
class LlmApiError : public Error {
public:
    LlmApiError(int status, std::string body);
    int status() const { return status_; }
    const std::string& body() const { return body_; }
    const std::string& param() const { return param_; }
    const std::string& code() const { return code_; }
    const std::string& api_message() const { return api_message_; }

    bool is_auth() const { return status_ == 401 || status_ == 403; }
    bool is_transient() const { return status_ == 0 || status_ == 408 || status_ == 429 || status_ >= 500; }
    /// A request parameter the model rejects (e.g. a temperature it does not support).
    bool is_unsupported_parameter() const;

private:
    int status_;
    std::string body_, param_, code_, api_message_;
};

class AuthError : public Error {
public:
    using Error::Error;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string provider() const = 0;
    /// Returns the completion text or throws LlmApiError.
    virtual std::string complete(const LlmRequest& request) = 0;
};

struct ProviderConfig {
    std::string provider = "openai";  // openai | deepseek | custom
    std::string base_url;             // scheme://host[:port]
    std::string path;                 // endpoint path
    std::string api_key_env;
    int timeout_seconds = 120;

    /// Defaults for the known providers; `base_url` and `path` may be overridden afterwards.
    static ProviderConfig for_provider(const std::string& name);
};

/// Chat-completions client for OpenAI-compatible endpoints (OpenAI, DeepSeek).
class OpenAiCompatibleClient final : public LlmClient {
public:
    /// Reads the API key from the environment; throws AuthError when it is absent.
    explicit OpenAiCompatibleClient(ProviderConfig config);
    OpenAiCompatibleClient(ProviderConfig config, std::string api_key);

    std::string provider() const override { return config_.provider; }
    std::string complete(const LlmRequest& request) override;

    static nlohmann::json request_body(const LlmRequest& request);

private:
    ProviderConfig config_;
    std::string api_key_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
void real_sleep(std::chrono::milliseconds d);

struct CallResult {
    bool ok = false;
    std::string text;
    int attempts = 0;
    std::vector<std::string> log;  // human-readable events, e.g. "parameter downgraded: temperature"
    std::string error;
};

/// Sends one prompt. Transient failures are retried with exponential backoff up to
/// `max_retries` times; a rejected sampling parameter is dropped and the call retried once.
/// Authentication failures throw AuthError; other failures return ok = false.
CallResult call_llm(LlmClient& client, const std::string& prompt, const GenerationParams& params,
                    const Sleeper& sleep = real_sleep);

// ---------------------------------------------------------------------------
// Parsing and scoring

struct ParsedPrediction {
    std::string id;
    std::optional<ClassLabel> predicted;  // nullopt = Unknown
    std::string echoed_text;

    std::string label_name() const;
};

struct ParseDiagnostic {
    std::string id;    // may be empty for line-level issues
    std::string kind;  // missing | unparseable | unexpected_id | invalid_label | duplicate_id
    std::string detail;
};

struct ParseResult {
    std::vector<ParsedPrediction> predictions;  // one per expected item, expected order
    std::vector<ParseDiagnostic> diagnostics;
};

ParseResult parse_response(const std::string& raw, const std::vector<PromptItem>& expected, const LabelSet& labels);

/// Confusion over `labels`; Unknown predictions land in the abstained column of the true class.
ConfusionMatrix prompt_confusion(const std::vector<ParsedPrediction>& predictions,
                                 const std::map<std::string, ClassLabel>& gold, const LabelSet& labels);

/// Unknown counts as an abstention: wrong for the true class, credited to no class.
MetricsReport score_prompt_run(const std::vector<ParsedPrediction>& predictions,
                               const std::map<std::string, ClassLabel>& gold, const LabelSet& labels,
                               std::string setup = {});

// ---------------------------------------------------------------------------
// Whole runs

struct PromptRunResult {
    std::vector<ParsedPrediction> predictions;
    std::vector<ParseDiagnostic> diagnostics;
    std::vector<std::string> log;
    std::size_t failed_batches = 0;
    MetricsReport metrics;
};

/// Batches `test`, renders, calls, parses and scores. When `run_dir` is non-empty it
/// receives prompts/, responses/, predictions.jsonl, diagnostics.jsonl, run_log.txt and metrics.json.
PromptRunResult run_prompting(const Corpus& test, const PromptSpec& spec, const GenerationParams& params,
                              LlmClient& client, const std::filesystem::path& run_dir = {},
                              const Sleeper& sleep = real_sleep);

}  // namespace mhc

#include "mhc/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "mhc/random.hpp"

namespace mhc {
namespace {

std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Collapses every whitespace run (newlines included) to one space so an item fits one line.
std::string flatten(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

std::string_view definition(ClassLabel label) {
    switch (label) {
        case ClassLabel::Stress:
            return "pressure, overload or tension from daily demands such as work, study, money or relationships, "
                   "without a lasting pattern of anxiety or depression.";
        case ClassLabel::Anxiety:
            return "persistent worry, fear, nervousness or panic, often with physical symptoms such as a racing heart "
                   "or trouble breathing.";
        case ClassLabel::Depression:
            return "low mood, emptiness, hopelessness, loss of interest or energy, or feelings of worthlessness.";
        case ClassLabel::PTSD:
            return "intrusive memories, flashbacks, nightmares, hypervigilance or avoidance tied to a past traumatic "
                   "event.";
        case ClassLabel::Suicidal:
            return "thoughts of ending one's own life, a wish to be dead, or mention of suicide plans or intent.";
        case ClassLabel::None:
            return "no sign of mental health distress.";
    }
    return "";
}

constexpr std::string_view kUnknownDefinition = "the text cannot be classified with confidence.";

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> FewShotBank::ids() const {
    std::vector<std::string> out;
    out.reserve(exemplars.size());
    for (const auto& e : exemplars) out.push_back(e.id);
    return out;
}

nlohmann::json FewShotBank::to_json() const {
    nlohmann::json ex = nlohmann::json::array();
    for (const auto& e : exemplars)
        ex.push_back({{"id", e.id}, {"label", std::string(to_string(e.label))}, {"text", e.text}});
    return {{"per_class", per_class}, {"seed", seed}, {"exemplars", ex}};
}

FewShotBank select_fewshot(const Corpus& train, std::size_t per_class, std::uint64_t seed, const LabelSet& labels) {
    if (per_class == 0) throw ValidationError("per_class must be >= 1", "prompt.per_class");
    FewShotBank bank;
    bank.per_class = per_class;
    bank.seed = seed;
    Rng rng(seed);
    for (ClassLabel label : labels.labels()) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < train.posts.size(); ++i)
            if (train.posts[i].label == label) idx.push_back(i);
        if (idx.size() < per_class)
            throw ValidationError("class " + std::string(to_string(label)) + " has " + std::to_string(idx.size()) +
                                  " training posts, fewer than per_class = " + std::to_string(per_class));
        rng.shuffle(idx);
        idx.resize(per_class);
        std::sort(idx.begin(), idx.end());
        for (auto i : idx) bank.exemplars.push_back({train.posts[i].id, train.posts[i].text, label});
    }
    return bank;
}

PromptSpec PromptSpec::zero_shot(const LabelSet& labels) {
    if (labels.empty()) throw ValidationError("prompt label set is empty");
    PromptSpec s;
    s.labels = labels;
    return s;
}

PromptSpec PromptSpec::few_shot_from(const LabelSet& labels, FewShotBank bank) {
    PromptSpec s = zero_shot(labels);
    for (const auto& e : bank.exemplars)
        if (!labels.contains(e.label))
            throw ValidationError("exemplar " + e.id + " has inactive label " + std::string(to_string(e.label)));
    s.few_shot = std::move(bank);
    return s;
}

std::vector<std::string> PromptSpec::label_list() const {
    auto names = labels.names();
    names.emplace_back(kUnknownLabel);
    return names;
}

void GenerationParams::validate() const {
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1", "prompt.batch_size");
    if (temperature && *temperature < 0.0) throw ValidationError("temperature must be >= 0", "prompt.temperature");
    if (top_p && (*top_p <= 0.0 || *top_p > 1.0)) throw ValidationError("top_p must be in (0, 1]", "prompt.top_p");
    if (max_retries < 0) throw ValidationError("max_retries must be >= 0", "prompt.max_retries");
    if (model_name.empty()) throw ValidationError("model name is empty", "prompt.model");
}

nlohmann::json GenerationParams::to_json() const {
    nlohmann::json j{{"model", model_name},
                     {"batch_size", batch_size},
                     {"max_retries", max_retries},
                     {"backoff_base_ms", backoff_base.count()},
                     {"min_interval_ms", min_interval.count()}};
    j["temperature"] = temperature ? nlohmann::json(*temperature) : nlohmann::json(nullptr);
    j["top_p"] = top_p ? nlohmann::json(*top_p) : nlohmann::json(nullptr);
    return j;
}

std::string format_schema_line(const std::string& id, std::string_view label, std::string_view text) {
    std::string line = id;
    line += kSchemaSeparator;
    line += label;
    line += kSchemaSeparator;
    line += flatten(text);
    return line;
}

std::string build_prompt(const PromptSpec& spec, const std::vector<PromptItem>& batch, std::size_t max_batch) {
    if (batch.empty()) throw ValidationError("cannot build a prompt for an empty batch");
    if (batch.size() > max_batch)
        throw ValidationError("batch of " + std::to_string(batch.size()) + " exceeds batch_size " +
                              std::to_string(max_batch));
    std::ostringstream os;
    os << "## Task\n"
          "You are annotating social media posts for a research study on mental health language. "
          "Assign each post exactly one label from the list below.\n\n";
    os << "## Context\n"
          "This is a text classification exercise only. Do not give medical advice, diagnoses, treatment "
          "suggestions or crisis instructions, and do not address the authors of the posts.\n\n";
    os << "## Labels\n";
    for (ClassLabel l : spec.labels.labels()) os << "- " << to_string(l) << ": " << definition(l) << '\n';
    os << "- " << kUnknownLabel << ": " << kUnknownDefinition << "\n\n";
    os << "## Uncertainty rules\n"
          "If a post fits more than one label, choose the closest one.\n";
    if (spec.labels.contains(ClassLabel::None))
        os << "If a post shows no signal of mental health content, answer None.\n";
    os << "If a post cannot be classified with confidence, answer " << kUnknownLabel << ".\n\n";
    if (spec.few_shot && !spec.few_shot->exemplars.empty()) {
        os << "## Examples\n";
        std::size_t n = 0;
        for (ClassLabel l : spec.labels.labels())
            for (const auto& e : spec.few_shot->exemplars)
                if (e.label == l) os << format_schema_line("ex" + std::to_string(++n), to_string(l), e.text) << '\n';
        os << '\n';
    }
    os << "## Output format\n"
          "Return one line per post, in input order, using the strict schema ("
       << kOutputSchema
       << ").\n"
          "Copy the id exactly, use only the labels listed above and write nothing else.\n\n";
    os << "## Posts\n";
    for (const auto& item : batch) os << item.id << ": " << flatten(item.text) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------

LlmApiError::LlmApiError(int status, std::string body)
    : Error("LLM API error " + std::to_string(status) + ": " + body), status_(status), body_(std::move(body)) {
    auto j = nlohmann::json::parse(body_, nullptr, false);
    if (j.is_object() && j.contains("error") && j["error"].is_object()) {
        const auto& e = j["error"];
        auto str = [&](const char* k) { return e.contains(k) && e[k].is_string() ? e[k].get<std::string>() : ""; };
        param_ = str("param");
        code_ = str("code");
        api_message_ = str("message");
    }
}

bool LlmApiError::is_unsupported_parameter() const {
    return status_ == 400 && !param_.empty() && (code_ == "unsupported_value" || code_ == "unsupported_parameter");
}

ProviderConfig ProviderConfig::for_provider(const std::string& name) {
    ProviderConfig c;
    c.provider = name;
    if (name == "openai") {
        c.base_url = "https://api.openai.com";
        c.path = "/v1/chat/completions";
        c.api_key_env = "OPENAI_API_KEY";
    } else if (name == "deepseek") {
        c.base_url = "https://api.deepseek.com";
        c.path = "/chat/completions";
        c.api_key_env = "DEEPSEEK_API_KEY";
    } else if (name == "custom") {
        c.path = "/v1/chat/completions";
        c.api_key_env = "LLM_API_KEY";
    } else {
        throw ValidationError("unknown provider '" + name + "'", "prompt.provider");
    }
    return c;
}

OpenAiCompatibleClient::OpenAiCompatibleClient(ProviderConfig config) : config_(std::move(config)) {
    const char* key = config_.api_key_env.empty() ? nullptr : std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
        throw AuthError("credentials missing: set " +
                        (config_.api_key_env.empty() ? std::string("an API key variable") : config_.api_key_env));
    api_key_ = key;
}

OpenAiCompatibleClient::OpenAiCompatibleClient(ProviderConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {}

nlohmann::json OpenAiCompatibleClient::request_body(const LlmRequest& request) {
    nlohmann::json body{{"model", request.model},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})}};
    if (request.temperature) body["temperature"] = *request.temperature;
    if (request.top_p) body["top_p"] = *request.top_p;
    return body;
}

std::string OpenAiCompatibleClient::complete(const LlmRequest& request) {
    if (config_.base_url.empty()) throw ValidationError("provider base_url is empty", "prompt.base_url");
    httplib::Client cli(config_.base_url);
    cli.set_connection_timeout(config_.timeout_seconds, 0);
    cli.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    auto res = cli.Post(config_.path, headers, request_body(request).dump(), "application/json");
    if (!res) throw LlmApiError(0, "transport error: " + httplib::to_string(res.error()));
    if (res->status != 200) throw LlmApiError(res->status, res->body);
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw LlmApiError(res->status, "malformed completion body: " + res->body);
    }
}

void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

CallResult call_llm(LlmClient& client, const std::string& prompt, const GenerationParams& params,
                    const Sleeper& sleep) {
    CallResult r;
    LlmRequest req{params.model_name, prompt, params.temperature, params.top_p};
    bool downgraded = false;
    int retries = 0;
    for (;;) {
        ++r.attempts;
        try {
            r.text = client.complete(req);
            r.ok = true;
            return r;
        } catch (const LlmApiError& e) {
            if (e.is_auth())
                throw AuthError("authentication failed with status " + std::to_string(e.status()) + ": " + e.body());
            if (e.is_unsupported_parameter() && !downgraded) {
                bool removed = false;
                if (e.param() == "temperature" && req.temperature) {
                    req.temperature.reset();
                    removed = true;
                } else if (e.param() == "top_p" && req.top_p) {
                    req.top_p.reset();
                    removed = true;
                }
                if (removed) {
                    downgraded = true;
                    r.log.push_back("parameter downgraded: " + e.param() + " removed after provider rejection (" +
                                    e.api_message() + ")");
                    continue;
                }
            }
            if (e.is_transient() && retries < params.max_retries) {
                const auto wait = params.backoff_base * (1LL << retries);
                ++retries;
                r.log.push_back("retry " + std::to_string(retries) + " after status " + std::to_string(e.status()) +
                                ", waiting " + std::to_string(wait.count()) + " ms");
                sleep(wait);
                continue;
            }
            r.error = e.what();
            r.log.push_back("call failed after " + std::to_string(r.attempts) + " attempts: " + r.error);
            return r;
        }
    }
}

// ---------------------------------------------------------------------------

std::string ParsedPrediction::label_name() const {
    return predicted ? std::string(to_string(*predicted)) : std::string(kUnknownLabel);
}

ParseResult parse_response(const std::string& raw, const std::vector<PromptItem>& expected, const LabelSet& labels) {
    ParseResult out;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < expected.size(); ++i) index.emplace(expected[i].id, i);
    std::vector<std::optional<ParsedPrediction>> found(expected.size());
    std::size_t schema_lines = 0;

    std::istringstream in(raw);
    std::string raw_line;
    while (std::getline(in, raw_line)) {
        const std::string_view line = trim(raw_line);
        if (line.empty() || line.substr(0, 3) == "```") continue;
        const auto p1 = line.find(kSchemaSeparator);
        if (p1 == std::string_view::npos) {
            out.diagnostics.push_back({"", "malformed_line", std::string(line)});
            continue;
        }
        ++schema_lines;
        const std::string id(trim(line.substr(0, p1)));
        std::string_view rest = line.substr(p1 + kSchemaSeparator.size());
        std::string_view label_part, text_part;
        const auto p2 = rest.find(kSchemaSeparator);
        if (p2 == std::string_view::npos) {
            // "id - Label" or "id - Label -" (empty echoed text after trimming)
            label_part = rest;
            if (label_part.size() >= 2 && label_part.substr(label_part.size() - 2) == " -")
                label_part.remove_suffix(2);
        } else {
            label_part = rest.substr(0, p2);
            text_part = rest.substr(p2 + kSchemaSeparator.size());
        }
        label_part = trim(label_part);

        auto it = index.find(id);
        if (it == index.end()) {
            out.diagnostics.push_back({id, "unexpected_id", std::string(line)});
            continue;
        }
        ParsedPrediction p{id, std::nullopt, std::string(text_part)};
        if (!iequals(label_part, kUnknownLabel)) {
            auto l = parse_label_ci(label_part);
            if (l && labels.contains(*l)) {
                p.predicted = *l;
            } else {
                out.diagnostics.push_back({id, "invalid_label", std::string(label_part)});
            }
        }
        if (found[it->second]) {
            out.diagnostics.push_back({id, "duplicate_id", std::string(line)});
            continue;
        }
        found[it->second] = std::move(p);
    }

    out.predictions.reserve(expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (found[i]) {
            out.predictions.push_back(std::move(*found[i]));
        } else {
            out.predictions.push_back({expected[i].id, std::nullopt, ""});
            out.diagnostics.push_back({expected[i].id, schema_lines == 0 ? "unparseable" : "missing", ""});
        }
    }
    return out;
}

ConfusionMatrix prompt_confusion(const std::vector<ParsedPrediction>& predictions,
                                 const std::map<std::string, ClassLabel>& gold, const LabelSet& labels) {
    std::unordered_map<std::string, const ParsedPrediction*> by_id;
    for (const auto& p : predictions) by_id.emplace(p.id, &p);
    auto cm = ConfusionMatrix::zeros(labels);
    for (const auto& [id, truth] : gold) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError("no prediction for gold id " + id);
        const auto ti = labels.find(truth);
        if (!ti) throw ValidationError("gold label " + std::string(to_string(truth)) + " of " + id +
                                       " is outside the active label set");
        const auto& pred = it->second->predicted;
        const auto pi = pred ? labels.find(*pred) : std::nullopt;
        if (pi)
            ++cm.counts[*ti][*pi];
        else
            ++cm.abstained[*ti];
    }
    return cm;
}

MetricsReport score_prompt_run(const std::vector<ParsedPrediction>& predictions,
                               const std::map<std::string, ClassLabel>& gold, const LabelSet& labels,
                               std::string setup) {
    return metrics_from_confusion(prompt_confusion(predictions, gold, labels), std::move(setup));
}

// ---------------------------------------------------------------------------

namespace {

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

std::string batch_name(std::size_t b) {
    std::ostringstream os;
    os << "batch-" << std::setw(4) << std::setfill('0') << b << ".txt";
    return os.str();
}

}  // namespace

PromptRunResult run_prompting(const Corpus& test, const PromptSpec& spec, const GenerationParams& params,
                              LlmClient& client, const std::filesystem::path& run_dir, const Sleeper& sleep) {
    params.validate();
    if (test.empty()) throw ValidationError("evaluation corpus is empty");
    std::map<std::string, ClassLabel> gold;
    for (const auto& p : test.posts)
        if (!gold.emplace(p.id, p.label).second) throw ValidationError("duplicate evaluation id " + p.id);
    if (spec.few_shot)
        for (const auto& id : spec.few_shot->ids())
            if (gold.count(id)) throw ValidationError("few-shot exemplar " + id + " is also an evaluation id");

    const bool persist = !run_dir.empty();
    if (persist) {
        std::filesystem::create_directories(run_dir / "prompts");
        std::filesystem::create_directories(run_dir / "responses");
    }

    PromptRunResult result;
    const std::size_t nb = (test.size() + params.batch_size - 1) / params.batch_size;
    for (std::size_t b = 0; b < nb; ++b) {
        std::vector<PromptItem> items;
        for (std::size_t i = b * params.batch_size; i < std::min(test.size(), (b + 1) * params.batch_size); ++i)
            items.push_back({test.posts[i].id, test.posts[i].text});
        const std::string prompt = build_prompt(spec, items, params.batch_size);
        if (persist) write_text(run_dir / "prompts" / batch_name(b), prompt);
        if (b > 0 && params.min_interval.count() > 0) sleep(params.min_interval);

        auto call = call_llm(client, prompt, params, sleep);
        for (auto& line : call.log) result.log.push_back("batch " + std::to_string(b) + ": " + line);
        if (!call.ok) {
            ++result.failed_batches;
            result.log.push_back("batch " + std::to_string(b) + ": marked failed");
            for (const auto& item : items) {
                result.predictions.push_back({item.id, std::nullopt, ""});
                result.diagnostics.push_back({item.id, "batch_failed", call.error});
            }
            continue;
        }
        if (persist) write_text(run_dir / "responses" / batch_name(b), call.text);
        auto parsed = parse_response(call.text, items, spec.labels);
        for (auto& p : parsed.predictions) result.predictions.push_back(std::move(p));
        for (auto& d : parsed.diagnostics) result.diagnostics.push_back(std::move(d));
    }
    const auto cm = prompt_confusion(result.predictions, gold, spec.labels);
    result.metrics = metrics_from_confusion(cm);

    if (persist) {
        std::ostringstream preds, diags, log;
        for (const auto& p : result.predictions)
            preds << nlohmann::json{{"id", p.id},
                                    {"predicted", p.label_name()},
                                    {"gold", std::string(to_string(gold.at(p.id)))},
                                    {"echoed_text", p.echoed_text}}
                         .dump()
                  << '\n';
        for (const auto& d : result.diagnostics)
            diags << nlohmann::json{{"id", d.id}, {"kind", d.kind}, {"detail", d.detail}}.dump() << '\n';
        for (const auto& l : result.log) log << l << '\n';
        write_text(run_dir / "predictions.jsonl", preds.str());
        write_text(run_dir / "diagnostics.jsonl", diags.str());
        write_text(run_dir / "run_log.txt", log.str());
        write_text(run_dir / "metrics.json", result.metrics.to_json().dump(2) + "\n");
        write_text(run_dir / "metrics.md", result.metrics.to_markdown());
        write_text(run_dir / "confusion.csv", cm.to_csv());
        nlohmann::json gen = params.to_json();
        gen["provider"] = client.provider();
        gen["labels"] = spec.label_list();
        if (spec.few_shot) gen["few_shot"] = spec.few_shot->to_json();
        write_text(run_dir / "generation.json", gen.dump(2) + "\n");
    }
    return result;
}

}  // namespace mhc

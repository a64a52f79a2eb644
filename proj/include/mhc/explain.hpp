#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mhc/corpus.hpp"
#include "mhc/embedding.hpp"
#include "mhc/labels.hpp"
#include "mhc/models.hpp"
#include "mhc/text.hpp"
#include "mhc/tiny_encoder.hpp"

namespace mhc {

enum class IgBaseline { Pad, Zero };

struct TokenAttribution {
    std::string id;
    std::vector<std::string> tokens;
    std::vector<double> scores;  // aligned with tokens
    ClassLabel target = ClassLabel::Suicidal;
    double prediction_delta = 0.0;  // target logit at input minus at baseline
    double completeness_gap = 0.0;  // |sum(scores) - prediction_delta|
    int steps = 0;

    double total() const;
    nlohmann::json to_json() const;
};

/// Scalar function of a matrix input; fills `grad` (same shape) when non-null.
using DifferentiableFn = std::function<double(const Eigen::MatrixXd& x, Eigen::MatrixXd* grad)>;

/// Elementwise integrated gradients of `f` from `baseline` to `input`, using the
/// midpoint Riemann rule with `steps` interpolants.
Eigen::MatrixXd integrated_gradients(const DifferentiableFn& f, const Eigen::MatrixXd& input,
                                     const Eigen::MatrixXd& baseline, int steps);

/// Token attributions at the token-embedding layer of `model` for the pre-softmax logit of
/// class index `target_index`. Per-token scores are summed over embedding dimensions.
TokenAttribution integrated_gradients(const TinyEncoderModel& model, const std::vector<int>& token_ids,
                                      std::vector<std::string> tokens, std::size_t target_index, int steps,
                                      IgBaseline baseline = IgBaseline::Pad);

/// Tokenizes `text` with the checkpoint vocabulary. Throws when no token remains.
TokenAttribution integrated_gradients(const Checkpoint& checkpoint, const std::string& text, ClassLabel target,
                                      int steps = 64, IgBaseline baseline = IgBaseline::Pad);

// ---------------------------------------------------------------------------

enum class ErrorBucket { TruePositive, FalsePositive, FalseNegative, TrueNegative };

std::string_view to_string(ErrorBucket bucket);
std::string_view short_name(ErrorBucket bucket);  // TP, FP, FN, TN

ErrorBucket bucket_of(ClassLabel truth, ClassLabel predicted, ClassLabel focus);

/// Ids per bucket; every bucket is present, possibly empty. Ids default to positions.
std::map<ErrorBucket, std::vector<std::string>> bucket_examples(const std::vector<ClassLabel>& truth,
                                                                const std::vector<ClassLabel>& predicted,
                                                                ClassLabel focus,
                                                                const std::vector<std::string>& ids = {});

// ---------------------------------------------------------------------------

struct ScoredTerm {
    std::string term;
    double score = 0.0;
};

struct DriverRow {
    ErrorBucket bucket = ErrorBucket::TruePositive;
    std::size_t samples = 0;
    std::vector<ScoredTerm> positive;  // descending score
    std::vector<ScoredTerm> negative;  // ascending score (most negative first)
    bool empty() const { return samples == 0; }
};

struct DriverTable {
    ClassLabel focus = ClassLabel::Suicidal;
    std::vector<DriverRow> rows;

    const DriverRow& row(ErrorBucket bucket) const;
    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

/// Sums signed scores per lowercased whole word (subword "##" pieces merged first) within
/// each bucket, drops stopwords, punctuation and special tokens, and keeps the top k each way.
DriverTable aggregate_drivers(const std::vector<TokenAttribution>& attributions,
                              const std::vector<ErrorBucket>& buckets, std::size_t k = 5,
                              const std::set<std::string>& stopwords = default_stopwords(),
                              const std::vector<ErrorBucket>& row_order = {ErrorBucket::FalseNegative,
                                                                           ErrorBucket::FalsePositive,
                                                                           ErrorBucket::TruePositive});

// ---------------------------------------------------------------------------

struct KeyphraseOptions {
    std::size_t k = 10;
    std::size_t ngram_min = 1;
    std::size_t ngram_max = 3;
    double diversity = 0.5;
    std::size_t max_candidates = 300;  // most document-similar candidates entering reranking
    std::set<std::string> filter_list;
    const std::set<std::string>* stopwords = nullptr;  // default_stopwords() when null
};

struct KeyphraseResult {
    std::vector<ScoredTerm> phrases;  // selection order; score = similarity to the document
    std::vector<std::string> diagnostics;
};

/// Maximal marginal relevance: repeatedly picks the candidate maximizing
/// (1 - diversity) * sim(doc) - diversity * max sim(already selected). Returns candidate indices.
std::vector<std::size_t> mmr_select(const std::vector<Eigen::VectorXd>& candidates, const Eigen::VectorXd& doc,
                                    std::size_t k, double diversity);

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Candidate n-grams pooled over `texts`, scored against the mean document embedding.
KeyphraseResult extract_keyphrases(const std::vector<std::string>& texts, const Encoder& encoder,
                                   const KeyphraseOptions& options = {});

struct PhraseTable {
    std::map<ErrorBucket, KeyphraseResult> rows;
    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

// ---------------------------------------------------------------------------

/// Standalone page: header with true/predicted labels and delta, then one span per token,
/// red for positive and blue for negative scores, opacity |s| / max |s|.
std::string render_html(const TokenAttribution& attr, ClassLabel predicted, ClassLabel true_label);

struct IndexEntry {
    ErrorBucket bucket;
    std::string id;
    std::string file;  // relative link
    ClassLabel true_label;
    ClassLabel predicted;
};

std::string render_index(const std::vector<IndexEntry>& entries, ClassLabel focus);

// ---------------------------------------------------------------------------

struct ExplainOptions {
    ClassLabel focus = ClassLabel::Suicidal;
    int steps = 64;
    IgBaseline baseline = IgBaseline::Pad;
    std::size_t top_k_words = 5;
    std::size_t max_samples_per_bucket = 50;  // attributed samples per bucket
    KeyphraseOptions keyphrases;
};

struct ExplainResult {
    DriverTable drivers;
    PhraseTable phrases;
    std::map<ErrorBucket, std::vector<std::string>> buckets;
    double max_completeness_gap = 0.0;
    std::vector<std::filesystem::path> artifacts;
};

/// Predicts `corpus`, buckets against the focus class, attributes a capped number of samples
/// per bucket, and writes drivers.{json,md}, phrases.{json,md}, html/<id>.html and index.html.
ExplainResult run_explain(const Checkpoint& checkpoint, const Corpus& corpus, const Encoder& phrase_encoder,
                          const ExplainOptions& options, const std::filesystem::path& out_dir);

}  // namespace mhc

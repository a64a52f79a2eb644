#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhc/labels.hpp"

namespace mhc {

/// Rows are true labels, columns predicted labels, both in `label_order`.
/// `abstained[i]` counts samples of class i that received no class prediction
/// (e.g. an LLM answering Unknown); they count against recall only.
struct ConfusionMatrix {
    LabelSet label_order;
    std::vector<std::vector<std::int64_t>> counts;
    std::vector<std::int64_t> abstained;

    static ConfusionMatrix zeros(const LabelSet& labels);
    std::size_t size() const { return label_order.size(); }
    std::int64_t total() const;
    std::int64_t row_sum(std::size_t i) const;
    std::int64_t col_sum(std::size_t j) const;
    std::int64_t trace() const;
    std::int64_t abstained_total() const;

    std::string to_csv() const;
    /// Header "true\\pred,<labels...>", then one row per true label.
    static ConfusionMatrix from_csv(std::istream& in);
    static ConfusionMatrix load_csv(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

ConfusionMatrix confusion_matrix(const std::vector<ClassLabel>& truth, const std::vector<ClassLabel>& predicted,
                                 const LabelSet& label_order);

struct ClassMetrics {
    ClassLabel label = ClassLabel::None;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct Averages {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::string setup;  // "6-class", "5-class", "binary", ...
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
    Averages macro;
    Averages weighted;
    Averages micro;
    std::int64_t total = 0;
    std::int64_t unknown_count = 0;
    std::vector<std::string> warnings;  // zero-division notes

    const ClassMetrics& of(ClassLabel label) const;
    nlohmann::json to_json() const;
    /// Per-class table plus accuracy / macro / weighted rows, 3 decimals.
    std::string to_markdown() const;
};

/// Setup tag derived from the label count when empty.
MetricsReport metrics_from_confusion(const ConfusionMatrix& cm, std::string setup = {});

struct SetupComparisonRow {
    std::string metric;
    double first = 0.0;
    double second = 0.0;
    double delta = 0.0;  // second - first
};

struct SetupComparison {
    std::string first_setup;
    std::string second_setup;
    std::vector<SetupComparisonRow> rows;  // Accuracy, Precision, Recall, F1 (macro)

    const SetupComparisonRow& row(const std::string& metric) const;
    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

SetupComparison compare_setups(const MetricsReport& first, const MetricsReport& second);

/// true = positive. Default positive set is {Depression}.
std::vector<bool> collapse_binary(const std::vector<ClassLabel>& predicted,
                                  const std::set<ClassLabel>& positive_set = {ClassLabel::Depression});

struct BinaryScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

    nlohmann::json to_json() const;
};

BinaryScores binary_scores(const std::vector<bool>& gold, const std::vector<bool>& predicted);

/// One decision per user: positive when any of the user's posts is positive. This
/// aggregation is an assumption; the output map is keyed and ordered by user id.
std::map<std::string, bool> aggregate_user_streams(const std::vector<std::string>& user_ids,
                                                   const std::vector<bool>& post_positive);

/// Uniform random predictions scored against uniform random truth over `labels`.
MetricsReport random_baseline(const LabelSet& labels, std::size_t n, std::uint64_t seed);

}  // namespace mhc

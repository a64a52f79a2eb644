#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mhc/labels.hpp"

namespace mhc {

/// Number of maximal non-whitespace runs in `text`.
std::size_t word_count(std::string_view text);

/// Lowercase (ASCII), collapse whitespace runs to one space, trim. Used for deduplication.
std::string normalize_text(std::string_view text);

struct Post {
    std::string id;
    std::string text;
    ClassLabel label = ClassLabel::None;
    std::string source;
    std::size_t word_count = 0;

    /// Builds a post with word_count derived from text.
    static Post make(std::string id, std::string text, ClassLabel label, std::string source);

    bool operator==(const Post&) const = default;
};

struct Corpus {
    std::string name;
    std::vector<Post> posts;

    std::size_t size() const { return posts.size(); }
    bool empty() const { return posts.empty(); }
    std::vector<ClassLabel> labels() const;
    std::vector<std::string> texts() const;
    std::vector<std::string> ids() const;
    /// Labels present, in canonical order.
    LabelSet label_set() const;

    bool operator==(const Corpus&) const = default;
};

// ---------------------------------------------------------------------------
// Loading

enum class SourceFormat { Csv, Jsonl };

/// How one raw dump maps onto posts.
struct SourceConfig {
    std::filesystem::path path;
    SourceFormat format = SourceFormat::Jsonl;
    std::string source_tag;
    std::string text_field = "text";
    std::optional<std::string> id_field;
    char delimiter = ',';

    // Exactly one of fixed_label / label_field is used.
    std::optional<ClassLabel> fixed_label;
    std::optional<std::string> label_field;
    // Raw label value -> canonical label name. Values not listed are parsed as canonical names.
    std::map<std::string, std::string> label_map;

    // Row filters applied before labeling: keep rows whose field value is listed / not listed.
    std::map<std::string, std::set<std::string>> include;
    std::map<std::string, std::set<std::string>> exclude;

    static SourceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

struct LoadResult {
    std::vector<Post> posts;
    std::size_t skipped_empty = 0;
    std::size_t filtered = 0;
};

/// Reads one source dump. Missing file -> IoError; unknown label value -> ValidationError.
LoadResult load_source(const SourceConfig& config);

/// RFC 4180 style parser; first record is the header.
std::vector<std::map<std::string, std::string>> read_csv_records(std::istream& in, char delimiter = ',');

// ---------------------------------------------------------------------------
// Curation, statistics, splitting

struct CurationBounds {
    std::size_t min_words = 10;
    std::size_t max_words = 400;
};

/// Keeps posts inside the word bounds and drops later duplicates of normalized text.
Corpus curate(const std::vector<Post>& posts, CurationBounds bounds = {}, std::string name = "curated");

struct ClassStats {
    ClassLabel label = ClassLabel::None;
    std::size_t count = 0;
    std::optional<std::size_t> min_words;
    std::optional<std::size_t> max_words;
    std::optional<std::size_t> median_words;  // lower-middle for even counts
};

struct CorpusStats {
    std::vector<ClassStats> rows;  // canonical order, all six classes

    std::size_t total() const;
    const ClassStats& row(ClassLabel label) const;
    nlohmann::json to_json() const;
    /// Table with columns Class | Count | Min Words | Max Words | Median Words.
    std::string to_markdown() const;
};

CorpusStats stats(const Corpus& corpus);

struct SplitSpec {
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 42;
    bool stratified = true;

    void validate() const;
};

struct CorpusSplit {
    Corpus train;
    Corpus val;
    Corpus test;
};

CorpusSplit split(const Corpus& corpus, const SplitSpec& spec);

/// Removes posts whose label is in `exclude`. Excluding every class is an error.
Corpus filter_classes(const Corpus& corpus, const std::set<ClassLabel>& exclude);

// ---------------------------------------------------------------------------
// Serialization: one JSON object per line {id, text, label, source, word_count}.

void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus_jsonl(const std::filesystem::path& path, std::string name = {});

nlohmann::json post_to_json(const Post& post);
Post post_from_json(const nlohmann::json& j);

}  // namespace mhc

#include "mhc/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include "mhc/random.hpp"

namespace mhc {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string json_scalar_to_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return {};
    return v.dump();
}

}  // namespace

std::size_t word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

Post Post::make(std::string id, std::string text, ClassLabel label, std::string source) {
    Post p;
    p.word_count = mhc::word_count(text);
    p.id = std::move(id);
    p.text = std::move(text);
    p.label = label;
    p.source = std::move(source);
    return p;
}

std::vector<ClassLabel> Corpus::labels() const {
    std::vector<ClassLabel> out;
    out.reserve(posts.size());
    for (const auto& p : posts) out.push_back(p.label);
    return out;
}

std::vector<std::string> Corpus::texts() const {
    std::vector<std::string> out;
    out.reserve(posts.size());
    for (const auto& p : posts) out.push_back(p.text);
    return out;
}

std::vector<std::string> Corpus::ids() const {
    std::vector<std::string> out;
    out.reserve(posts.size());
    for (const auto& p : posts) out.push_back(p.id);
    return out;
}

LabelSet Corpus::label_set() const {
    std::set<ClassLabel> seen;
    for (const auto& p : posts) seen.insert(p.label);
    return LabelSet(std::vector<ClassLabel>(seen.begin(), seen.end()));
}

// ---------------------------------------------------------------------------

std::vector<std::map<std::string, std::string>> read_csv_records(std::istream& in, char delimiter) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    char c;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
        row.clear();
    };
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == delimiter) {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw ValidationError("unterminated quoted CSV field");
    if (!field.empty() || !row.empty()) end_row();

    std::vector<std::map<std::string, std::string>> records;
    if (rows.empty()) return records;
    const auto& header = rows.front();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        std::map<std::string, std::string> rec;
        for (std::size_t i = 0; i < header.size(); ++i)
            rec[header[i]] = i < rows[r].size() ? rows[r][i] : std::string{};
        records.push_back(std::move(rec));
    }
    return records;
}

SourceConfig SourceConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    SourceConfig cfg;
    if (!j.contains("path")) throw ValidationError("source config requires 'path'", "path");
    std::filesystem::path p = j.at("path").get<std::string>();
    cfg.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;

    const auto fmt = j.value("format", std::string("jsonl"));
    if (fmt == "csv") {
        cfg.format = SourceFormat::Csv;
    } else if (fmt == "jsonl") {
        cfg.format = SourceFormat::Jsonl;
    } else {
        throw ValidationError("format must be csv or jsonl, got '" + fmt + "'", "format");
    }
    cfg.source_tag = j.value("source", cfg.path.stem().string());
    cfg.text_field = j.value("text_field", std::string("text"));
    if (j.contains("id_field")) cfg.id_field = j.at("id_field").get<std::string>();
    if (j.contains("delimiter")) {
        const auto d = j.at("delimiter").get<std::string>();
        if (d.size() != 1) throw ValidationError("delimiter must be one character", "delimiter");
        cfg.delimiter = d[0];
    }
    if (j.contains("label")) cfg.fixed_label = label_from_string(j.at("label").get<std::string>());
    if (j.contains("label_field")) cfg.label_field = j.at("label_field").get<std::string>();
    if (cfg.fixed_label.has_value() == cfg.label_field.has_value())
        throw ValidationError("exactly one of 'label' or 'label_field' is required", "label");
    if (j.contains("label_map"))
        cfg.label_map = j.at("label_map").get<std::map<std::string, std::string>>();
    if (j.contains("include"))
        cfg.include = j.at("include").get<std::map<std::string, std::set<std::string>>>();
    if (j.contains("exclude"))
        cfg.exclude = j.at("exclude").get<std::map<std::string, std::set<std::string>>>();
    return cfg;
}

LoadResult load_source(const SourceConfig& config) {
    std::ifstream in(config.path);
    if (!in) throw IoError("cannot open source file " + config.path.string());

    std::vector<std::map<std::string, std::string>> records;
    if (config.format == SourceFormat::Csv) {
        records = read_csv_records(in, config.delimiter);
    } else {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (normalize_text(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ValidationError(config.path.string() + ":" + std::to_string(line_no) +
                                      ": invalid JSON record: " + e.what());
            }
            std::map<std::string, std::string> rec;
            for (auto it = j.begin(); it != j.end(); ++it) rec[it.key()] = json_scalar_to_string(it.value());
            records.push_back(std::move(rec));
        }
    }

    auto field_of = [](const std::map<std::string, std::string>& rec, const std::string& key) {
        auto it = rec.find(key);
        return it == rec.end() ? std::string{} : it->second;
    };

    LoadResult result;
    for (std::size_t row = 0; row < records.size(); ++row) {
        const auto& rec = records[row];

        bool keep = true;
        for (const auto& [field, values] : config.include)
            if (!values.count(field_of(rec, field))) keep = false;
        for (const auto& [field, values] : config.exclude)
            if (values.count(field_of(rec, field))) keep = false;
        if (!keep) {
            ++result.filtered;
            continue;
        }

        std::string text = field_of(rec, config.text_field);
        if (word_count(text) == 0) {
            ++result.skipped_empty;
            continue;
        }

        ClassLabel label;
        if (config.fixed_label) {
            label = *config.fixed_label;
        } else {
            const std::string raw = field_of(rec, *config.label_field);
            auto mapped = config.label_map.find(raw);
            const std::string name = mapped != config.label_map.end() ? mapped->second : raw;
            auto parsed = parse_label(name);
            if (!parsed)
                throw ValidationError(config.path.string() + ": row " + std::to_string(row) +
                                      ": unknown label '" + raw + "'");
            label = *parsed;
        }

        std::string id;
        if (config.id_field) id = field_of(rec, *config.id_field);
        if (id.empty()) id = config.source_tag + "-" + std::to_string(row);
        result.posts.push_back(Post::make(std::move(id), std::move(text), label, config.source_tag));
    }
    if (result.skipped_empty > 0)
        std::cerr << "warning: " << config.path.string() << ": skipped " << result.skipped_empty
                  << " record(s) without text\n";
    return result;
}

// ---------------------------------------------------------------------------

Corpus curate(const std::vector<Post>& posts, CurationBounds bounds, std::string name) {
    if (bounds.min_words < 1) throw ValidationError("min_words must be >= 1", "min_words");
    if (bounds.max_words < bounds.min_words)
        throw ValidationError("max_words must be >= min_words", "max_words");

    Corpus out;
    out.name = std::move(name);
    std::unordered_set<std::string> seen;
    for (const auto& p : posts) {
        if (p.word_count < bounds.min_words || p.word_count > bounds.max_words) continue;
        if (!seen.insert(normalize_text(p.text)).second) continue;
        out.posts.push_back(p);
    }
    return out;
}

std::size_t CorpusStats::total() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.count;
    return n;
}

const ClassStats& CorpusStats::row(ClassLabel label) const {
    return rows.at(static_cast<std::size_t>(canonical_index(label)));
}

nlohmann::json CorpusStats::to_json() const {
    auto opt = [](const std::optional<std::size_t>& v) -> nlohmann::json {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"class", std::string(to_string(r.label))},
                       {"count", r.count},
                       {"min_words", opt(r.min_words)},
                       {"max_words", opt(r.max_words)},
                       {"median_words", opt(r.median_words)}});
    }
    return {{"classes", arr}, {"total", total()}};
}

std::string CorpusStats::to_markdown() const {
    auto cell = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string("-"); };
    std::ostringstream os;
    os << "| Class | Count | Min Words | Max Words | Median Words |\n";
    os << "|---|---:|---:|---:|---:|\n";
    for (const auto& r : rows)
        os << "| " << to_string(r.label) << " | " << r.count << " | " << cell(r.min_words) << " | "
           << cell(r.max_words) << " | " << cell(r.median_words) << " |\n";
    return os.str();
}

CorpusStats stats(const Corpus& corpus) {
    std::array<std::vector<std::size_t>, kNumClasses> counts;
    for (const auto& p : corpus.posts) counts[static_cast<std::size_t>(canonical_index(p.label))].push_back(p.word_count);

    CorpusStats out;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        ClassStats row;
        row.label = kAllLabels[c];
        auto& wc = counts[c];
        row.count = wc.size();
        if (!wc.empty()) {
            std::sort(wc.begin(), wc.end());
            row.min_words = wc.front();
            row.max_words = wc.back();
            row.median_words = wc[(wc.size() - 1) / 2];
        }
        out.rows.push_back(row);
    }
    return out;
}

void SplitSpec::validate() const {
    for (auto [f, name] : {std::pair{train_fraction, "train_fraction"}, std::pair{val_fraction, "val_fraction"},
                           std::pair{test_fraction, "test_fraction"}}) {
        if (!(f > 0.0 && f < 1.0)) throw ValidationError(std::string(name) + " must lie in (0, 1)", name);
    }
    const double sum = train_fraction + val_fraction + test_fraction;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("split fractions must sum to 1 (got " + std::to_string(sum) + ")", "split");
}

namespace {

struct Allocation {
    std::size_t train, val;
};

Allocation allocate(std::size_t n, const SplitSpec& spec) {
    auto train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction));
    auto val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.val_fraction));
    train = std::min(train, n);
    val = std::min(val, n - train);
    return {train, val};
}

}  // namespace

CorpusSplit split(const Corpus& corpus, const SplitSpec& spec) {
    spec.validate();
    if (corpus.empty()) throw ValidationError("cannot split an empty corpus");

    std::vector<std::vector<std::size_t>> groups;
    if (spec.stratified) {
        std::array<std::vector<std::size_t>, kNumClasses> by_class;
        for (std::size_t i = 0; i < corpus.size(); ++i)
            by_class[static_cast<std::size_t>(canonical_index(corpus.posts[i].label))].push_back(i);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            if (by_class[c].empty()) continue;
            if (by_class[c].size() < 3)
                throw ValidationError("class '" + std::string(to_string(kAllLabels[c])) +
                                      "' has fewer than 3 posts; cannot stratify");
            groups.push_back(std::move(by_class[c]));
        }
    } else {
        std::vector<std::size_t> all(corpus.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        groups.push_back(std::move(all));
    }

    Rng rng(spec.seed);
    std::vector<int> assignment(corpus.size(), 2);
    for (auto& g : groups) {
        rng.shuffle(g);
        const auto alloc = allocate(g.size(), spec);
        for (std::size_t k = 0; k < g.size(); ++k)
            assignment[g[k]] = k < alloc.train ? 0 : (k < alloc.train + alloc.val ? 1 : 2);
    }

    CorpusSplit out;
    out.train.name = corpus.name + "-train";
    out.val.name = corpus.name + "-val";
    out.test.name = corpus.name + "-test";
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        Corpus& dst = assignment[i] == 0 ? out.train : (assignment[i] == 1 ? out.val : out.test);
        dst.posts.push_back(corpus.posts[i]);
    }
    return out;
}

Corpus filter_classes(const Corpus& corpus, const std::set<ClassLabel>& exclude) {
    if (exclude.size() >= kNumClasses) throw ValidationError("cannot exclude every class");
    Corpus out;
    out.name = corpus.name;
    for (const auto& p : corpus.posts)
        if (!exclude.count(p.label)) out.posts.push_back(p);
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json post_to_json(const Post& post) {
    return {{"id", post.id},
            {"text", post.text},
            {"label", std::string(to_string(post.label))},
            {"source", post.source},
            {"word_count", post.word_count}};
}

Post post_from_json(const nlohmann::json& j) {
    if (!j.contains("text") || !j.contains("label") || !j.contains("id"))
        throw ValidationError("corpus record requires id, text and label");
    return Post::make(j.at("id").get<std::string>(), j.at("text").get<std::string>(),
                      label_from_string(j.at("label").get<std::string>()), j.value("source", std::string{}));
}

void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& p : corpus.posts) out << post_to_json(p).dump() << '\n';
}

Corpus read_corpus_jsonl(const std::filesystem::path& path, std::string name) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus " + path.string());
    Corpus c;
    c.name = name.empty() ? path.stem().string() : std::move(name);
    std::string line;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        if (normalize_text(line).empty()) continue;
        Post p = post_from_json(nlohmann::json::parse(line));
        if (!ids.insert(p.id).second) throw ValidationError("duplicate post id '" + p.id + "' in " + path.string());
        c.posts.push_back(std::move(p));
    }
    return c;
}

}  // namespace mhc

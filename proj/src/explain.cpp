#include "mhc/explain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace mhc {
namespace {

std::string fmt(double v, int digits = 4, bool sign = false) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits);
    if (sign && v >= 0) os << '+';
    os << v;
    return os.str();
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

bool is_special(std::string_view t) { return t.size() >= 2 && t.front() == '[' && t.back() == ']'; }

// Sorting before summing makes the aggregate independent of sample order.
double ordered_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

std::string safe_file_stem(const std::string& id) {
    std::string s;
    for (char c : id) s.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
    return s.empty() ? "sample" : s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Integrated gradients

double TokenAttribution::total() const {
    double s = 0.0;
    for (double v : scores) s += v;
    return s;
}

nlohmann::json TokenAttribution::to_json() const {
    return {{"id", id},
            {"tokens", tokens},
            {"scores", scores},
            {"target", std::string(to_string(target))},
            {"target_quantity", "logit"},
            {"prediction_delta", prediction_delta},
            {"completeness_gap", completeness_gap},
            {"steps", steps}};
}

Eigen::MatrixXd integrated_gradients(const DifferentiableFn& f, const Eigen::MatrixXd& input,
                                     const Eigen::MatrixXd& baseline, int steps) {
    if (steps < 1) throw ValidationError("steps must be positive", "explain.steps");
    if (input.rows() != baseline.rows() || input.cols() != baseline.cols())
        throw ValidationError("baseline shape differs from input shape");
    const Eigen::MatrixXd diff = input - baseline;
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(input.rows(), input.cols());
    Eigen::MatrixXd grad;
    for (int k = 0; k < steps; ++k) {
        const double alpha = (k + 0.5) / steps;
        f(baseline + alpha * diff, &grad);
        total += grad;
    }
    return diff.cwiseProduct(total) / static_cast<double>(steps);
}

TokenAttribution integrated_gradients(const TinyEncoderModel& model, const std::vector<int>& token_ids,
                                      std::vector<std::string> tokens, std::size_t target_index, int steps,
                                      IgBaseline baseline) {
    if (token_ids.empty()) throw ValidationError("text produced no tokens to attribute");
    if (steps < 8) throw ValidationError("integrated gradients needs at least 8 steps", "explain.steps");
    if (target_index >= model.config().num_labels) throw ValidationError("target class index out of range");
    if (tokens.size() != token_ids.size()) throw ValidationError("token strings and ids differ in length");

    const Eigen::MatrixXd x = model.embed_tokens(token_ids);
    Eigen::MatrixXd b;
    if (baseline == IgBaseline::Pad)
        b = model.params().token_embedding.row(Vocabulary::kPad).replicate(x.rows(), 1);
    else
        b = Eigen::MatrixXd::Zero(x.rows(), x.cols());

    const auto t = static_cast<Eigen::Index>(target_index);
    const DifferentiableFn logit = [&](const Eigen::MatrixXd& e, Eigen::MatrixXd* grad) {
        const auto cache = model.forward_embeddings(e);
        if (grad) {
            Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(cache.logits.size());
            d(t) = 1.0;
            *grad = model.backward(cache, d, nullptr);
        }
        return cache.logits(t);
    };

    const Eigen::MatrixXd per_dim = integrated_gradients(logit, x, b, steps);
    TokenAttribution out;
    out.tokens = std::move(tokens);
    out.scores.resize(token_ids.size());
    for (Eigen::Index i = 0; i < per_dim.rows(); ++i) out.scores[static_cast<std::size_t>(i)] = per_dim.row(i).sum();
    out.prediction_delta = logit(x, nullptr) - logit(b, nullptr);
    out.completeness_gap = std::abs(out.total() - out.prediction_delta);
    out.steps = steps;
    return out;
}

TokenAttribution integrated_gradients(const Checkpoint& checkpoint, const std::string& text, ClassLabel target,
                                      int steps, IgBaseline baseline) {
    const std::size_t max_tokens = checkpoint.config.max_sequence_tokens;
    const auto ids = checkpoint.vocab.encode(text, max_tokens);
    auto words = tokenize_words(text);
    if (words.size() > ids.size()) words.resize(ids.size());
    auto out = integrated_gradients(checkpoint.model, ids, std::move(words), checkpoint.label_order.index_of(target),
                                    steps, baseline);
    out.target = target;
    return out;
}

// ---------------------------------------------------------------------------
// Buckets

std::string_view to_string(ErrorBucket bucket) {
    switch (bucket) {
        case ErrorBucket::TruePositive: return "True Positive";
        case ErrorBucket::FalsePositive: return "False Positive";
        case ErrorBucket::FalseNegative: return "False Negative";
        case ErrorBucket::TrueNegative: return "True Negative";
    }
    return "";
}

std::string_view short_name(ErrorBucket bucket) {
    switch (bucket) {
        case ErrorBucket::TruePositive: return "TP";
        case ErrorBucket::FalsePositive: return "FP";
        case ErrorBucket::FalseNegative: return "FN";
        case ErrorBucket::TrueNegative: return "TN";
    }
    return "";
}

ErrorBucket bucket_of(ClassLabel truth, ClassLabel predicted, ClassLabel focus) {
    const bool t = truth == focus, p = predicted == focus;
    if (t && p) return ErrorBucket::TruePositive;
    if (t) return ErrorBucket::FalseNegative;
    if (p) return ErrorBucket::FalsePositive;
    return ErrorBucket::TrueNegative;
}

std::map<ErrorBucket, std::vector<std::string>> bucket_examples(const std::vector<ClassLabel>& truth,
                                                                const std::vector<ClassLabel>& predicted,
                                                                ClassLabel focus, const std::vector<std::string>& ids) {
    if (truth.size() != predicted.size()) throw ValidationError("true and predicted labels differ in length");
    if (!ids.empty() && ids.size() != truth.size()) throw ValidationError("ids and labels differ in length");
    std::map<ErrorBucket, std::vector<std::string>> out;
    for (auto b : {ErrorBucket::TruePositive, ErrorBucket::FalsePositive, ErrorBucket::FalseNegative,
                   ErrorBucket::TrueNegative})
        out[b];
    for (std::size_t i = 0; i < truth.size(); ++i)
        out[bucket_of(truth[i], predicted[i], focus)].push_back(ids.empty() ? std::to_string(i) : ids[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Driver words

const DriverRow& DriverTable::row(ErrorBucket bucket) const {
    for (const auto& r : rows)
        if (r.bucket == bucket) return r;
    throw ValidationError("driver table has no row for " + std::string(to_string(bucket)));
}

nlohmann::json DriverTable::to_json() const {
    auto terms = [](const std::vector<ScoredTerm>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& t : v) a.push_back({{"word", t.term}, {"score", t.score}});
        return a;
    };
    nlohmann::json r = nlohmann::json::array();
    for (const auto& row : rows)
        r.push_back({{"bucket", std::string(short_name(row.bucket))},
                     {"samples", row.samples},
                     {"empty", row.empty()},
                     {"positive", terms(row.positive)},
                     {"negative", terms(row.negative)}});
    return {{"focus", std::string(to_string(focus))}, {"aggregation", "sum"}, {"target_quantity", "logit"}, {"rows", r}};
}

std::string DriverTable::to_markdown() const {
    auto cell = [](const std::vector<ScoredTerm>& v) {
        std::string s;
        for (const auto& t : v) {
            if (!s.empty()) s += ", ";
            s += t.term + " (" + fmt(t.score, 3, true) + ")";
        }
        return s.empty() ? std::string("-") : s;
    };
    std::ostringstream os;
    os << "| Bucket | Positive drivers | Negative drivers |\n|---|---|---|\n";
    for (const auto& r : rows) {
        os << "| " << to_string(r.bucket) << " | ";
        if (r.empty())
            os << "(no samples) | (no samples) |\n";
        else
            os << cell(r.positive) << " | " << cell(r.negative) << " |\n";
    }
    return os.str();
}

DriverTable aggregate_drivers(const std::vector<TokenAttribution>& attributions,
                              const std::vector<ErrorBucket>& buckets, std::size_t k,
                              const std::set<std::string>& stopwords, const std::vector<ErrorBucket>& row_order) {
    if (attributions.size() != buckets.size()) throw ValidationError("attributions and buckets differ in length");
    std::map<ErrorBucket, std::map<std::string, std::vector<double>>> contributions;
    std::map<ErrorBucket, std::size_t> samples;
    DriverTable table;
    if (!attributions.empty()) table.focus = attributions.front().target;

    for (std::size_t i = 0; i < attributions.size(); ++i) {
        const auto& a = attributions[i];
        if (a.tokens.size() != a.scores.size()) throw ValidationError("attribution tokens and scores differ in length");
        ++samples[buckets[i]];
        std::vector<std::pair<std::string, double>> words;
        for (std::size_t t = 0; t < a.tokens.size(); ++t) {
            const auto& tok = a.tokens[t];
            if (tok.rfind("##", 0) == 0 && !words.empty()) {
                words.back().first += tok.substr(2);
                words.back().second += a.scores[t];
            } else {
                words.emplace_back(tok, a.scores[t]);
            }
        }
        auto& bucket = contributions[buckets[i]];
        for (auto& [w, s] : words) {
            if (!std::isfinite(s)) throw ValidationError("non-finite attribution score");
            std::string word = lower(w);
            if (word.empty() || is_special(word) || is_punctuation_token(word) || stopwords.count(word)) continue;
            bucket[word].push_back(s);
        }
    }

    for (ErrorBucket b : row_order) {
        DriverRow row;
        row.bucket = b;
        row.samples = samples.count(b) ? samples[b] : 0;
        std::vector<ScoredTerm> pos, neg;
        for (const auto& [word, vals] : contributions[b]) {
            const double s = ordered_sum(vals);
            if (s > 0)
                pos.push_back({word, s});
            else if (s < 0)
                neg.push_back({word, s});
        }
        std::sort(pos.begin(), pos.end(), [](const auto& x, const auto& y) {
            return x.score != y.score ? x.score > y.score : x.term < y.term;
        });
        std::sort(neg.begin(), neg.end(), [](const auto& x, const auto& y) {
            return x.score != y.score ? x.score < y.score : x.term < y.term;
        });
        if (pos.size() > k) pos.resize(k);
        if (neg.size() > k) neg.resize(k);
        row.positive = std::move(pos);
        row.negative = std::move(neg);
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Keyphrases

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

std::vector<std::size_t> mmr_select(const std::vector<Eigen::VectorXd>& candidates, const Eigen::VectorXd& doc,
                                    std::size_t k, double diversity) {
    if (diversity < 0.0 || diversity > 1.0) throw ValidationError("diversity must be in [0, 1]", "explain.diversity");
    const std::size_t n = candidates.size();
    k = std::min(k, n);
    std::vector<std::size_t> selected;
    if (k == 0) return selected;
    std::vector<double> doc_sim(n);
    for (std::size_t i = 0; i < n; ++i) doc_sim[i] = cosine(candidates[i], doc);
    std::vector<bool> taken(n, false);
    std::vector<double> redundancy(n, -1.0);  // max similarity to any selected candidate

    std::size_t first = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (doc_sim[i] > doc_sim[first]) first = i;
    auto take = [&](std::size_t s) {
        taken[s] = true;
        selected.push_back(s);
        for (std::size_t i = 0; i < n; ++i)
            if (!taken[i]) redundancy[i] = std::max(redundancy[i], cosine(candidates[i], candidates[s]));
    };
    take(first);
    while (selected.size() < k) {
        std::size_t best = n;
        double best_score = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double score = (1.0 - diversity) * doc_sim[i] - diversity * redundancy[i];
            if (best == n || score > best_score) {
                best = i;
                best_score = score;
            }
        }
        take(best);
    }
    return selected;
}

KeyphraseResult extract_keyphrases(const std::vector<std::string>& texts, const Encoder& encoder,
                                   const KeyphraseOptions& options) {
    if (texts.empty()) throw ValidationError("keyphrase extraction needs at least one text");
    if (options.ngram_min < 1 || options.ngram_max < options.ngram_min)
        throw ValidationError("invalid n-gram range", "explain.ngram_range");
    const auto& stop = options.stopwords ? *options.stopwords : default_stopwords();

    KeyphraseResult result;
    std::set<std::string> candidates;
    Eigen::VectorXd doc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(encoder.dimension()));
    std::size_t used = 0;
    for (std::size_t d = 0; d < texts.size(); ++d) {
        // n-grams never cross punctuation
        std::vector<std::vector<std::string>> segments(1);
        std::size_t words = 0;
        for (auto& tok : tokenize_words(texts[d])) {
            if (is_punctuation_token(tok)) {
                if (!segments.back().empty()) segments.emplace_back();
            } else {
                segments.back().push_back(std::move(tok));
                ++words;
            }
        }
        if (words < options.ngram_min) {
            result.diagnostics.push_back("document " + std::to_string(d) + " skipped: " + std::to_string(words) +
                                         " words, fewer than the minimum n-gram length");
            continue;
        }
        Eigen::VectorXd e = encoder.embed(texts[d]);
        if (e.norm() > 0) doc += e / e.norm();
        ++used;
        for (const auto& seg : segments)
            for (std::size_t n = options.ngram_min; n <= options.ngram_max; ++n)
                for (std::size_t s = 0; s + n <= seg.size(); ++s) {
                    if (stop.count(seg[s]) || stop.count(seg[s + n - 1])) continue;
                    std::string phrase = seg[s];
                    for (std::size_t j = s + 1; j < s + n; ++j) phrase += ' ' + seg[j];
                    if (options.filter_list.count(phrase)) continue;
                    candidates.insert(std::move(phrase));
                }
    }
    if (used == 0 || candidates.empty()) {
        result.diagnostics.push_back("no candidate phrases");
        return result;
    }
    doc /= static_cast<double>(used);

    struct Cand {
        std::string phrase;
        Eigen::VectorXd emb;
        double sim;
    };
    std::vector<Cand> pool;
    pool.reserve(candidates.size());
    for (const auto& p : candidates) {
        Eigen::VectorXd e = encoder.embed(p);
        const double sim = cosine(e, doc);
        pool.push_back({p, std::move(e), sim});
    }
    std::stable_sort(pool.begin(), pool.end(), [](const Cand& a, const Cand& b) { return a.sim > b.sim; });
    if (pool.size() > options.max_candidates) pool.resize(options.max_candidates);

    std::vector<Eigen::VectorXd> embs;
    embs.reserve(pool.size());
    for (const auto& c : pool) embs.push_back(c.emb);
    for (auto i : mmr_select(embs, doc, options.k, options.diversity))
        result.phrases.push_back({pool[i].phrase, pool[i].sim});
    return result;
}

nlohmann::json PhraseTable::to_json() const {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& [bucket, res] : rows) {
        nlohmann::json phrases = nlohmann::json::array();
        for (const auto& p : res.phrases) phrases.push_back({{"phrase", p.term}, {"relevance", p.score}});
        r.push_back({{"bucket", std::string(short_name(bucket))}, {"phrases", phrases}, {"diagnostics", res.diagnostics}});
    }
    return {{"rows", r}};
}

std::string PhraseTable::to_markdown() const {
    std::ostringstream os;
    os << "| Bucket | Key phrases |\n|---|---|\n";
    for (const auto& [bucket, res] : rows) {
        os << "| " << to_string(bucket) << " | ";
        if (res.phrases.empty()) os << '-';
        for (std::size_t i = 0; i < res.phrases.size(); ++i)
            os << (i ? ", " : "") << res.phrases[i].term << " (" << fmt(res.phrases[i].score, 3) << ')';
        os << " |\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// HTML

std::string render_html(const TokenAttribution& attr, ClassLabel predicted, ClassLabel true_label) {
    double max_abs = 0.0;
    for (double s : attr.scores) max_abs = std::max(max_abs, std::abs(s));
    std::ostringstream os;
    os << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Attribution " << html_escape(attr.id)
       << "</title>\n<style>body{font-family:sans-serif;max-width:60em;margin:2em auto;line-height:2}"
          ".tok{padding:2px 3px;border-radius:3px}.legend span{padding:2px 6px;margin-right:1em}</style></head>\n"
          "<body>\n";
    os << "<h1>" << html_escape(attr.id.empty() ? std::string("sample") : attr.id) << "</h1>\n";
    os << "<p class=\"header\">True label: <b>" << to_string(true_label) << "</b> | Predicted label: <b>"
       << to_string(predicted) << "</b> | Prediction delta (" << to_string(attr.target)
       << " logit): <b>" << fmt(attr.prediction_delta) << "</b> | Completeness gap: " << fmt(attr.completeness_gap)
       << "</p>\n";
    os << "<p class=\"legend\"><span style=\"background-color: rgba(220, 38, 38, 0.6)\">pushes toward "
       << to_string(attr.target) << "</span><span style=\"background-color: rgba(37, 99, 235, 0.6)\">pushes away from "
       << to_string(attr.target) << "</span>darker = stronger</p>\n<p class=\"text\">";
    for (std::size_t i = 0; i < attr.tokens.size(); ++i) {
        const double s = i < attr.scores.size() ? attr.scores[i] : 0.0;
        const double alpha = max_abs > 0 ? std::abs(s) / max_abs : 0.0;
        const char* cls = s > 0 ? "pos" : (s < 0 ? "neg" : "neu");
        const char* rgb = s > 0 ? "220, 38, 38" : (s < 0 ? "37, 99, 235" : "0, 0, 0");
        char style[64];
        std::snprintf(style, sizeof style, "rgba(%s, %.3f)", rgb, s == 0 ? 0.0 : alpha);
        os << (i ? " " : "") << "<span class=\"tok " << cls << "\" style=\"background-color: " << style
           << "\" title=\"" << fmt(s, 6, true) << "\">" << html_escape(attr.tokens[i]) << "</span>";
    }
    os << "</p>\n</body></html>\n";
    return os.str();
}

std::string render_index(const std::vector<IndexEntry>& entries, ClassLabel focus) {
    std::ostringstream os;
    os << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Attributions: " << to_string(focus)
       << "</title></head>\n<body>\n<h1>Attributions for " << to_string(focus) << "</h1>\n";
    for (auto b : {ErrorBucket::TruePositive, ErrorBucket::FalseNegative, ErrorBucket::FalsePositive,
                   ErrorBucket::TrueNegative}) {
        std::vector<const IndexEntry*> in;
        for (const auto& e : entries)
            if (e.bucket == b) in.push_back(&e);
        if (in.empty()) continue;
        os << "<h2>" << to_string(b) << " (" << in.size() << ")</h2>\n<ul>\n";
        for (const auto* e : in)
            os << "<li><a href=\"" << html_escape(e->file) << "\">" << html_escape(e->id) << "</a> true "
               << to_string(e->true_label) << ", predicted " << to_string(e->predicted) << "</li>\n";
        os << "</ul>\n";
    }
    os << "</body></html>\n";
    return os.str();
}

// ---------------------------------------------------------------------------

ExplainResult run_explain(const Checkpoint& checkpoint, const Corpus& corpus, const Encoder& phrase_encoder,
                          const ExplainOptions& options, const std::filesystem::path& out_dir) {
    if (!checkpoint.label_order.contains(options.focus))
        throw ValidationError("focus class " + std::string(to_string(options.focus)) + " is not a model label",
                              "explain.focus");
    if (corpus.empty()) throw ValidationError("explain corpus is empty");

    const auto preds = predict(checkpoint, corpus.texts(), corpus.ids());
    std::unordered_map<std::string, ClassLabel> predicted_of;
    for (std::size_t i = 0; i < preds.ids.size(); ++i) predicted_of.emplace(preds.ids[i], preds.predicted[i]);
    std::unordered_map<std::string, const Post*> post_of;
    std::vector<ClassLabel> truth, predicted;
    std::vector<std::string> ids;
    for (const auto& p : corpus.posts) {
        auto it = predicted_of.find(p.id);
        if (it == predicted_of.end()) continue;  // no tokens
        post_of.emplace(p.id, &p);
        truth.push_back(p.label);
        predicted.push_back(it->second);
        ids.push_back(p.id);
    }

    ExplainResult result;
    result.buckets = bucket_examples(truth, predicted, options.focus, ids);
    std::filesystem::create_directories(out_dir / "html");

    std::vector<TokenAttribution> attrs;
    std::vector<ErrorBucket> attr_buckets;
    std::vector<IndexEntry> index;
    const std::vector<ErrorBucket> reported{ErrorBucket::FalseNegative, ErrorBucket::FalsePositive,
                                            ErrorBucket::TruePositive};
    for (ErrorBucket b : reported) {
        const auto& bucket_ids = result.buckets[b];
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < bucket_ids.size(); ++i) {
            const Post& post = *post_of.at(bucket_ids[i]);
            texts.push_back(post.text);
            if (i >= options.max_samples_per_bucket) continue;
            auto a = integrated_gradients(checkpoint, post.text, options.focus, options.steps, options.baseline);
            a.id = post.id;
            result.max_completeness_gap = std::max(result.max_completeness_gap, a.completeness_gap);
            const std::string file = "html/" + safe_file_stem(post.id) + ".html";
            write_text(out_dir / file, render_html(a, predicted_of.at(post.id), post.label));
            result.artifacts.push_back(out_dir / file);
            index.push_back({b, post.id, file, post.label, predicted_of.at(post.id)});
            attrs.push_back(std::move(a));
            attr_buckets.push_back(b);
        }
        if (texts.empty())
            result.phrases.rows[b] = KeyphraseResult{{}, {"empty bucket"}};
        else
            result.phrases.rows[b] = extract_keyphrases(texts, phrase_encoder, options.keyphrases);
    }
    result.drivers = aggregate_drivers(attrs, attr_buckets, options.top_k_words, default_stopwords(), reported);
    result.drivers.focus = options.focus;

    auto emit = [&](const std::string& name, const std::string& content) {
        write_text(out_dir / name, content);
        result.artifacts.push_back(out_dir / name);
    };
    emit("drivers.json", result.drivers.to_json().dump(2) + "\n");
    emit("drivers.md", result.drivers.to_markdown());
    emit("phrases.json", result.phrases.to_json().dump(2) + "\n");
    emit("phrases.md", result.phrases.to_markdown());
    emit("index.html", render_index(index, options.focus));
    nlohmann::json buckets;
    for (const auto& [b, v] : result.buckets) buckets[std::string(short_name(b))] = v;
    emit("buckets.json", nlohmann::json{{"focus", std::string(to_string(options.focus))},
                                        {"buckets", buckets},
                                        {"max_completeness_gap", result.max_completeness_gap}}
                             .dump(2) + "\n");
    return result;
}

}  // namespace mhc

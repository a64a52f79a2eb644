#include "mhc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"

#include "mhc/corpus.hpp"
#include "mhc/embedding.hpp"
#include "mhc/evaluate.hpp"
#include "mhc/explain.hpp"
#include "mhc/explore.hpp"
#include "mhc/models.hpp"
#include "mhc/prompting.hpp"
#include "mhc/text.hpp"

#ifndef MHC_DATA_DIR
#define MHC_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace mhc::cli {

// ---------------------------------------------------------------------------
// Manifest and run directories

json RunManifest::to_json() const {
    json j{{"run_id", run_id},
           {"timestamp", timestamp},
           {"subcommand", subcommand},
           {"config", config},
           {"input_hashes", input_hashes},
           {"seeds", seeds},
           {"artifacts", artifacts},
           {"tool_version", tool_version},
           {"status", status},
           {"nondeterministic", nondeterministic}};
    if (!error.empty()) j["error"] = error;
    return j;
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.subcommand = j.at("subcommand").get<std::string>();
    m.config = j.value("config", json::object());
    m.input_hashes = j.value("input_hashes", std::map<std::string, std::string>{});
    m.seeds = j.value("seeds", std::map<std::string, std::uint64_t>{});
    m.artifacts = j.value("artifacts", std::vector<std::string>{});
    m.tool_version = j.value("tool_version", std::string{});
    m.status = j.value("status", std::string{});
    m.nondeterministic = j.value("nondeterministic", false);
    m.error = j.value("error", std::string{});
    return m;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw IoError("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

std::string utc_now(const char* format) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, format);
    return os.str();
}

}  // namespace

RunDirectory RunDirectory::create(const fs::path& root, const std::string& subcommand, const json& config) {
    fs::create_directories(root);
    const std::string base = "run-" + utc_now("%Y%m%dT%H%M%SZ") + "-" + subcommand;
    RunDirectory rd;
    for (int n = 0;; ++n) {
        const std::string name = n == 0 ? base : base + "-" + std::to_string(n);
        if (fs::create_directory(root / name)) {
            rd.path_ = root / name;
            rd.manifest_.run_id = name;
            break;
        }
    }
    rd.manifest_.timestamp = utc_now("%Y-%m-%dT%H:%M:%SZ");
    rd.manifest_.subcommand = subcommand;
    rd.manifest_.config = config;
    rd.write_manifest();
    return rd;
}

void RunDirectory::record_input(const fs::path& input) {
    if (fs::is_directory(input)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(input))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) manifest_.input_hashes[f.string()] = sha256_file(f);
    } else {
        manifest_.input_hashes[input.string()] = sha256_file(input);
    }
}

fs::path RunDirectory::artifact(const std::string& relative) {
    if (std::find(manifest_.artifacts.begin(), manifest_.artifacts.end(), relative) == manifest_.artifacts.end())
        manifest_.artifacts.push_back(relative);
    const fs::path p = path_ / relative;
    fs::create_directories(p.parent_path());
    return p;
}

void RunDirectory::write_manifest() const { write_atomic(path_ / "manifest.json", manifest_.to_json().dump(2) + "\n"); }

void RunDirectory::finalize(bool success, const std::string& error) {
    std::string missing;
    for (const auto& a : manifest_.artifacts)
        if (!fs::exists(path_ / a)) missing += (missing.empty() ? "" : ", ") + a;
    manifest_.status = success && missing.empty() ? "completed" : "failed";
    manifest_.error = !missing.empty() ? "missing artifacts: " + missing : error;
    write_manifest();
    if (success && !missing.empty()) throw Error("run finished with missing artifacts: " + missing);
}

// ---------------------------------------------------------------------------
// Config helpers

namespace {

const std::set<std::string> kSections = {"seed",    "output_root", "data",     "ingest",  "embedding", "explore",
                                         "linear",  "finetune",    "evaluate", "prompt",  "explain",   "report"};

struct Context {
    json config = json::object();
    fs::path base_dir;  // relative config paths resolve here
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
};

const json& section(const Context& ctx, const std::string& name) {
    static const json empty = json::object();
    if (!ctx.config.contains(name)) return empty;
    const json& s = ctx.config.at(name);
    if (!s.is_object()) throw ConfigError("section must be an object", name);
    return s;
}

template <typename T>
T get_or(const json& sec, const std::string& section_name, const std::string& key, T fallback) {
    if (!sec.contains(key) || sec.at(key).is_null()) return fallback;
    try {
        return sec.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("invalid value", section_name + "." + key);
    }
}

std::optional<double> optional_real(const json& sec, const std::string& section_name, const std::string& key,
                                    std::optional<double> fallback) {
    if (!sec.contains(key)) return fallback;
    if (sec.at(key).is_null()) return std::nullopt;
    if (!sec.at(key).is_number()) throw ConfigError("invalid value", section_name + "." + key);
    return sec.at(key).get<double>();
}

fs::path resolve(const Context& ctx, const fs::path& p) {
    return p.is_absolute() || ctx.base_dir.empty() ? p : ctx.base_dir / p;
}

std::optional<fs::path> data_path(const Context& ctx, const std::string& key) {
    const auto& d = section(ctx, "data");
    const auto v = get_or<std::string>(d, "data", key, "");
    if (v.empty()) return std::nullopt;
    return resolve(ctx, v);
}

fs::path require_data(const Context& ctx, const std::string& key) {
    auto p = data_path(ctx, key);
    if (!p) throw ConfigError("required input missing (set data." + key + " or --" + key + ")", "data." + key);
    return *p;
}

std::uint64_t seed_of(const Context& ctx, const json& sec, const std::string& name, std::uint64_t fallback) {
    const auto global = get_or<std::uint64_t>(ctx.config, "", "seed", fallback);
    return get_or<std::uint64_t>(sec, name, "seed", global);
}

ClassLabel label_field(const std::string& value, const std::string& field) {
    auto l = parse_label(value);
    if (!l) throw ConfigError("unknown class '" + value + "'", field);
    return *l;
}

void set_path(json& j, const std::string& dotted, const json& value) {
    json* cur = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object()) *cur = json::object();
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        cur = &(*cur)[key];
        start = dot + 1;
    }
}

Corpus read_corpus(RunDirectory& run, const fs::path& path, const std::string& name) {
    run.record_input(path);
    return read_corpus_jsonl(path, name);
}

std::unique_ptr<Encoder> make_encoder(const Context& ctx, RunDirectory& run, std::optional<Checkpoint>& holder) {
    const auto& e = section(ctx, "embedding");
    const auto kind = get_or<std::string>(e, "embedding", "encoder", "hashing");
    if (kind == "hashing") {
        const auto dim = get_or<std::size_t>(e, "embedding", "dim", 64);
        if (dim == 0) throw ConfigError("dim must be positive", "embedding.dim");
        return std::make_unique<HashingEncoder>(dim, get_or<std::size_t>(e, "embedding", "max_tokens", 512),
                                                get_or<bool>(e, "embedding", "normalize", true),
                                                get_or<std::uint64_t>(e, "embedding", "seed", 17));
    }
    if (kind == "checkpoint") {
        const auto dir = get_or<std::string>(e, "embedding", "checkpoint", "");
        if (dir.empty()) throw ConfigError("checkpoint encoder needs a checkpoint directory", "embedding.checkpoint");
        run.record_input(resolve(ctx, dir));
        holder = Checkpoint::load(resolve(ctx, dir));
        return std::make_unique<CheckpointEncoder>(*holder);
    }
    throw ConfigError("unknown encoder '" + kind + "'", "embedding.encoder");
}

std::size_t encode_batch(const Context& ctx) {
    const auto b = get_or<std::size_t>(section(ctx, "embedding"), "embedding", "batch_size", 32);
    if (b == 0) throw ConfigError("batch_size must be positive", "embedding.batch_size");
    return b;
}

void write_file(RunDirectory& run, const std::string& rel, const std::string& content) {
    std::ofstream out(run.artifact(rel), std::ios::binary);
    if (!out) throw IoError("cannot write " + (run.path() / rel).string());
    out << content;
}

void write_metrics(RunDirectory& run, const ConfusionMatrix& cm, const MetricsReport& m) {
    write_file(run, "confusion.csv", cm.to_csv());
    write_file(run, "metrics.json", m.to_json().dump(2) + "\n");
    write_file(run, "metrics.md", m.to_markdown());
}

std::vector<ClassLabel> aligned_truth(const Corpus& corpus, const std::vector<std::string>& ids) {
    std::map<std::string, ClassLabel> gold;
    for (const auto& p : corpus.posts) gold.emplace(p.id, p.label);
    std::vector<ClassLabel> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(gold.at(id));
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands. Each has a configure step (ConfigError -> exit 2) returning the work to run.

using Job = std::function<void(RunDirectory&)>;

Job configure_ingest(const Context& ctx) {
    const auto& s = section(ctx, "ingest");
    if (!s.contains("sources") || !s.at("sources").is_array() || s.at("sources").empty())
        throw ConfigError("at least one source is required", "ingest.sources");
    std::vector<SourceConfig> sources;
    for (std::size_t i = 0; i < s.at("sources").size(); ++i) {
        const std::string field = "ingest.sources[" + std::to_string(i) + "]";
        try {
            sources.push_back(SourceConfig::from_json(s.at("sources").at(i), ctx.base_dir));
        } catch (const ValidationError& e) {
            throw ConfigError(e.what(), field + (e.field().empty() ? "" : "." + e.field()));
        } catch (const json::exception& e) {
            throw ConfigError(e.what(), field);
        }
    }
    const auto& cur = s.value("curation", json::object());
    CurationBounds bounds{get_or<std::size_t>(cur, "ingest.curation", "min_words", 10),
                          get_or<std::size_t>(cur, "ingest.curation", "max_words", 400)};
    if (bounds.min_words > bounds.max_words) throw ConfigError("min_words exceeds max_words", "ingest.curation");
    const auto& sp = s.value("split", json::object());
    SplitSpec spec;
    spec.train_fraction = get_or<double>(sp, "ingest.split", "train", 0.8);
    spec.val_fraction = get_or<double>(sp, "ingest.split", "val", 0.1);
    spec.test_fraction = get_or<double>(sp, "ingest.split", "test", 0.1);
    spec.seed = seed_of(ctx, sp, "ingest.split", 42);
    spec.stratified = get_or<bool>(sp, "ingest.split", "stratified", true);
    try {
        spec.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what(), "ingest.split");
    }
    std::set<ClassLabel> exclude;
    for (const auto& name : get_or<std::vector<std::string>>(s, "ingest", "exclude_classes", {}))
        exclude.insert(label_field(name, "ingest.exclude_classes"));

    return [=](RunDirectory& run) {
        run.manifest().seeds["split"] = spec.seed;
        std::vector<Post> all;
        json per_source = json::array();
        for (const auto& src : sources) {
            run.record_input(src.path);
            auto loaded = load_source(src);
            per_source.push_back({{"source", src.source_tag},
                                  {"path", src.path.string()},
                                  {"loaded", loaded.posts.size()},
                                  {"skipped_empty", loaded.skipped_empty},
                                  {"filtered", loaded.filtered}});
            for (auto& p : loaded.posts) all.push_back(std::move(p));
        }
        Corpus corpus = curate(all, bounds, "curated");
        if (!exclude.empty()) corpus = filter_classes(corpus, exclude);
        const auto st = stats(corpus);
        const auto parts = split(corpus, spec);
        write_corpus_jsonl(corpus, run.artifact("corpus.jsonl"));
        write_corpus_jsonl(parts.train, run.artifact("train.jsonl"));
        write_corpus_jsonl(parts.val, run.artifact("val.jsonl"));
        write_corpus_jsonl(parts.test, run.artifact("test.jsonl"));
        write_file(run, "stats.json", st.to_json().dump(2) + "\n");
        write_file(run, "stats.md", st.to_markdown());
        write_file(run, "ingest_summary.json",
                   json{{"sources", per_source},
                        {"raw_posts", all.size()},
                        {"curated_posts", corpus.size()},
                        {"split", {{"train", parts.train.size()}, {"val", parts.val.size()}, {"test", parts.test.size()}}}}
                           .dump(2) + "\n");
        *ctx.out << (run.path() / "corpus.jsonl").string() << '\n';
    };
}

Job configure_explore(const Context& ctx) {
    const auto corpus_path = require_data(ctx, "corpus");
    const auto& s = section(ctx, "explore");
    const auto seed = seed_of(ctx, s, "explore", 42);
    const auto method = get_or<std::string>(s, "explore", "projection", "pca");
    if (method != "pca" && method != "tsne") throw ConfigError("projection must be pca or tsne", "explore.projection");
    TsneOptions tsne;
    tsne.perplexity = get_or<double>(s, "explore", "perplexity", 30.0);
    tsne.iterations = get_or<int>(s, "explore", "tsne_iterations", 500);
    const auto batch = encode_batch(ctx);
    const auto k_cfg = get_or<int>(s, "explore", "k", 0);
    if (k_cfg < 0) throw ConfigError("k must be positive", "explore.k");

    return [=, &ctx](RunDirectory& run) {
        run.manifest().seeds["kmeans"] = seed;
        std::optional<Checkpoint> holder;
        const auto encoder = make_encoder(ctx, run, holder);
        const Corpus corpus = read_corpus(run, corpus_path, "corpus");
        const auto enc = encode(*encoder, corpus.texts(), batch, corpus.ids());
        const auto& emb = enc.embeddings;
        const auto labels = aligned_truth(corpus, emb.ids());
        emb.save(run.path() / "embeddings");
        run.artifact("embeddings.bin");
        run.artifact("embeddings.json");
        auto report = evaluate_clustering(emb, labels, seed);
        const int k = k_cfg > 0 ? k_cfg : static_cast<int>(report.label_order.size());
        const auto clusters = kmeans_cluster(emb, k, seed);
        if (k_cfg > 0) {
            report.ari = adjusted_rand_index([&] {
                std::vector<int> t;
                for (auto l : labels) t.push_back(canonical_index(l));
                return t;
            }(), clusters.cluster_ids);
        }
        write_file(run, "cluster.json", report.to_json().dump(2) + "\n");
        write_file(run, "cluster.md", report.to_markdown());
        const auto corr = centroid_cosine_matrix(class_centroids(emb, labels));
        write_file(run, "centroids.json", corr.to_json().dump(2) + "\n");
        write_file(run, "centroids.md", corr.to_markdown());
        const auto proj =
            project_2d(emb.rows(), method == "pca" ? ProjectionMethod::Pca : ProjectionMethod::Tsne, seed, tsne);
        write_projection_points(run.artifact("projection.jsonl"), proj, emb.ids(), labels, clusters.cluster_ids);
        write_file(run, "projection.svg", projection_svg(proj, labels, "Embedding space (" + encoder->name() + ")"));
        if (!enc.errors.empty()) {
            json e = json::array();
            for (const auto& x : enc.errors) e.push_back({{"id", x.id}, {"message", x.message}});
            write_file(run, "encode_errors.json", e.dump(2) + "\n");
        }
        *ctx.out << report.to_json().dump(2) << '\n';
    };
}

Job configure_train_linear(const Context& ctx) {
    const auto train_path = require_data(ctx, "train");
    const auto test_path = require_data(ctx, "test");
    const auto& s = section(ctx, "linear");
    const auto kind_name = get_or<std::string>(s, "linear", "kind", "logreg");
    LinearKind kind;
    if (kind_name == "logreg")
        kind = LinearKind::LogisticRegression;
    else if (kind_name == "svm")
        kind = LinearKind::LinearSvm;
    else
        throw ConfigError("kind must be logreg or svm", "linear.kind");
    LinearOptions opt;
    opt.l2 = get_or<double>(s, "linear", "l2", opt.l2);
    opt.learning_rate = get_or<double>(s, "linear", "learning_rate", opt.learning_rate);
    opt.epochs = get_or<int>(s, "linear", "epochs", opt.epochs);
    opt.batch_size = get_or<std::size_t>(s, "linear", "batch_size", opt.batch_size);
    if (opt.epochs < 1 || opt.batch_size < 1 || opt.learning_rate <= 0 || opt.l2 < 0)
        throw ConfigError("epochs, batch_size and learning_rate must be positive, l2 non-negative", "linear");
    const auto seed = seed_of(ctx, s, "linear", 42);
    const auto batch = encode_batch(ctx);

    return [=, &ctx](RunDirectory& run) {
        run.manifest().seeds["linear"] = seed;
        std::optional<Checkpoint> holder;
        const auto encoder = make_encoder(ctx, run, holder);
        const Corpus train = read_corpus(run, train_path, "train");
        const Corpus test = read_corpus(run, test_path, "test");
        const auto tr = encode(*encoder, train.texts(), batch, train.ids());
        const auto te = encode(*encoder, test.texts(), batch, test.ids());
        const auto model = train_linear(tr.embeddings, aligned_truth(train, tr.embeddings.ids()), kind, seed, opt);
        write_file(run, "model.json", model.to_json().dump(2) + "\n");
        const auto preds = model.predict(te.embeddings);
        preds.write_jsonl(run.artifact("predictions.jsonl"));
        const auto cm = confusion_matrix(aligned_truth(test, preds.ids), preds.predicted, model.label_order());
        auto m = metrics_from_confusion(cm);
        write_metrics(run, cm, m);
        *ctx.out << m.to_json().dump(2) << '\n';
    };
}

Job configure_finetune(const Context& ctx) {
    TrainConfig cfg;
    try {
        cfg = TrainConfig::from_json(section(ctx, "finetune"));
    } catch (const ValidationError& e) {
        throw ConfigError(e.what(), e.field().empty() ? "finetune" : e.field());
    }
    const auto train_path = require_data(ctx, "train");
    const auto val_path = data_path(ctx, "val");
    const auto test_path = data_path(ctx, "test");

    return [=, &ctx](RunDirectory& run) {
        if (!val_path) throw ValidationError("validation split required (set data.val or --val)", "data.val");
        run.manifest().seeds["finetune"] = cfg.seed;
        const Corpus train = read_corpus(run, train_path, "train");
        const Corpus val = read_corpus(run, *val_path, "val");
        if (val.empty()) throw ValidationError("validation split required: " + val_path->string() + " is empty");
        const auto ckpt = finetune(train, val, cfg);
        ckpt.save(run.path() / "checkpoint");
        for (const char* f : {"model.bin", "vocab.txt", "config.json", "training_log.csv"})
            run.artifact(std::string("checkpoint/") + f);
        json summary{{"best_epoch", ckpt.epoch}, {"val_macro_f1", ckpt.val_macro_f1}, {"epochs_run", ckpt.log.size()}};
        if (test_path) {
            const Corpus test = read_corpus(run, *test_path, "test");
            const auto preds = predict(ckpt, test.texts(), test.ids());
            preds.write_jsonl(run.artifact("predictions.jsonl"));
            const auto cm = confusion_matrix(aligned_truth(test, preds.ids), preds.predicted, ckpt.label_order);
            const auto m = metrics_from_confusion(cm);
            write_metrics(run, cm, m);
            summary["test"] = m.to_json();
        }
        write_file(run, "summary.json", summary.dump(2) + "\n");
        *ctx.out << summary.dump(2) << '\n';
    };
}

Job configure_evaluate(const Context& ctx) {
    const auto& s = section(ctx, "evaluate");
    const auto confusion = get_or<std::string>(s, "evaluate", "confusion", "");
    const auto predictions = get_or<std::string>(s, "evaluate", "predictions", "");
    const auto setup = get_or<std::string>(s, "evaluate", "setup", "");
    if (confusion.empty() == predictions.empty())
        throw ConfigError("exactly one of --confusion or --predictions is required", "evaluate");
    std::optional<LabelSet> labels;
    if (s.contains("labels")) {
        try {
            labels = LabelSet::from_names(get_or<std::vector<std::string>>(s, "evaluate", "labels", {}));
        } catch (const ValidationError& e) {
            throw ConfigError(e.what(), "evaluate.labels");
        }
    }
    std::set<ClassLabel> positive;
    for (const auto& n : get_or<std::vector<std::string>>(s, "evaluate", "positive", {}))
        positive.insert(label_field(n, "evaluate.positive"));

    return [=, &ctx](RunDirectory& run) {
        ConfusionMatrix cm;
        json binary;
        if (!confusion.empty()) {
            const auto path = resolve(ctx, confusion);
            run.record_input(path);
            cm = ConfusionMatrix::load_csv(path);
        } else {
            const auto path = resolve(ctx, predictions);
            run.record_input(path);
            std::ifstream in(path);
            if (!in) throw IoError("cannot read " + path.string());
            std::vector<ClassLabel> truth;
            std::vector<std::optional<ClassLabel>> pred;
            std::string line;
            std::size_t n = 0;
            while (std::getline(in, line)) {
                ++n;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                const auto j = json::parse(line, nullptr, false);
                if (!j.is_object() || !j.contains("gold") || !j.contains("predicted"))
                    throw ValidationError(path.string() + ":" + std::to_string(n) + ": expected {gold, predicted}");
                truth.push_back(label_from_string(j.at("gold").get<std::string>()));
                const auto p = j.at("predicted").get<std::string>();
                pred.push_back(p == kUnknownLabel ? std::nullopt : std::optional(label_from_string(p)));
            }
            std::set<ClassLabel> present(truth.begin(), truth.end());
            for (const auto& p : pred)
                if (p) present.insert(*p);
            const LabelSet order = labels ? *labels : LabelSet(std::vector<ClassLabel>(present.begin(), present.end()));
            cm = ConfusionMatrix::zeros(order);
            for (std::size_t i = 0; i < truth.size(); ++i) {
                const auto ti = order.index_of(truth[i]);
                if (pred[i])
                    ++cm.counts[ti][order.index_of(*pred[i])];
                else
                    ++cm.abstained[ti];
            }
            if (!positive.empty()) {
                std::vector<bool> g, p;
                for (std::size_t i = 0; i < truth.size(); ++i) {
                    g.push_back(positive.count(truth[i]) > 0);
                    p.push_back(pred[i] && positive.count(*pred[i]) > 0);
                }
                binary = binary_scores(g, p).to_json();
            }
        }
        const auto m = metrics_from_confusion(cm, setup);
        write_metrics(run, cm, m);
        json printed = m.to_json();
        if (!binary.is_null()) {
            printed["binary"] = binary;
            write_file(run, "binary.json", binary.dump(2) + "\n");
        }
        *ctx.out << printed.dump(2) << '\n';
    };
}

Job configure_prompt(const Context& ctx) {
    const auto& s = section(ctx, "prompt");
    const auto test_path = require_data(ctx, "test");
    const auto mode = get_or<std::string>(s, "prompt", "mode", "zero");
    if (mode != "zero" && mode != "few") throw ConfigError("mode must be zero or few", "prompt.mode");
    const auto train_path = data_path(ctx, "train");
    if (mode == "few" && !train_path) throw ConfigError("few-shot prompting needs data.train", "data.train");

    GenerationParams params;
    params.model_name = get_or<std::string>(s, "prompt", "model", params.model_name);
    params.temperature = optional_real(s, "prompt", "temperature", params.temperature);
    params.top_p = optional_real(s, "prompt", "top_p", params.top_p);
    params.batch_size = get_or<std::size_t>(s, "prompt", "batch_size", params.batch_size);
    params.max_retries = get_or<int>(s, "prompt", "max_retries", params.max_retries);
    params.backoff_base = std::chrono::milliseconds(get_or<long>(s, "prompt", "backoff_ms", 500));
    params.min_interval = std::chrono::milliseconds(get_or<long>(s, "prompt", "min_interval_ms", 0));
    try {
        params.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what(), e.field());
    }
    ProviderConfig provider;
    try {
        provider = ProviderConfig::for_provider(get_or<std::string>(s, "prompt", "provider", "openai"));
    } catch (const ValidationError& e) {
        throw ConfigError(e.what(), e.field());
    }
    provider.base_url = get_or<std::string>(s, "prompt", "base_url", provider.base_url);
    provider.path = get_or<std::string>(s, "prompt", "path", provider.path);
    provider.api_key_env = get_or<std::string>(s, "prompt", "api_key_env", provider.api_key_env);
    provider.timeout_seconds = get_or<int>(s, "prompt", "timeout_seconds", provider.timeout_seconds);
    if (provider.base_url.empty()) throw ConfigError("base_url is required for this provider", "prompt.base_url");
    const auto per_class = get_or<std::size_t>(s, "prompt", "per_class", 3);
    const auto seed = seed_of(ctx, s, "prompt", 42);
    std::optional<LabelSet> labels;
    if (s.contains("labels")) {
        try {
            labels = LabelSet::from_names(get_or<std::vector<std::string>>(s, "prompt", "labels", {}));
        } catch (const ValidationError& e) {
            throw ConfigError(e.what(), "prompt.labels");
        }
    }

    return [=, &ctx](RunDirectory& run) {
        run.manifest().seeds["fewshot"] = seed;
        OpenAiCompatibleClient client(provider);
        const Corpus test = read_corpus(run, test_path, "test");
        const LabelSet active = labels ? *labels : test.label_set();
        PromptSpec spec = PromptSpec::zero_shot(active);
        if (mode == "few") {
            const Corpus train = read_corpus(run, *train_path, "train");
            spec = PromptSpec::few_shot_from(active, select_fewshot(train, per_class, seed, active));
        }
        const auto result = run_prompting(test, spec, params, client, run.path());
        for (const char* f : {"predictions.jsonl", "diagnostics.jsonl", "run_log.txt", "metrics.json", "metrics.md",
                              "confusion.csv", "generation.json"})
            run.artifact(f);
        for (const auto& e : fs::directory_iterator(run.path() / "prompts"))
            run.artifact("prompts/" + e.path().filename().string());
        for (const auto& e : fs::directory_iterator(run.path() / "responses"))
            run.artifact("responses/" + e.path().filename().string());
        json summary = result.metrics.to_json();
        summary["failed_batches"] = result.failed_batches;
        summary["diagnostics"] = result.diagnostics.size();
        *ctx.out << summary.dump(2) << '\n';
    };
}

Job configure_explain(const Context& ctx) {
    const auto& s = section(ctx, "explain");
    const auto test_path = require_data(ctx, "test");
    const auto ckpt_dir = get_or<std::string>(s, "explain", "checkpoint", "");
    if (ckpt_dir.empty()) throw ConfigError("checkpoint directory is required", "explain.checkpoint");
    ExplainOptions opt;
    opt.focus = label_field(get_or<std::string>(s, "explain", "focus", "Suicidal"), "explain.focus");
    opt.steps = get_or<int>(s, "explain", "steps", opt.steps);
    if (opt.steps < 8) throw ConfigError("steps must be at least 8", "explain.steps");
    const auto baseline = get_or<std::string>(s, "explain", "baseline", "pad");
    if (baseline == "pad")
        opt.baseline = IgBaseline::Pad;
    else if (baseline == "zero")
        opt.baseline = IgBaseline::Zero;
    else
        throw ConfigError("baseline must be pad or zero", "explain.baseline");
    opt.top_k_words = get_or<std::size_t>(s, "explain", "top_k", opt.top_k_words);
    opt.max_samples_per_bucket = get_or<std::size_t>(s, "explain", "max_samples", opt.max_samples_per_bucket);
    const auto& ph = s.value("phrases", json::object());
    opt.keyphrases.k = get_or<std::size_t>(ph, "explain.phrases", "k", opt.keyphrases.k);
    opt.keyphrases.ngram_min = get_or<std::size_t>(ph, "explain.phrases", "ngram_min", opt.keyphrases.ngram_min);
    opt.keyphrases.ngram_max = get_or<std::size_t>(ph, "explain.phrases", "ngram_max", opt.keyphrases.ngram_max);
    opt.keyphrases.diversity = get_or<double>(ph, "explain.phrases", "diversity", opt.keyphrases.diversity);
    if (opt.keyphrases.diversity < 0 || opt.keyphrases.diversity > 1)
        throw ConfigError("diversity must be in [0, 1]", "explain.phrases.diversity");
    if (opt.keyphrases.ngram_min < 1 || opt.keyphrases.ngram_max < opt.keyphrases.ngram_min)
        throw ConfigError("invalid n-gram range", "explain.phrases.ngram_min");
    const auto filter = get_or<std::string>(ph, "explain.phrases", "filter_list", "");
    const fs::path filter_path = filter.empty() ? fs::path(MHC_DATA_DIR) / "generic_phrases.txt" : resolve(ctx, filter);

    return [=, &ctx](RunDirectory& run) mutable {
        run.record_input(resolve(ctx, ckpt_dir));
        const Checkpoint ckpt = Checkpoint::load(resolve(ctx, ckpt_dir));
        run.record_input(filter_path);
        opt.keyphrases.filter_list = load_word_list(filter_path);
        std::optional<Checkpoint> holder;
        const auto encoder = make_encoder(ctx, run, holder);
        const Corpus test = read_corpus(run, test_path, "test");
        const auto result = run_explain(ckpt, test, *encoder, opt, run.path());
        for (const auto& a : result.artifacts) run.artifact(fs::relative(a, run.path()).string());
        *ctx.out << result.drivers.to_markdown();
    };
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Job configure_report(const Context& ctx) {
    const auto& s = section(ctx, "report");
    const fs::path root = resolve(ctx, get_or<std::string>(s, "report", "runs_root",
                                                           get_or<std::string>(ctx.config, "", "output_root", "runs")));
    const auto explicit_runs = get_or<std::vector<std::string>>(s, "report", "runs", {});

    return [=, &ctx](RunDirectory& run) {
        std::vector<fs::path> dirs;
        if (!explicit_runs.empty()) {
            for (const auto& r : explicit_runs) dirs.push_back(resolve(ctx, r));
        } else if (fs::is_directory(root)) {
            for (const auto& e : fs::directory_iterator(root))
                if (e.is_directory() && e.path() != run.path()) dirs.push_back(e.path());
        }
        std::sort(dirs.begin(), dirs.end());
        std::map<std::string, std::vector<std::pair<fs::path, RunManifest>>> by_cmd;
        for (const auto& d : dirs) {
            if (!fs::exists(d / "manifest.json")) continue;
            auto m = RunManifest::from_json(json::parse(read_text(d / "manifest.json")));
            if (m.status != "completed") continue;
            by_cmd[m.subcommand].emplace_back(d, m);
        }

        std::ostringstream md;
        md << "# Mental health text classification report\n\n";
        auto include = [&](const fs::path& dir, const char* file) {
            if (fs::exists(dir / file)) md << read_text(dir / file) << '\n';
        };
        auto latest = [&](const std::string& cmd) -> const fs::path* {
            auto it = by_cmd.find(cmd);
            return it == by_cmd.end() || it->second.empty() ? nullptr : &it->second.back().first;
        };
        if (const auto* d = latest("ingest")) {
            md << "## Corpus statistics\n\n";
            include(*d, "stats.md");
        }
        if (const auto* d = latest("explore")) {
            md << "## Embedding space\n\n### Clustering agreement\n\n";
            include(*d, "cluster.md");
            md << "### Class centroid cosine similarity\n\n";
            include(*d, "centroids.md");
        }

        struct Row {
            std::string name;
            MetricsReport metrics;
        };
        std::vector<Row> rows;
        for (const char* cmd : {"train-linear", "finetune", "prompt", "evaluate"}) {
            auto it = by_cmd.find(cmd);
            if (it == by_cmd.end()) continue;
            for (const auto& [dir, m] : it->second) {
                if (!fs::exists(dir / "confusion.csv")) continue;
                std::string name = m.subcommand;
                const auto& c = m.config;
                if (m.subcommand == "train-linear" && c.contains("linear") && c["linear"].contains("kind"))
                    name += " (" + c["linear"]["kind"].get<std::string>() + ")";
                if (m.subcommand == "prompt" && c.contains("prompt")) {
                    const auto& p = c["prompt"];
                    name += " (" + p.value("model", std::string("?")) + ", " + p.value("mode", std::string("zero")) +
                            "-shot)";
                }
                rows.push_back({name + " [" + dir.filename().string() + "]",
                                metrics_from_confusion(ConfusionMatrix::load_csv(dir / "confusion.csv"))});
            }
        }
        if (!rows.empty()) {
            md << "## Model comparison (macro scores)\n\n| Run | Setup | Accuracy | Precision | Recall | F1 | "
                  "Unknown |\n|---|---|---:|---:|---:|---:|---:|\n";
            for (const auto& r : rows) {
                char buf[160];
                std::snprintf(buf, sizeof buf, " | %.3f | %.3f | %.3f | %.3f | %lld |\n", r.metrics.accuracy,
                              r.metrics.macro.precision, r.metrics.macro.recall, r.metrics.macro.f1,
                              static_cast<long long>(r.metrics.unknown_count));
                md << "| " << r.name << " | " << r.metrics.setup << buf;
            }
            md << '\n';
            std::map<std::string, const Row*> by_setup;
            for (const auto& r : rows) by_setup[r.metrics.setup] = &r;
            if (by_setup.count("6-class") && by_setup.count("5-class")) {
                md << "## Six-class vs five-class\n\n"
                   << compare_setups(by_setup["6-class"]->metrics, by_setup["5-class"]->metrics).to_markdown() << '\n';
            }
            for (const auto& r : rows) {
                md << "### " << r.name << "\n\n" << r.metrics.to_markdown() << '\n';
            }
        }
        if (const auto* d = latest("explain")) {
            md << "## Attribution drivers\n\n";
            include(*d, "drivers.md");
            md << "## Key phrases\n\n";
            include(*d, "phrases.md");
        }
        write_file(run, "report.md", md.str());
        *ctx.out << (run.path() / "report.md").string() << '\n';
    };
}

// ---------------------------------------------------------------------------

void print_error(std::ostream& err, const std::string& kind, const std::string& message, const std::string& field) {
    json e{{"kind", kind}, {"message", message}};
    if (!field.empty()) e["field"] = field;
    err << json{{"error", e}}.dump() << '\n';
}

}  // namespace

std::string usage() {
    return "usage: mhc <subcommand> [--config FILE] [options]\n"
           "\n"
           "subcommands:\n"
           "  ingest        load raw sources, curate, split, write corpus statistics\n"
           "  explore       embed a corpus, cluster it, compare class centroids, project to 2-D\n"
           "  train-linear  logistic regression or linear SVM on frozen embeddings\n"
           "  finetune      train the tiny encoder with weighted cross-entropy and early stopping\n"
           "  evaluate      metrics from a confusion matrix CSV or a predictions file\n"
           "  prompt        zero- or few-shot LLM classification through an API\n"
           "  explain       integrated-gradients drivers, key phrases and HTML views\n"
           "  report        assemble a Markdown report from earlier runs\n"
           "\n"
           "Run `mhc <subcommand> --help` for its options.\n";
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mental health text classification pipeline", "mhc"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string config_path, output_root;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--runs", output_root, "root directory for run outputs (default: runs)");

    // Flag -> config path overrides, applied after the config file is read.
    std::vector<std::pair<CLI::Option*, std::function<void(json&)>>> overrides;
    std::vector<std::unique_ptr<std::string>> str_store;
    std::vector<std::unique_ptr<double>> num_store;
    auto path_flag = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        auto& v = *str_store.emplace_back(std::make_unique<std::string>());
        auto* o = sub->add_option(flag, v, help);
        overrides.emplace_back(o, [&v, key](json& j) { set_path(j, key, fs::absolute(v).string()); });
    };
    auto str_flag = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        auto& v = *str_store.emplace_back(std::make_unique<std::string>());
        auto* o = sub->add_option(flag, v, help);
        overrides.emplace_back(o, [&v, key](json& j) { set_path(j, key, v); });
    };
    auto num_flag = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help,
                        bool integer) {
        auto& v = *num_store.emplace_back(std::make_unique<double>());
        auto* o = sub->add_option(flag, v, help);
        overrides.emplace_back(o, [&v, key, integer](json& j) {
            set_path(j, key, integer ? json(static_cast<long long>(v)) : json(v));
        });
    };

    std::map<std::string, std::function<Job(const Context&)>> configure;
    auto add = [&](const std::string& name, const std::string& help, std::function<Job(const Context&)> fn) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        configure[name] = std::move(fn);
        return sub;
    };

    add("ingest", "load, curate and split raw sources", configure_ingest);
    {
        auto* s = add("explore", "embedding-space analysis", configure_explore);
        path_flag(s, "--corpus", "data.corpus", "corpus JSONL");
        num_flag(s, "--seed", "explore.seed", "k-means / projection seed", true);
        str_flag(s, "--projection", "explore.projection", "pca or tsne");
    }
    {
        auto* s = add("train-linear", "linear baselines on frozen embeddings", configure_train_linear);
        path_flag(s, "--train", "data.train", "training corpus JSONL");
        path_flag(s, "--test", "data.test", "test corpus JSONL");
        str_flag(s, "--kind", "linear.kind", "logreg or svm");
        num_flag(s, "--seed", "linear.seed", "training seed", true);
    }
    {
        auto* s = add("finetune", "fine-tune the encoder", configure_finetune);
        path_flag(s, "--train", "data.train", "training corpus JSONL");
        path_flag(s, "--val", "data.val", "validation corpus JSONL");
        path_flag(s, "--test", "data.test", "test corpus JSONL");
        num_flag(s, "--seed", "finetune.seed", "training seed", true);
        num_flag(s, "--epochs", "finetune.epochs_max", "maximum epochs", true);
    }
    {
        auto* s = add("evaluate", "metrics from confusion matrices or predictions", configure_evaluate);
        path_flag(s, "--confusion", "evaluate.confusion", "confusion matrix CSV");
        path_flag(s, "--predictions", "evaluate.predictions", "predictions JSONL with gold and predicted");
        str_flag(s, "--setup", "evaluate.setup", "setup name for the report");
    }
    {
        auto* s = add("prompt", "LLM prompting run", configure_prompt);
        path_flag(s, "--test", "data.test", "evaluation corpus JSONL");
        path_flag(s, "--train", "data.train", "training corpus JSONL (few-shot exemplars)");
        str_flag(s, "--provider", "prompt.provider", "openai, deepseek or custom");
        str_flag(s, "--model", "prompt.model", "model name");
        str_flag(s, "--mode", "prompt.mode", "zero or few");
        str_flag(s, "--base-url", "prompt.base_url", "API base URL");
        num_flag(s, "--batch-size", "prompt.batch_size", "items per prompt", true);
        num_flag(s, "--temperature", "prompt.temperature", "sampling temperature", false);
        num_flag(s, "--top-p", "prompt.top_p", "nucleus sampling mass", false);
        num_flag(s, "--seed", "prompt.seed", "few-shot sampling seed", true);
    }
    {
        auto* s = add("explain", "attributions, drivers and key phrases", configure_explain);
        path_flag(s, "--checkpoint", "explain.checkpoint", "fine-tuned checkpoint directory");
        path_flag(s, "--test", "data.test", "corpus to explain");
        str_flag(s, "--focus", "explain.focus", "focus class");
        num_flag(s, "--steps", "explain.steps", "integration steps", true);
    }
    {
        auto* s = add("report", "assemble a report from earlier runs", configure_report);
        path_flag(s, "--runs-root", "report.runs_root", "directory holding run-* directories");
    }

    if (args.empty()) {
        err << usage();
        return 2;
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << usage();
        return 2;
    }

    std::string name;
    for (const auto& [n, fn] : configure)
        if (app.got_subcommand(n)) name = n;

    Context ctx;
    ctx.out = &out;
    ctx.err = &err;
    Job job;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot read config file " + config_path, "--config");
            ctx.config = json::parse(in, nullptr, false);
            if (ctx.config.is_discarded()) throw ConfigError("config file is not valid JSON", "--config");
            if (!ctx.config.is_object()) throw ConfigError("config root must be an object", "--config");
            ctx.base_dir = fs::absolute(config_path).parent_path();
            for (const auto& [key, value] : ctx.config.items())
                if (!kSections.count(key)) throw ConfigError("unknown config section '" + key + "'", key);
        }
        for (auto& [opt, apply] : overrides)
            if (opt->count() > 0) apply(ctx.config);
        if (!output_root.empty()) ctx.config["output_root"] = fs::absolute(output_root).string();
        job = configure.at(name)(ctx);
    } catch (const ConfigError& e) {
        print_error(err, "config", e.what(), e.field());
        return 2;
    } catch (const json::exception& e) {
        print_error(err, "config", e.what(), "");
        return 2;
    }

    const fs::path root = resolve(ctx, get_or<std::string>(ctx.config, "", "output_root", "runs"));
    std::optional<RunDirectory> run;
    try {
        run = RunDirectory::create(root, name, ctx.config);
        job(*run);
        run->finalize(true);
        return 0;
    } catch (const std::exception& e) {
        std::string kind = "runtime", field;
        if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
            kind = "validation";
            field = v->field();
        } else if (dynamic_cast<const IoError*>(&e)) {
            kind = "io";
        } else if (dynamic_cast<const AuthError*>(&e)) {
            kind = "auth";
        }
        if (run && run->manifest().status == "running") {
            try {
                run->finalize(false, e.what());
            } catch (const std::exception&) {
            }
        }
        print_error(err, kind, e.what(), field);
        return 1;
    }
}

}  // namespace mhc::cli

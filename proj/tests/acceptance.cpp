// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero if any fail.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "mhc/corpus.hpp"
#include "mhc/evaluate.hpp"
#include "mhc/explain.hpp"
#include "mhc/explore.hpp"
#include "mhc/models.hpp"
#include "mhc/prompting.hpp"
#include "stubs.hpp"

using namespace mhc;

namespace {

/// Collects failed expectations for one criterion.
struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream os;
            os << what << ": got " << std::setprecision(6) << got << ", want " << want << " +/- " << tol;
            failures.push_back(os.str());
        }
    }
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<void(Check&)> body;
};

std::string fmt_seconds(double s) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << s << "s";
    return os.str();
}

// --- 1 ----------------------------------------------------------------------

void metrics_vs_table(Check& c) {
    struct Row {
        ClassLabel l;
        double p, r, f;
    };
    const auto six = metrics_from_confusion(fixtures::parse_cm(fixtures::kSixClassCsv));
    const std::vector<Row> rows = {{ClassLabel::Stress, 0.929, 0.916, 0.922},   {ClassLabel::Anxiety, 0.681, 0.762, 0.719},
                                   {ClassLabel::Depression, 0.904, 0.892, 0.898}, {ClassLabel::PTSD, 0.744, 0.707, 0.725},
                                   {ClassLabel::Suicidal, 0.775, 0.821, 0.798}, {ClassLabel::None, 0.986, 0.958, 0.971}};
    for (const auto& r : rows) {
        const std::string n(to_string(r.l));
        c.near(six.of(r.l).precision, r.p, 0.002, n + " precision");
        c.near(six.of(r.l).recall, r.r, 0.002, n + " recall");
        c.near(six.of(r.l).f1, r.f, 0.002, n + " F1");
    }
    c.near(six.accuracy, 0.880, 0.001, "six-class accuracy");
    c.near(six.macro.recall, 0.843, 0.002, "six-class macro recall");
    c.near(six.macro.f1, 0.839, 0.002, "six-class macro F1");
    const auto five = metrics_from_confusion(fixtures::parse_cm(fixtures::kFiveClassCsv));
    c.near(five.accuracy, 0.881, 0.001, "five-class accuracy");
    c.near(five.macro.f1, 0.870, 0.002, "five-class macro F1");
}

// --- 2 ----------------------------------------------------------------------

void bucket_counts(Check& c) {
    const auto cm = fixtures::parse_cm(fixtures::kSixClassCsv);
    std::vector<ClassLabel> truth, pred;
    fixtures::expand(cm, truth, pred);
    const auto b = bucket_examples(truth, pred, ClassLabel::Suicidal);
    c.expect(b.at(ErrorBucket::TruePositive).size() == 69, "TP != 69");
    c.expect(b.at(ErrorBucket::FalseNegative).size() == 15, "FN != 15");
    c.expect(b.at(ErrorBucket::FalsePositive).size() == 20, "FP != 20");
}

// --- 3 ----------------------------------------------------------------------

double ari_pairs(const std::vector<int>& a, const std::vector<int>& b) {
    double both = 0, only_a = 0, only_b = 0, pairs = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            only_a += sa && !sb;
            only_b += sb && !sa;
            ++pairs;
        }
    const double expected = (both + only_a) * (both + only_b) / pairs;
    return (both - expected) / (0.5 * ((both + only_a) + (both + only_b)) - expected);
}

void clustering_suite(Check& c) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 1.0);
    const int per = 100, dims = 8;
    Eigen::MatrixXd x(3 * per, dims);
    std::vector<int> truth;
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < per; ++i) {
            for (int d = 0; d < dims; ++d) x(k * per + i, d) = (d == k ? 10.0 : 0.0) + noise(rng);
            truth.push_back(k);
        }
    const auto r = kmeans_cluster(x, 3, 7);
    const double ari = adjusted_rand_index(truth, r.cluster_ids);
    const double nmi = normalized_mutual_info(truth, r.cluster_ids);
    const double sil = silhouette(x, r.cluster_ids);
    c.expect(ari >= 0.99, "ARI " + std::to_string(ari));
    c.expect(nmi >= 0.99, "NMI " + std::to_string(nmi));
    c.expect(sil >= 0.6, "silhouette " + std::to_string(sil));

    std::vector<int> relabeled(r.cluster_ids);
    for (auto& v : relabeled) v = (v + 1) % 3 + 10;
    c.expect(adjusted_rand_index(truth, relabeled) == ari, "ARI changed under relabeling");
    c.expect(normalized_mutual_info(truth, relabeled) == nmi, "NMI changed under relabeling");

    const std::vector<int> a = {0, 0, 1, 1}, b = {0, 1, 0, 1};
    c.near(adjusted_rand_index(a, b), -0.5, 1e-9, "ARI of the crossed partition");
    c.near(adjusted_rand_index(a, b), ari_pairs(a, b), 1e-9, "ARI vs pair counting");
}

// --- 4 ----------------------------------------------------------------------

void loss_and_gradients(Check& c) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    Eigen::MatrixXd logits(16, 4);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = 2 * g(rng);
    std::vector<int> y(16);
    for (auto& v : y) v = static_cast<int>(rng() % 4);
    double plain = 0;
    for (int i = 0; i < 16; ++i) {
        const double m = logits.row(i).maxCoeff();
        plain += m + std::log((logits.row(i).array() - m).exp().sum()) - logits(i, y[i]);
    }
    plain /= 16;
    c.near(weighted_cross_entropy(logits, y, ClassWeights::uniform(LabelSet({ClassLabel::Stress, ClassLabel::Anxiety,
                                                                               ClassLabel::PTSD, ClassLabel::None}))
                                                 .values),
           plain, 1e-6, "uniform-weight loss");

    // Analytic gradients of a 4-class head (encoder with no blocks) against central differences.
    EncoderConfig ec;
    ec.vocab_size = 12;
    ec.dim = 5;
    ec.num_layers = 0;
    ec.max_tokens = 8;
    ec.num_labels = 4;
    TinyEncoderModel model(ec, ModelParams::init(ec, 11));
    Eigen::VectorXd w(4);
    w << 0.6, 1.4, 0.9, 2.0;
    const std::vector<std::vector<int>> inputs = {{2, 3, 4}, {5, 6}, {7, 8, 9, 10, 11}, {3, 3}};
    const std::vector<int> targets = {0, 3, 1, 2};
    auto loss = [&](const ModelParams& p) {
        TinyEncoderModel m(ec, p);
        double s = 0;
        for (std::size_t i = 0; i < inputs.size(); ++i)
            s += weighted_cross_entropy(m.forward(inputs[i]).logits, {targets[i]}, w);
        return s / static_cast<double>(inputs.size());
    };
    ModelParams grads = ModelParams::zeros(ec);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto cache = model.forward(inputs[i]);
        Eigen::MatrixXd d;
        weighted_cross_entropy(cache.logits, {targets[i]}, w, &d);
        model.backward(cache, d.row(0) / static_cast<double>(inputs.size()), &grads);
    }
    const double h = 1e-5;
    double worst = 0;
    for (auto which : {0, 1}) {
        Eigen::MatrixXd& analytic = which == 0 ? grads.head_w : grads.head_b;
        for (Eigen::Index i = 0; i < analytic.size(); ++i) {
            ModelParams plus = model.params(), minus = model.params();
            (which == 0 ? plus.head_w : plus.head_b).data()[i] += h;
            (which == 0 ? minus.head_w : minus.head_b).data()[i] -= h;
            const double fd = (loss(plus) - loss(minus)) / (2 * h);
            const double rel = std::abs(fd - analytic.data()[i]) / std::max(1e-8, std::max(std::abs(fd), std::abs(analytic.data()[i])));
            if (std::abs(fd - analytic.data()[i]) > 1e-9) worst = std::max(worst, rel);
        }
    }
    c.expect(worst <= 1e-4, "head gradient relative error " + std::to_string(worst));
}

// --- 5 ----------------------------------------------------------------------

std::vector<Eigen::VectorXd> trajectory(const Corpus& train, const Corpus& val, std::size_t accumulation,
                                        std::size_t micro) {
    TrainConfig cfg;
    cfg.accumulation_steps = accumulation;
    cfg.micro_batch = micro;
    cfg.epochs_max = 3;
    cfg.dim = 8;
    cfg.ffn_dim = 8;
    cfg.max_sequence_tokens = 24;
    std::vector<Eigen::VectorXd> out;
    FinetuneHooks hooks;
    hooks.max_steps = 10;
    hooks.on_step = [&](std::size_t, const ModelParams& p) { out.push_back(p.flatten()); };
    hooks.val_scorer = [](int, const TinyEncoderModel&) { return 0.0; };
    finetune(train, val, cfg, std::nullopt, hooks);
    return out;
}

void accumulation_equivalence(Check& c) {
    const auto train = fixtures::disjoint_corpus(16, 5);  // 96 posts, a multiple of 8
    const auto val = fixtures::disjoint_corpus(2, 6);
    const auto a = trajectory(train, val, 4, 2);
    const auto b = trajectory(train, val, 1, 8);
    c.expect(a.size() == 10 && b.size() == 10, "expected 10 optimizer steps each");
    for (std::size_t s = 0; s < std::min(a.size(), b.size()); ++s) {
        const double rel = (a[s] - b[s]).cwiseAbs().maxCoeff() / std::max(1e-12, b[s].cwiseAbs().maxCoeff());
        c.expect(rel <= 1e-5, "step " + std::to_string(s + 1) + " relative deviation " + std::to_string(rel));
    }
}

// --- 6 ----------------------------------------------------------------------

void training_smoke(Check& c) {
    const auto train = fixtures::disjoint_corpus(200, 61);
    const auto val = fixtures::disjoint_corpus(30, 62);
    TrainConfig cfg;
    cfg.epochs_max = 3;
    cfg.patience = 2;
    cfg.dim = 16;
    cfg.ffn_dim = 32;
    cfg.num_layers = 2;
    cfg.max_sequence_tokens = 32;
    cfg.micro_batch = 16;
    cfg.learning_rate = 5e-3;
    const auto ckpt = finetune(train, val, cfg);
    c.expect(ckpt.log.size() <= 3, "ran more than 3 epochs");
    double best = 0;
    for (const auto& e : ckpt.log) best = std::max(best, e.val_macro_f1);
    c.expect(best >= 0.9, "best validation macro F1 " + std::to_string(best));
    c.near(macro_f1_on(ckpt, val), ckpt.val_macro_f1, 1e-12, "returned checkpoint is the best epoch");

    // Early stopping under a degrading schedule.
    const auto small = fixtures::disjoint_corpus(6, 63);
    TrainConfig es;
    es.epochs_max = 10;
    es.patience = 2;
    es.dim = 4;
    es.ffn_dim = 4;
    es.max_sequence_tokens = 16;
    FinetuneHooks hooks;
    hooks.val_scorer = [](int epoch, const TinyEncoderModel&) { return 0.9 - 0.1 * epoch; };
    const auto stopped = finetune(small, small, es, std::nullopt, hooks);
    c.expect(stopped.log.size() == static_cast<std::size_t>(1 + es.patience),
             "early stopping ran " + std::to_string(stopped.log.size()) + " epochs");
    c.expect(stopped.epoch == 0, "best epoch should be 0");
}

// --- 7 ----------------------------------------------------------------------

void integrated_gradient_checks(Check& c) {
    Eigen::MatrixXd w(3, 4);
    w << 0.5, -1, 2, 0, 1, 1, -3, 0.25, 0, 2, 1, -1;
    DifferentiableFn linear = [&](const Eigen::MatrixXd& x, Eigen::MatrixXd* g) {
        if (g) *g = w;
        return w.cwiseProduct(x).sum() + 0.7;
    };
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4), b = Eigen::MatrixXd::Random(3, 4);
    const auto ig = integrated_gradients(linear, x, b, 8);
    c.expect((ig - w.cwiseProduct(x - b)).cwiseAbs().maxCoeff() <= 1e-6, "linear attribution not exact");
    c.near(ig.sum(), linear(x, nullptr) - linear(b, nullptr), 1e-6, "linear completeness");

    EncoderConfig ec;
    ec.vocab_size = 20;
    ec.dim = 16;
    ec.ffn_dim = 32;
    ec.num_layers = 2;
    ec.max_tokens = 32;
    ec.num_labels = 6;
    TinyEncoderModel model(ec, ModelParams::init(ec, 17));
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<int> ids(6 + rng() % 10);
        for (auto& v : ids) v = 2 + static_cast<int>(rng() % 18);
        const auto a = integrated_gradients(model, ids, std::vector<std::string>(ids.size(), "t"), trial % 6, 128);
        c.expect(a.completeness_gap <= 0.01 * std::abs(a.prediction_delta),
                 "completeness gap " + std::to_string(a.completeness_gap) + " vs delta " +
                     std::to_string(a.prediction_delta));
    }
    const std::vector<int> pads(5, Vocabulary::kPad);
    const auto z = integrated_gradients(model, pads, std::vector<std::string>(5, "[PAD]"), 0, 32, IgBaseline::Pad);
    for (double s : z.scores) c.expect(s == 0.0, "non-zero score with baseline == input");
}

// --- 8 ----------------------------------------------------------------------

void prompt_harness(Check& c) {
    std::mt19937_64 rng(8);
    const std::vector<std::string> words = {"I", "can't", " - ", "sleep", "-", "work", "is", "a", "-- mess", "ok"};
    std::size_t lossy = 0;
    for (int b = 0; b < 100; ++b) {
        std::vector<PromptItem> items;
        std::vector<std::string> labels;
        std::string response;
        for (int i = 0; i < 5; ++i) {
            std::string text;
            for (std::size_t k = 0, n = 1 + rng() % 15; k < n; ++k) text += (k ? " " : "") + words[rng() % words.size()];
            if (b % 3 == 0 && i == 0) text += " - tail";
            const std::string label = rng() % 7 == 0 ? "Unknown" : std::string(to_string(kAllLabels[rng() % 6]));
            items.push_back({"post_" + std::to_string(b) + "_" + std::to_string(i), text});
            labels.push_back(label);
            response += format_schema_line(items.back().id, label, text) + "\n";
        }
        const auto parsed = parse_response(response, items, LabelSet::all());
        lossy += !parsed.diagnostics.empty();
        for (std::size_t i = 0; i < items.size(); ++i) {
            std::istringstream ws(items[i].text);
            std::string t, flat;
            while (ws >> t) flat += (flat.empty() ? "" : " ") + t;
            lossy += parsed.predictions[i].id != items[i].id || parsed.predictions[i].label_name() != labels[i] ||
                     parsed.predictions[i].echoed_text != flat;
        }
    }
    c.expect(lossy == 0, std::to_string(lossy) + " lossy round trips");

    stubs::LabelingClient answer([](const std::string&) { return "None"; });
    stubs::FailingClient rejecting({LlmApiError(400, stubs::kTemperatureRejected)}, &answer);
    GenerationParams params;
    params.backoff_base = std::chrono::milliseconds(1);
    const auto call = call_llm(rejecting, build_prompt(PromptSpec::zero_shot(LabelSet::all()), {{"p1", "text"}}), params,
                               [](std::chrono::milliseconds) {});
    std::size_t downgrades = 0;
    for (const auto& l : call.log) downgrades += l.rfind("parameter downgraded", 0) == 0;
    c.expect(call.ok, "call did not succeed after the downgrade");
    c.expect(call.attempts == 2 && downgrades == 1, "expected exactly one downgraded retry");
    c.expect(rejecting.requests.size() == 2 && !rejecting.requests[1].temperature,
             "retry still carried the temperature");

    const auto test = fixtures::disjoint_corpus(7, 9);
    stubs::LabelingClient unknown([](const std::string&) { return "Unknown"; });
    const auto run = run_prompting(test, PromptSpec::zero_shot(LabelSet::all()), params, unknown, {},
                                   [](std::chrono::milliseconds) {});
    c.expect(run.metrics.macro.f1 == 0.0, "all-Unknown macro F1 is not 0");
    c.expect(run.metrics.unknown_count == static_cast<std::int64_t>(test.size()), "unknown_count != n");
}

// --- 9 ----------------------------------------------------------------------

void chance_floor(Check& c) {
    const auto m = random_baseline(LabelSet::all(), 60000, 42);
    c.near(m.accuracy, 0.167, 0.01, "random six-class accuracy");
}

// --- 10 ---------------------------------------------------------------------

void curation_rules(Check& c) {
    auto words = [](std::size_t n, const std::string& tag) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + tag + std::to_string(i);
        return s;
    };
    const auto kept = curate({Post::make("nine", words(9, "a"), ClassLabel::Stress, "t"),
                              Post::make("ten", words(10, "b"), ClassLabel::Stress, "t"),
                              Post::make("four-hundred", words(400, "c"), ClassLabel::Stress, "t")});
    c.expect(kept.ids() == std::vector<std::string>{"ten", "four-hundred"}, "word bounds not applied as specified");

    std::mt19937_64 rng(10);
    std::vector<Post> fuzz;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = rng() % 40;
        std::string text = words(n, std::to_string(rng() % 4));
        if (rng() % 5 == 0) text = "  " + text + "\n";
        fuzz.push_back(Post::make("f" + std::to_string(i), text, kAllLabels[rng() % 6], "fuzz"));
    }
    const auto once = curate(fuzz);
    const auto twice = curate(once.posts);
    c.expect(once.posts == twice.posts, "curate is not idempotent");
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "metrics from the published confusion matrices", 1, metrics_vs_table},
        {2, "Suicidal error-bucket counts", 1, bucket_counts},
        {3, "clustering metric suite", 10, clustering_suite},
        {4, "loss and gradient checks", 30, loss_and_gradients},
        {5, "gradient accumulation equivalence", 60, accumulation_equivalence},
        {6, "end-to-end training smoke and early stopping", 600, training_smoke},
        {7, "integrated gradients checks", 60, integrated_gradient_checks},
        {8, "prompt harness round trip, downgrade retry, all-Unknown scoring", 30, prompt_harness},
        {9, "chance floor", 5, chance_floor},
        {10, "curation rules", 5, curation_rules},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.body(check);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > cr.budget_seconds)
            check.failures.push_back("runtime " + fmt_seconds(secs) + " exceeds " + fmt_seconds(cr.budget_seconds));
        const bool ok = check.failures.empty();
        failed += !ok;
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << std::setw(2) << cr.id << "  " << cr.name << " ("
                  << fmt_seconds(secs) << ")\n";
        for (const auto& f : check.failures) std::cout << "         - " << f << "\n";
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " acceptance criteria passed\n";
    return failed == 0 ? 0 : 1;
}

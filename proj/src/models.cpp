#include "mhc/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mhc/evaluate.hpp"
#include "mhc/random.hpp"

namespace mhc {

// ---------------------------------------------------------------------------
// Weights and loss

ClassWeights ClassWeights::uniform(const LabelSet& labels) {
    return {labels, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(labels.size()))};
}

nlohmann::json ClassWeights::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < labels.size(); ++i) j[std::string(to_string(labels[i]))] = values[static_cast<Eigen::Index>(i)];
    return j;
}

ClassWeights compute_class_weights(const std::vector<ClassLabel>& train_labels, const LabelSet& active) {
    if (active.empty()) throw ValidationError("class weights need at least one active class");
    std::vector<std::size_t> counts(active.size(), 0);
    std::size_t n = 0;
    for (auto l : train_labels) {
        if (auto i = active.find(l)) {
            ++counts[*i];
            ++n;
        }
    }
    ClassWeights w;
    w.labels = active;
    w.values.resize(static_cast<Eigen::Index>(active.size()));
    const double c = static_cast<double>(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (counts[i] == 0)
            throw ValidationError("class '" + std::string(to_string(active[i])) + "' has no training samples");
        w.values[static_cast<Eigen::Index>(i)] = static_cast<double>(n) / (c * static_cast<double>(counts[i]));
    }
    return w;
}

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::RowVectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

double weighted_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& targets,
                              const Eigen::VectorXd& weights, Eigen::MatrixXd* dlogits) {
    const auto n = logits.rows();
    if (static_cast<std::size_t>(n) != targets.size()) throw ValidationError("logits and targets differ in length");
    if (n == 0) throw ValidationError("cross-entropy of an empty batch");
    if (weights.size() != logits.cols()) throw ValidationError("class weight count does not match logit width");
    if (!logits.allFinite()) throw ValidationError("non-finite logits");
    if (dlogits) *dlogits = Eigen::MatrixXd::Zero(n, logits.cols());

    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = targets[static_cast<std::size_t>(i)];
        if (y < 0 || y >= logits.cols()) throw ValidationError("target index out of range");
        const Eigen::RowVectorXd row = logits.row(i);
        const double m = row.maxCoeff();
        const double lse = m + std::log((row.array() - m).exp().sum());
        const double w = weights[y];
        total += w * (lse - row[y]);
        if (dlogits) {
            Eigen::RowVectorXd p = (row.array() - lse).exp();
            p[y] -= 1.0;
            dlogits->row(i) = w * p / static_cast<double>(n);
        }
    }
    return total / static_cast<double>(n);
}

double weighted_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& targets,
                              const Eigen::VectorXd& weights) {
    return weighted_cross_entropy(logits, targets, weights, nullptr);
}

// ---------------------------------------------------------------------------

std::size_t PredictionSet::argmax(const Eigen::RowVectorXd& row) {
    std::size_t best = 0;
    for (Eigen::Index j = 1; j < row.size(); ++j)
        if (row[j] > row[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(j);
    return best;
}

void PredictionSet::write_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        nlohmann::json probs = nlohmann::json::object();
        for (std::size_t c = 0; c < label_order.size(); ++c)
            probs[std::string(to_string(label_order[c]))] = probabilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        out << nlohmann::json{{"id", ids[i]}, {"predicted", std::string(to_string(predicted[i]))}, {"probabilities", probs}}.dump()
            << '\n';
    }
}

// ---------------------------------------------------------------------------
// Linear baselines

LinearClassifier::LinearClassifier(LinearKind kind, LabelSet labels, Eigen::MatrixXd weights, Eigen::RowVectorXd bias)
    : kind_(kind), labels_(std::move(labels)), weights_(std::move(weights)), bias_(std::move(bias)) {}

Eigen::MatrixXd LinearClassifier::decision_function(const Eigen::MatrixXd& x) const {
    if (x.cols() != weights_.rows()) throw ValidationError("feature dimension does not match the classifier");
    return (x * weights_).rowwise() + bias_;
}

PredictionSet LinearClassifier::predict(const EmbeddingMatrix& emb) const {
    const Eigen::MatrixXd scores = decision_function(emb.rows());
    PredictionSet out;
    out.label_order = labels_;
    out.ids = emb.ids();
    out.probabilities.resize(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        out.probabilities.row(i) = softmax(scores.row(i));
        out.predicted.push_back(labels_[PredictionSet::argmax(scores.row(i))]);
    }
    return out;
}

nlohmann::json LinearClassifier::to_json() const {
    std::vector<std::vector<double>> w(static_cast<std::size_t>(weights_.rows()));
    for (Eigen::Index i = 0; i < weights_.rows(); ++i)
        for (Eigen::Index j = 0; j < weights_.cols(); ++j) w[static_cast<std::size_t>(i)].push_back(weights_(i, j));
    std::vector<double> b(bias_.data(), bias_.data() + bias_.size());
    return {{"kind", kind_ == LinearKind::LogisticRegression ? "logistic_regression" : "linear_svm"},
            {"label_order", labels_.names()},
            {"weights", w},
            {"bias", b}};
}

LinearClassifier LinearClassifier::from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>() == "linear_svm" ? LinearKind::LinearSvm : LinearKind::LogisticRegression;
    const auto w = j.at("weights").get<std::vector<std::vector<double>>>();
    const auto b = j.at("bias").get<std::vector<double>>();
    Eigen::MatrixXd weights(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t c = 0; c < b.size(); ++c) weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = w[i].at(c);
    Eigen::RowVectorXd bias = Eigen::Map<const Eigen::RowVectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    return LinearClassifier(kind, LabelSet::from_names(j.at("label_order").get<std::vector<std::string>>()), weights, bias);
}

LinearClassifier train_linear(const EmbeddingMatrix& emb, const std::vector<ClassLabel>& labels, LinearKind kind,
                              std::uint64_t seed, const LinearOptions& options) {
    if (labels.size() != emb.size()) throw ValidationError("labels do not align with embeddings");
    std::set<ClassLabel> present(labels.begin(), labels.end());
    if (present.size() < 2) throw ValidationError("linear classifier needs at least 2 classes");
    LabelSet order(std::vector<ClassLabel>(present.begin(), present.end()));

    const Eigen::MatrixXd& x = emb.rows();
    const auto n = x.rows(), d = x.cols(), c = static_cast<Eigen::Index>(order.size());
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = static_cast<int>(order.index_of(labels[i]));

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, c);
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(c);
    Eigen::MatrixXd mw = w, vw = w;
    Eigen::RowVectorXd mb = b, vb = b;
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::size_t t = 0;

    Rng rng(seed);
    std::vector<Eigen::Index> order_idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order_idx[static_cast<std::size_t>(i)] = i;
    const std::size_t bs = std::max<std::size_t>(1, options.batch_size);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order_idx);
        for (std::size_t start = 0; start < order_idx.size(); start += bs) {
            const std::size_t end = std::min(order_idx.size(), start + bs);
            const auto m = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd xb(m, d);
            for (Eigen::Index r = 0; r < m; ++r) xb.row(r) = x.row(order_idx[start + static_cast<std::size_t>(r)]);
            const Eigen::MatrixXd scores = (xb * w).rowwise() + b;
            Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(m, c);
            for (Eigen::Index r = 0; r < m; ++r) {
                const int yi = y[static_cast<std::size_t>(order_idx[start + static_cast<std::size_t>(r)])];
                if (kind == LinearKind::LogisticRegression) {
                    ds.row(r) = softmax(scores.row(r));
                    ds(r, yi) -= 1.0;
                } else {
                    for (Eigen::Index k = 0; k < c; ++k) {
                        const double sign = k == yi ? 1.0 : -1.0;
                        const double slack = 1.0 - sign * scores(r, k);
                        if (slack > 0.0) ds(r, k) = -2.0 * sign * slack;
                    }
                }
            }
            ds /= static_cast<double>(m);
            const Eigen::MatrixXd gw = xb.transpose() * ds + options.l2 * w;
            const Eigen::RowVectorXd gb = ds.colwise().sum();

            ++t;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
            mw = beta1 * mw + (1 - beta1) * gw;
            vw = beta2 * vw + (1 - beta2) * gw.cwiseProduct(gw);
            mb = beta1 * mb + (1 - beta1) * gb;
            vb = beta2 * vb + (1 - beta2) * gb.cwiseProduct(gb);
            w.array() -= options.learning_rate * (mw.array() / c1) / ((vw.array() / c2).sqrt() + eps);
            b.array() -= options.learning_rate * (mb.array() / c1) / ((vb.array() / c2).sqrt() + eps);
        }
    }
    return LinearClassifier(kind, order, w, b);
}

// ---------------------------------------------------------------------------
// Training configuration

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive", "finetune.learning_rate");
    if (epochs_max < 1) throw ValidationError("epochs_max must be >= 1", "finetune.epochs_max");
    if (patience < 0 || patience >= epochs_max) throw ValidationError("patience must be < epochs_max", "finetune.patience");
    if (accumulation_steps < 1) throw ValidationError("accumulation_steps must be >= 1", "finetune.accumulation_steps");
    if (micro_batch < 1) throw ValidationError("micro_batch must be >= 1", "finetune.micro_batch");
    if (max_sequence_tokens < 1) throw ValidationError("max_sequence_tokens must be >= 1", "finetune.max_sequence_tokens");
    if (dim < 1 || ffn_dim < 1) throw ValidationError("encoder dimensions must be positive", "finetune.dim");
    if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) throw ValidationError("warmup_ratio must lie in [0, 1)", "finetune.warmup_ratio");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"max_sequence_tokens", max_sequence_tokens},
            {"learning_rate", learning_rate},
            {"weight_decay", weight_decay},
            {"warmup_ratio", warmup_ratio},
            {"adam_beta1", adam_beta1},
            {"adam_beta2", adam_beta2},
            {"adam_eps", adam_eps},
            {"epochs_max", epochs_max},
            {"patience", patience},
            {"min_delta", min_delta},
            {"accumulation_steps", accumulation_steps},
            {"micro_batch", micro_batch},
            {"seed", seed},
            {"use_class_weights", use_class_weights},
            {"selection_metric", "val_macro_f1"},
            {"dim", dim},
            {"ffn_dim", ffn_dim},
            {"num_layers", num_layers},
            {"vocab_max", vocab_max}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    auto get = [&j](const char* key, auto& field) {
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(field);
        } catch (const nlohmann::json::exception&) {
            throw ValidationError(std::string("invalid value for ") + key, std::string("finetune.") + key);
        }
    };
    get("max_sequence_tokens", c.max_sequence_tokens);
    get("learning_rate", c.learning_rate);
    get("weight_decay", c.weight_decay);
    get("warmup_ratio", c.warmup_ratio);
    get("adam_beta1", c.adam_beta1);
    get("adam_beta2", c.adam_beta2);
    get("adam_eps", c.adam_eps);
    get("epochs_max", c.epochs_max);
    get("patience", c.patience);
    get("min_delta", c.min_delta);
    get("accumulation_steps", c.accumulation_steps);
    get("micro_batch", c.micro_batch);
    get("seed", c.seed);
    get("use_class_weights", c.use_class_weights);
    get("dim", c.dim);
    get("ffn_dim", c.ffn_dim);
    get("num_layers", c.num_layers);
    get("vocab_max", c.vocab_max);
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Optimizer

AdamW::AdamW(const TrainConfig& config, const ModelParams& shape, std::size_t total_steps)
    : config_(config), m_(shape), v_(shape), total_steps_(std::max<std::size_t>(1, total_steps)) {
    m_.set_zero();
    v_.set_zero();
    warmup_steps_ = static_cast<std::size_t>(std::ceil(config.warmup_ratio * static_cast<double>(total_steps_)));
}

double AdamW::learning_rate_at(std::size_t step) const {
    const double lr = config_.learning_rate;
    if (warmup_steps_ > 0 && step <= warmup_steps_)
        return lr * static_cast<double>(step) / static_cast<double>(warmup_steps_);
    // linear decay: full rate right after warmup, lr / (T - W) on the final step
    const double span = static_cast<double>(std::max<std::size_t>(1, total_steps_ - warmup_steps_));
    const double remaining = static_cast<double>(total_steps_ > step ? total_steps_ - step + 1 : 1);
    return lr * std::min(1.0, remaining / span);
}

double AdamW::step(ModelParams& params, const ModelParams& grads) {
    ++t_;
    const double lr = learning_rate_at(t_);
    const double b1 = config_.adam_beta1, b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));

    std::vector<Eigen::MatrixXd*> ps, ms, vs;
    std::vector<const Eigen::MatrixXd*> gs;
    std::vector<bool> bias;
    params.visit([&](const std::string&, Eigen::MatrixXd& m, bool is_bias) {
        ps.push_back(&m);
        bias.push_back(is_bias);
    });
    m_.visit([&](const std::string&, Eigen::MatrixXd& m, bool) { ms.push_back(&m); });
    v_.visit([&](const std::string&, Eigen::MatrixXd& m, bool) { vs.push_back(&m); });
    grads.visit([&](const std::string&, const Eigen::MatrixXd& m, bool) { gs.push_back(&m); });

    for (std::size_t i = 0; i < ps.size(); ++i) {
        auto& p = *ps[i];
        auto& m = *ms[i];
        auto& v = *vs[i];
        const auto& g = *gs[i];
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        if (!bias[i] && config_.weight_decay > 0.0) p *= (1.0 - lr * config_.weight_decay);
        p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.adam_eps);
    }
    return lr;
}

// ---------------------------------------------------------------------------
// Fine-tuning

namespace {

struct Example {
    std::vector<int> ids;
    int target = 0;
};

std::vector<ClassLabel> predict_labels(const TinyEncoderModel& model, const Vocabulary& vocab, const LabelSet& order,
                                       const std::vector<std::string>& texts, std::size_t max_tokens,
                                       std::vector<bool>* valid) {
    std::vector<ClassLabel> out;
    for (const auto& t : texts) {
        const auto ids = vocab.encode(t, max_tokens);
        if (ids.empty()) {
            if (valid) valid->push_back(false);
            out.push_back(order[0]);
            continue;
        }
        if (valid) valid->push_back(true);
        out.push_back(order[PredictionSet::argmax(model.forward(ids).logits)]);
    }
    return out;
}

double macro_f1_of(const TinyEncoderModel& model, const Vocabulary& vocab, const LabelSet& order, const Corpus& corpus,
                   std::size_t max_tokens) {
    std::vector<bool> valid;
    const auto pred = predict_labels(model, vocab, order, corpus.texts(), max_tokens, &valid);
    std::vector<ClassLabel> t, p;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!valid[i]) continue;
        t.push_back(corpus.posts[i].label);
        p.push_back(pred[i]);
    }
    if (t.empty()) return 0.0;
    return metrics_from_confusion(confusion_matrix(t, p, order)).macro.f1;
}

}  // namespace

Checkpoint finetune(const Corpus& train, const Corpus& val, const TrainConfig& config,
                    const std::optional<ClassWeights>& weights, const FinetuneHooks& hooks) {
    config.validate();
    if (val.empty()) throw ValidationError("validation split required", "val");
    if (train.empty()) throw ValidationError("training split is empty", "train");

    const LabelSet order = train.label_set();
    if (order.size() < 2) throw ValidationError("fine-tuning needs at least 2 classes in the training split");
    for (const auto& p : val.posts)
        if (!order.contains(p.label))
            throw ValidationError("validation label '" + std::string(to_string(p.label)) + "' absent from training split");

    ClassWeights cw = weights ? *weights
                              : (config.use_class_weights ? compute_class_weights(train.labels(), order)
                                                          : ClassWeights::uniform(order));
    if (cw.labels != order) throw ValidationError("class weights do not cover the training label set");

    Checkpoint ckpt;
    ckpt.vocab = Vocabulary::build(train.texts(), config.vocab_max);
    ckpt.label_order = order;
    ckpt.config = config;
    ckpt.weights = cw;

    EncoderConfig ec;
    ec.vocab_size = ckpt.vocab.size();
    ec.dim = config.dim;
    ec.ffn_dim = config.ffn_dim;
    ec.num_layers = config.num_layers;
    ec.max_tokens = config.max_sequence_tokens;
    ec.num_labels = order.size();
    TinyEncoderModel model(ec, ModelParams::init(ec, config.seed));

    std::vector<Example> examples;
    for (const auto& p : train.posts) {
        auto ids = ckpt.vocab.encode(p.text, config.max_sequence_tokens);
        if (ids.empty()) continue;
        examples.push_back({std::move(ids), static_cast<int>(order.index_of(p.label))});
    }
    if (examples.empty()) throw ValidationError("no training post produced any tokens");

    const std::size_t micro_per_epoch = (examples.size() + config.micro_batch - 1) / config.micro_batch;
    const std::size_t steps_per_epoch = (micro_per_epoch + config.accumulation_steps - 1) / config.accumulation_steps;
    AdamW optimizer(config, model.params(), steps_per_epoch * static_cast<std::size_t>(config.epochs_max));

    ModelParams grads = ModelParams::zeros(ec), micro_grads = ModelParams::zeros(ec);
    Rng rng(config.seed ^ 0x5eedULL);
    std::vector<std::size_t> order_idx(examples.size());
    for (std::size_t i = 0; i < order_idx.size(); ++i) order_idx[i] = i;

    double best = -1.0;
    int since_best = 0;
    bool stop = false;
    ModelParams best_params = model.params();

    for (int epoch = 0; epoch < config.epochs_max && !stop; ++epoch) {
        rng.shuffle(order_idx);
        double loss_sum = 0.0;
        std::size_t loss_n = 0, pending = 0;
        grads.set_zero();

        auto apply_step = [&] {
            if (pending == 0) return;
            const double inv = 1.0 / static_cast<double>(pending);
            grads.visit([inv](const std::string&, Eigen::MatrixXd& m, bool) { m *= inv; });
            optimizer.step(model.params(), grads);
            grads.set_zero();
            pending = 0;
            if (hooks.on_step) hooks.on_step(optimizer.steps_taken(), model.params());
            if (hooks.max_steps > 0 && optimizer.steps_taken() >= hooks.max_steps) stop = true;
        };

        for (std::size_t start = 0; start < order_idx.size() && !stop; start += config.micro_batch) {
            const std::size_t end = std::min(order_idx.size(), start + config.micro_batch);
            const double inv_m = 1.0 / static_cast<double>(end - start);
            micro_grads.set_zero();
            double micro_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const auto& ex = examples[order_idx[k]];
                const auto cache = model.forward(ex.ids);
                Eigen::MatrixXd dlogits;
                const double loss = weighted_cross_entropy(cache.logits, {ex.target}, cw.values, &dlogits);
                if (!std::isfinite(loss))
                    throw Error("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                std::to_string(optimizer.steps_taken()) + " (example " + std::to_string(order_idx[k]) +
                                "); lower the learning rate");
                micro_loss += loss;
                model.backward(cache, dlogits.row(0) * inv_m, &micro_grads);
            }
            // Sum of per-micro-batch mean gradients; averaged over `pending` at the step.
            {
                std::vector<Eigen::MatrixXd*> dst;
                grads.visit([&dst](const std::string&, Eigen::MatrixXd& m, bool) { dst.push_back(&m); });
                std::size_t i = 0;
                micro_grads.visit([&dst, &i](const std::string&, const Eigen::MatrixXd& m, bool) { *dst[i++] += m; });
            }
            loss_sum += micro_loss;
            loss_n += end - start;
            if (++pending == config.accumulation_steps) apply_step();
        }
        apply_step();

        const double score = hooks.val_scorer ? hooks.val_scorer(epoch, model)
                                              : macro_f1_of(model, ckpt.vocab, order, val, config.max_sequence_tokens);
        ckpt.log.push_back({epoch, loss_n ? loss_sum / static_cast<double>(loss_n) : 0.0, score});

        if (score > best + config.min_delta) {
            best = score;
            since_best = 0;
            best_params = model.params();
            ckpt.epoch = epoch;
            ckpt.val_macro_f1 = score;
        } else if (++since_best >= config.patience) {
            stop = true;
        }
    }

    ckpt.model = TinyEncoderModel(ec, std::move(best_params));
    return ckpt;
}

PredictionSet predict(const Checkpoint& checkpoint, const std::vector<std::string>& texts,
                      const std::vector<std::string>& ids) {
    if (!ids.empty() && ids.size() != texts.size()) throw ValidationError("ids and texts differ in length");
    PredictionSet out;
    out.label_order = checkpoint.label_order;
    std::vector<Eigen::RowVectorXd> rows;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::string id = ids.empty() ? std::to_string(i) : ids[i];
        const auto tok = checkpoint.vocab.encode(texts[i], checkpoint.config.max_sequence_tokens);
        if (tok.empty()) {
            out.errors.push_back({std::move(id), "text produced no tokens"});
            continue;
        }
        const auto logits = checkpoint.model.forward(tok).logits;
        out.predicted.push_back(checkpoint.label_order[PredictionSet::argmax(logits)]);
        rows.push_back(softmax(logits));
        out.ids.push_back(std::move(id));
    }
    out.probabilities.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(checkpoint.label_order.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out.probabilities.row(static_cast<Eigen::Index>(i)) = rows[i];
    return out;
}

double macro_f1_on(const Checkpoint& checkpoint, const Corpus& corpus) {
    return macro_f1_of(checkpoint.model, checkpoint.vocab, checkpoint.label_order, corpus,
                       checkpoint.config.max_sequence_tokens);
}

CheckpointEncoder::CheckpointEncoder(const Checkpoint& checkpoint, std::string name)
    : checkpoint_(checkpoint), name_(std::move(name)) {}

Eigen::VectorXd CheckpointEncoder::embed(std::string_view text) const {
    const auto ids = checkpoint_.vocab.encode(text, checkpoint_.config.max_sequence_tokens);
    if (ids.empty()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
    return checkpoint_.model.forward(ids).pooled.transpose();
}

// ---------------------------------------------------------------------------
// Checkpoint persistence

namespace {
constexpr char kCkptMagic[8] = {'M', 'H', 'C', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError("truncated checkpoint");
    return v;
}
}  // namespace

void Checkpoint::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "model.bin", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "model.bin").string());
        out.write(kCkptMagic, sizeof kCkptMagic);
        model.params().visit([&out](const std::string& name, const Eigen::MatrixXd& m, bool) {
            write_pod(out, static_cast<std::uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_pod(out, static_cast<std::uint64_t>(m.rows()));
            write_pod(out, static_cast<std::uint64_t>(m.cols()));
            out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
        });
        if (!out) throw IoError("failed writing checkpoint weights");
    }
    vocab.save(dir / "vocab.txt");
    {
        nlohmann::json j = {{"encoder", model.config().to_json()},
                            {"train", config.to_json()},
                            {"label_order", label_order.names()},
                            {"class_weights", weights.to_json()},
                            {"epoch", epoch},
                            {"val_macro_f1", val_macro_f1},
                            {"nondeterministic", false}};
        std::ofstream out(dir / "config.json");
        out << j.dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "training_log.csv");
        out << "epoch,train_loss,val_macro_f1\n" << std::setprecision(10);
        for (const auto& e : log) out << e.epoch << ',' << e.train_loss << ',' << e.val_macro_f1 << '\n';
    }
}

Checkpoint Checkpoint::load(const std::filesystem::path& dir) {
    std::ifstream cfg_in(dir / "config.json");
    if (!cfg_in) throw IoError("checkpoint config missing in " + dir.string());
    const auto j = nlohmann::json::parse(cfg_in);

    Checkpoint c;
    c.config = TrainConfig::from_json(j.at("train"));
    c.label_order = LabelSet::from_names(j.at("label_order").get<std::vector<std::string>>());
    c.epoch = j.at("epoch").get<int>();
    c.val_macro_f1 = j.at("val_macro_f1").get<double>();
    c.weights.labels = c.label_order;
    c.weights.values.resize(static_cast<Eigen::Index>(c.label_order.size()));
    for (std::size_t i = 0; i < c.label_order.size(); ++i)
        c.weights.values[static_cast<Eigen::Index>(i)] = j.at("class_weights").at(std::string(to_string(c.label_order[i]))).get<double>();
    c.vocab = Vocabulary::load(dir / "vocab.txt");

    const auto ec = EncoderConfig::from_json(j.at("encoder"));
    ModelParams params = ModelParams::zeros(ec);
    std::ifstream in(dir / "model.bin", std::ios::binary);
    if (!in) throw IoError("checkpoint weights missing in " + dir.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCkptMagic, sizeof magic) != 0) throw IoError("not a checkpoint weight file");
    params.visit([&in](const std::string& name, Eigen::MatrixXd& m, bool) {
        const auto len = read_pod<std::uint32_t>(in);
        std::string stored(len, '\0');
        in.read(stored.data(), len);
        const auto rows = read_pod<std::uint64_t>(in);
        const auto cols = read_pod<std::uint64_t>(in);
        if (stored != name || rows != static_cast<std::uint64_t>(m.rows()) || cols != static_cast<std::uint64_t>(m.cols()))
            throw IoError("checkpoint tensor '" + stored + "' does not match expected '" + name + "'");
        in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!in) throw IoError("truncated checkpoint tensor '" + name + "'");
    });
    c.model = TinyEncoderModel(ec, std::move(params));

    std::ifstream log_in(dir / "training_log.csv");
    std::string line;
    std::getline(log_in, line);
    while (std::getline(log_in, line)) {
        std::stringstream ss(line);
        EpochLog e;
        char comma;
        if (ss >> e.epoch >> comma >> e.train_loss >> comma >> e.val_macro_f1) c.log.push_back(e);
    }
    return c;
}

}  // namespace mhc

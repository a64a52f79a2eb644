#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mhc/corpus.hpp"
#include "mhc/embedding.hpp"
#include "mhc/labels.hpp"
#include "mhc/tiny_encoder.hpp"

namespace mhc {

// ---------------------------------------------------------------------------
// Class weighting and loss

struct ClassWeights {
    LabelSet labels;
    Eigen::VectorXd values;  // aligned with labels

    double of(ClassLabel label) const { return values[static_cast<Eigen::Index>(labels.index_of(label))]; }
    static ClassWeights uniform(const LabelSet& labels);
    nlohmann::json to_json() const;
};

/// Balanced inverse frequency: w_c = N / (C * n_c). Every class in `active` needs a sample.
ClassWeights compute_class_weights(const std::vector<ClassLabel>& train_labels, const LabelSet& active);

/// Mean over samples of w[y] * -log softmax(logits)[y]. `targets` index columns of `logits`.
double weighted_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& targets,
                              const Eigen::VectorXd& weights);

/// Same loss plus its gradient with respect to the logits.
double weighted_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& targets,
                              const Eigen::VectorXd& weights, Eigen::MatrixXd* dlogits);

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& logits);

// ---------------------------------------------------------------------------
// Predictions

struct PredictionSet {
    LabelSet label_order;
    std::vector<std::string> ids;
    std::vector<ClassLabel> predicted;
    Eigen::MatrixXd probabilities;  // n x C, rows sum to 1
    std::vector<EncodeError> errors;  // inputs that produced no row

    /// argmax per row, ties to the lowest index.
    static std::size_t argmax(const Eigen::RowVectorXd& row);
    void write_jsonl(const std::filesystem::path& path) const;
};

// ---------------------------------------------------------------------------
// Linear baselines on frozen embeddings

enum class LinearKind { LogisticRegression, LinearSvm };

struct LinearOptions {
    double l2 = 1e-4;
    double learning_rate = 0.05;
    int epochs = 200;
    std::size_t batch_size = 64;
};

class LinearClassifier {
public:
    LinearClassifier() = default;
    LinearClassifier(LinearKind kind, LabelSet labels, Eigen::MatrixXd weights, Eigen::RowVectorXd bias);

    LinearKind kind() const { return kind_; }
    const LabelSet& label_order() const { return labels_; }
    const Eigen::MatrixXd& weights() const { return weights_; }
    const Eigen::RowVectorXd& bias() const { return bias_; }

    Eigen::MatrixXd decision_function(const Eigen::MatrixXd& x) const;
    /// Logistic regression: softmax of scores. SVM: softmax over the one-vs-rest margins.
    PredictionSet predict(const EmbeddingMatrix& emb) const;

    nlohmann::json to_json() const;
    static LinearClassifier from_json(const nlohmann::json& j);

private:
    LinearKind kind_ = LinearKind::LogisticRegression;
    LabelSet labels_;
    Eigen::MatrixXd weights_;  // d x C
    Eigen::RowVectorXd bias_;
};

/// Multinomial logistic regression or one-vs-rest squared-hinge SVM, trained with seeded
/// mini-batch Adam under an L2 penalty.
LinearClassifier train_linear(const EmbeddingMatrix& emb, const std::vector<ClassLabel>& labels, LinearKind kind,
                              std::uint64_t seed, const LinearOptions& options = {});

// ---------------------------------------------------------------------------
// Fine-tuning

struct TrainConfig {
    std::size_t max_sequence_tokens = 512;
    double learning_rate = 2e-3;
    double weight_decay = 0.01;
    double warmup_ratio = 0.1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs_max = 10;
    int patience = 2;
    double min_delta = 1e-4;
    std::size_t accumulation_steps = 1;
    std::size_t micro_batch = 8;
    std::uint64_t seed = 13;
    bool use_class_weights = true;
    // encoder shape
    std::size_t dim = 16;
    std::size_t ffn_dim = 32;
    std::size_t num_layers = 2;
    std::size_t vocab_max = 30000;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_macro_f1 = 0.0;
};

struct Checkpoint {
    TinyEncoderModel model;
    Vocabulary vocab;
    LabelSet label_order;
    TrainConfig config;
    ClassWeights weights;
    int epoch = -1;
    double val_macro_f1 = 0.0;
    std::vector<EpochLog> log;

    /// Directory layout: model.bin, vocab.txt, config.json, training_log.csv.
    void save(const std::filesystem::path& dir) const;
    static Checkpoint load(const std::filesystem::path& dir);
};

/// Decoupled weight decay Adam with linear warmup then linear decay to zero.
class AdamW {
public:
    AdamW(const TrainConfig& config, const ModelParams& shape, std::size_t total_steps);
    /// Applies one update from `grads` (already averaged). Returns the learning rate used.
    double step(ModelParams& params, const ModelParams& grads);
    std::size_t steps_taken() const { return t_; }
    double learning_rate_at(std::size_t step) const;

private:
    TrainConfig config_;
    ModelParams m_, v_;
    std::size_t t_ = 0;
    std::size_t total_steps_ = 1;
    std::size_t warmup_steps_ = 0;
};

/// Optional hooks for tests and diagnostics.
struct FinetuneHooks {
    /// Replaces the validation macro-F1 computation; receives the epoch index and the model.
    std::function<double(int epoch, const TinyEncoderModel& model)> val_scorer;
    /// Called after every optimizer step with the step count and the updated parameters.
    std::function<void(std::size_t step, const ModelParams& params)> on_step;
    /// Stops after this many optimizer steps (0 = unlimited).
    std::size_t max_steps = 0;
};

/// Trains encoder and head jointly with weighted cross-entropy. Optimizer steps happen every
/// `accumulation_steps` micro-batches with gradients averaged; validation macro F1 is measured
/// after each epoch and the best epoch's parameters are returned.
Checkpoint finetune(const Corpus& train, const Corpus& val, const TrainConfig& config,
                    const std::optional<ClassWeights>& weights = std::nullopt, const FinetuneHooks& hooks = {});

/// Deterministic batch prediction; empty texts are reported in `errors`.
PredictionSet predict(const Checkpoint& checkpoint, const std::vector<std::string>& texts,
                      const std::vector<std::string>& ids = {});

/// Macro F1 of a checkpoint's predictions over a labelled corpus.
double macro_f1_on(const Checkpoint& checkpoint, const Corpus& corpus);

/// Exposes the pooled output of a trained encoder as a sentence encoder.
class CheckpointEncoder final : public Encoder {
public:
    explicit CheckpointEncoder(const Checkpoint& checkpoint, std::string name = "tiny-encoder");
    std::string name() const override { return name_; }
    std::size_t dimension() const override { return checkpoint_.model.config().dim; }
    std::size_t max_tokens() const override { return checkpoint_.config.max_sequence_tokens; }
    bool normalizes() const override { return false; }
    Eigen::VectorXd embed(std::string_view text) const override;

private:
    const Checkpoint& checkpoint_;
    std::string name_;
};

}  // namespace mhc

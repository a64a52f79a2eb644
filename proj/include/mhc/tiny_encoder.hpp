#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace mhc {

/// Word-level vocabulary. Index 0 is the padding token, index 1 the unknown token.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    Vocabulary();
    /// Tokens ranked by frequency (ties lexicographic), capped at max_size entries including specials.
    static Vocabulary build(const std::vector<std::string>& texts, std::size_t max_size = 30000, std::size_t min_count = 1);
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    int id(std::string_view token) const;
    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    /// Token strings and ids for `text`, truncated to max_tokens.
    std::vector<int> encode(std::string_view text, std::size_t max_tokens) const;

    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

struct EncoderConfig {
    std::size_t vocab_size = 2;
    std::size_t dim = 16;
    std::size_t ffn_dim = 32;
    std::size_t num_layers = 2;
    std::size_t max_tokens = 512;
    std::size_t num_labels = 6;

    nlohmann::json to_json() const;
    static EncoderConfig from_json(const nlohmann::json& j);
};

struct LayerParams {
    Eigen::MatrixXd wq, wk, wv, wo;  // dim x dim
    Eigen::MatrixXd w1;              // dim x ffn
    Eigen::MatrixXd b1;              // 1 x ffn
    Eigen::MatrixXd w2;              // ffn x dim
    Eigen::MatrixXd b2;              // 1 x dim
};

/// All trainable tensors of the encoder plus classification head.
struct ModelParams {
    Eigen::MatrixXd token_embedding;     // vocab x dim
    Eigen::MatrixXd position_embedding;  // max_tokens x dim
    std::vector<LayerParams> layers;
    Eigen::MatrixXd head_w;              // dim x labels
    Eigen::MatrixXd head_b;              // 1 x labels

    static ModelParams zeros(const EncoderConfig& config);
    static ModelParams init(const EncoderConfig& config, std::uint64_t seed);

    /// Visits every tensor with a stable name; biases are reported via `is_bias`.
    void visit(const std::function<void(const std::string& name, Eigen::MatrixXd& tensor, bool is_bias)>& fn);
    void visit(const std::function<void(const std::string& name, const Eigen::MatrixXd& tensor, bool is_bias)>& fn) const;

    std::size_t parameter_count() const;
    Eigen::VectorXd flatten() const;
    void set_zero();
};

/// Activations kept from a forward pass for backpropagation.
struct ForwardCache {
    struct Layer {
        Eigen::MatrixXd x, q, k, v, attn, h, x1, g;
    };
    std::vector<int> token_ids;
    std::vector<Layer> layers;
    Eigen::MatrixXd output;   // T x dim, final hidden states
    Eigen::RowVectorXd pooled;
    Eigen::RowVectorXd logits;
};

/// Small transformer-style encoder: learned token + position embeddings, `num_layers`
/// blocks of single-head self-attention and a tanh feed-forward, each with a residual
/// connection, mean pooling over tokens, and a linear classification head.
class TinyEncoderModel {
public:
    TinyEncoderModel() = default;
    TinyEncoderModel(EncoderConfig config, ModelParams params);

    const EncoderConfig& config() const { return config_; }
    const ModelParams& params() const { return params_; }
    ModelParams& params() { return params_; }

    /// Token embedding rows for `ids` (T x dim), without positions.
    Eigen::MatrixXd embed_tokens(const std::vector<int>& ids) const;

    /// Forward pass from token-embedding inputs (positions are added internally).
    ForwardCache forward_embeddings(const Eigen::MatrixXd& token_embeddings) const;
    ForwardCache forward(const std::vector<int>& ids) const;

    /// Backpropagates d(loss)/d(logits). Accumulates parameter gradients into `grads`
    /// (may be null) and returns d(loss)/d(token embeddings).
    Eigen::MatrixXd backward(const ForwardCache& cache, const Eigen::RowVectorXd& dlogits, ModelParams* grads) const;

private:
    EncoderConfig config_;
    ModelParams params_;
};

}  // namespace mhc

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mhc/labels.hpp"

namespace mhc {

/// A sentence encoder. Implementations must be safe for concurrent const use.
class Encoder {
public:
    virtual ~Encoder() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::size_t max_tokens() const = 0;
    virtual bool normalizes() const = 0;

    /// Embeds one text. Texts longer than max_tokens are truncated.
    virtual Eigen::VectorXd embed(std::string_view text) const = 0;
};

/// Deterministic bag-of-words encoder: each token maps to a fixed pseudo-random
/// Gaussian direction seeded from its hash; a text is the mean of its token
/// directions, optionally L2-normalized. Needs no trained weights.
class HashingEncoder final : public Encoder {
public:
    explicit HashingEncoder(std::size_t dimension = 64, std::size_t max_tokens = 512, bool normalize = true,
                            std::uint64_t seed = 17);

    std::string name() const override;
    std::size_t dimension() const override { return dimension_; }
    std::size_t max_tokens() const override { return max_tokens_; }
    bool normalizes() const override { return normalize_; }
    Eigen::VectorXd embed(std::string_view text) const override;

    Eigen::VectorXd token_vector(std::string_view token) const;

private:
    std::size_t dimension_;
    std::size_t max_tokens_;
    bool normalize_;
    std::uint64_t seed_;
};

/// Row-per-post dense vectors. Immutable once constructed.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    /// Validates row/id alignment and finiteness; throws ValidationError.
    EmbeddingMatrix(Eigen::MatrixXd rows, std::vector<std::string> ids, std::string encoder_name);

    const Eigen::MatrixXd& rows() const { return rows_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const std::string& encoder_name() const { return encoder_name_; }
    std::size_t size() const { return ids_.size(); }
    std::size_t dimension() const { return static_cast<std::size_t>(rows_.cols()); }
    Eigen::VectorXd row(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)).transpose(); }

    /// Writes `<stem>.bin` (magic, n, d, float32 row-major, little-endian) and `<stem>.json`.
    void save(const std::filesystem::path& stem) const;
    static EmbeddingMatrix load(const std::filesystem::path& stem);

private:
    Eigen::MatrixXd rows_;
    std::vector<std::string> ids_;
    std::string encoder_name_;
};

struct EncodeError {
    std::string id;
    std::string message;
};

struct EncodeResult {
    EmbeddingMatrix embeddings;
    std::vector<EncodeError> errors;  // rows omitted from `embeddings`
};

/// Encodes texts in order. Ids default to the input positions ("0", "1", ...).
/// Empty texts are reported in `errors` and omitted.
EncodeResult encode(const Encoder& encoder, const std::vector<std::string>& texts, std::size_t batch_size,
                    const std::vector<std::string>& ids = {});

/// Mean row per class present in `labels`.
std::map<ClassLabel, Eigen::VectorXd> class_centroids(const EmbeddingMatrix& emb,
                                                      const std::vector<ClassLabel>& labels);

}  // namespace mhc

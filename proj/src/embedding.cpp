#include "mhc/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mhc/corpus.hpp"
#include "mhc/random.hpp"
#include "mhc/text.hpp"

namespace mhc {

namespace {
constexpr char kMagic[8] = {'M', 'H', 'C', 'E', 'M', 'B', '1', '\0'};

static_assert(std::endian::native == std::endian::little, "embedding files are little-endian");
}  // namespace

HashingEncoder::HashingEncoder(std::size_t dimension, std::size_t max_tokens, bool normalize, std::uint64_t seed)
    : dimension_(dimension), max_tokens_(max_tokens), normalize_(normalize), seed_(seed) {
    if (dimension == 0 || max_tokens == 0) throw ValidationError("encoder dimension and max_tokens must be positive");
}

std::string HashingEncoder::name() const {
    return "hashing-d" + std::to_string(dimension_) + (normalize_ ? "-norm" : "");
}

Eigen::VectorXd HashingEncoder::token_vector(std::string_view token) const {
    Rng rng(fnv1a64(token, 0xcbf29ce484222325ULL ^ seed_));
    Eigen::VectorXd v(static_cast<Eigen::Index>(dimension_));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    return v;
}

Eigen::VectorXd HashingEncoder::embed(std::string_view text) const {
    auto tokens = tokenize_words(text);
    if (tokens.size() > max_tokens_) tokens.resize(max_tokens_);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension_));
    if (tokens.empty()) return acc;
    for (const auto& t : tokens) acc += token_vector(t);
    acc /= static_cast<double>(tokens.size());
    if (normalize_) {
        const double n = acc.norm();
        if (n > 0.0) acc /= n;
    }
    return acc;
}

EmbeddingMatrix::EmbeddingMatrix(Eigen::MatrixXd rows, std::vector<std::string> ids, std::string encoder_name)
    : rows_(std::move(rows)), ids_(std::move(ids)), encoder_name_(std::move(encoder_name)) {
    if (static_cast<std::size_t>(rows_.rows()) != ids_.size())
        throw ValidationError("embedding row count does not match id count");
    if (!rows_.allFinite()) throw ValidationError("embedding matrix contains non-finite entries");
}

void EmbeddingMatrix::save(const std::filesystem::path& stem) const {
    auto bin = stem;
    bin += ".bin";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw IoError("cannot write " + bin.string());
    const std::uint64_t n = size(), d = dimension();
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
    std::vector<float> buf(d);
    for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows_.cols(); ++j) buf[static_cast<std::size_t>(j)] = static_cast<float>(rows_(i, j));
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw IoError("failed writing " + bin.string());

    auto side = stem;
    side += ".json";
    std::ofstream js(side);
    if (!js) throw IoError("cannot write " + side.string());
    js << nlohmann::json{{"ids", ids_}, {"encoder_name", encoder_name_}, {"dimension", d}, {"rows", n}}.dump(2)
       << '\n';
}

EmbeddingMatrix EmbeddingMatrix::load(const std::filesystem::path& stem) {
    auto side = stem;
    side += ".json";
    std::ifstream js(side);
    if (!js) throw IoError("cannot open " + side.string());
    const auto meta = nlohmann::json::parse(js);

    auto bin = stem;
    bin += ".bin";
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw IoError("cannot open " + bin.string());
    char magic[8];
    std::uint64_t n = 0, d = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&d), sizeof d);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError(bin.string() + ": not an embedding file");
    if (meta.at("dimension").get<std::uint64_t>() != d) throw IoError(bin.string() + ": dimension mismatch with sidecar");

    Eigen::MatrixXd rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<float> buf(d);
    for (std::uint64_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(d * sizeof(float)));
        if (!in) throw IoError(bin.string() + ": truncated");
        for (std::uint64_t j = 0; j < d; ++j)
            rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[j];
    }
    return EmbeddingMatrix(std::move(rows), meta.at("ids").get<std::vector<std::string>>(),
                           meta.at("encoder_name").get<std::string>());
}

EncodeResult encode(const Encoder& encoder, const std::vector<std::string>& texts, std::size_t batch_size,
                    const std::vector<std::string>& ids) {
    if (texts.empty()) throw ValidationError("encode requires at least one text");
    if (batch_size == 0) throw ValidationError("batch_size must be positive", "batch_size");
    if (!ids.empty() && ids.size() != texts.size()) throw ValidationError("ids and texts differ in length");

    EncodeResult result;
    std::vector<Eigen::VectorXd> kept;
    std::vector<std::string> kept_ids;
    for (std::size_t start = 0; start < texts.size(); start += batch_size) {
        const std::size_t end = std::min(texts.size(), start + batch_size);
        for (std::size_t i = start; i < end; ++i) {
            std::string id = ids.empty() ? std::to_string(i) : ids[i];
            if (word_count(texts[i]) > 0) {
                kept.push_back(encoder.embed(texts[i]));
                kept_ids.push_back(std::move(id));
            } else {
                result.errors.push_back({std::move(id), "empty text"});
            }
        }
    }

    Eigen::MatrixXd rows(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(encoder.dimension()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (static_cast<std::size_t>(kept[i].size()) != encoder.dimension())
            throw Error("encoder '" + encoder.name() + "' returned a vector of the wrong dimension");
        rows.row(static_cast<Eigen::Index>(i)) = kept[i].transpose();
    }
    result.embeddings = EmbeddingMatrix(std::move(rows), std::move(kept_ids), encoder.name());
    return result;
}

std::map<ClassLabel, Eigen::VectorXd> class_centroids(const EmbeddingMatrix& emb,
                                                      const std::vector<ClassLabel>& labels) {
    if (labels.size() != emb.size()) throw ValidationError("labels do not align with embedding rows");
    std::map<ClassLabel, Eigen::VectorXd> sums;
    std::map<ClassLabel, std::size_t> counts;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = sums.try_emplace(labels[i], Eigen::VectorXd::Zero(static_cast<Eigen::Index>(emb.dimension())));
        it->second += emb.rows().row(static_cast<Eigen::Index>(i)).transpose();
        ++counts[labels[i]];
    }
    for (auto& [label, v] : sums) v /= static_cast<double>(counts[label]);
    return sums;
}

}  // namespace mhc

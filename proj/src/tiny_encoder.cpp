#include "mhc/tiny_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "mhc/labels.hpp"
#include "mhc/random.hpp"
#include "mhc/text.hpp"

namespace mhc {

Vocabulary::Vocabulary() : tokens_{"[PAD]", "[UNK]"} {
    index_["[PAD]"] = kPad;
    index_["[UNK]"] = kUnk;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < 2 || tokens[0] != "[PAD]" || tokens[1] != "[UNK]")
        throw ValidationError("vocabulary must start with [PAD] and [UNK]");
    Vocabulary v;
    v.tokens_ = std::move(tokens);
    v.index_.clear();
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
        if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second)
            throw ValidationError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    return v;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t max_size, std::size_t min_count) {
    std::map<std::string, std::size_t> freq;
    for (const auto& t : texts)
        for (auto& tok : tokenize_words(t)) ++freq[tok];
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::string> tokens{"[PAD]", "[UNK]"};
    for (const auto& [tok, n] : ranked) {
        if (tokens.size() >= max_size) break;
        if (n >= min_count) tokens.push_back(tok);
    }
    return from_tokens(std::move(tokens));
}

int Vocabulary::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(std::string_view text, std::size_t max_tokens) const {
    std::vector<int> ids;
    for (const auto& tok : tokenize_words(text)) {
        if (ids.size() >= max_tokens) break;
        ids.push_back(id(tok));
    }
    return ids;
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    return from_tokens(std::move(tokens));
}

// ---------------------------------------------------------------------------

nlohmann::json EncoderConfig::to_json() const {
    return {{"vocab_size", vocab_size}, {"dim", dim},         {"ffn_dim", ffn_dim},
            {"num_layers", num_layers}, {"max_tokens", max_tokens}, {"num_labels", num_labels}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
    EncoderConfig c;
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.dim = j.at("dim").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.max_tokens = j.at("max_tokens").get<std::size_t>();
    c.num_labels = j.at("num_labels").get<std::size_t>();
    return c;
}

ModelParams ModelParams::zeros(const EncoderConfig& c) {
    const auto d = static_cast<Eigen::Index>(c.dim), f = static_cast<Eigen::Index>(c.ffn_dim);
    ModelParams p;
    p.token_embedding = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.vocab_size), d);
    p.position_embedding = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.max_tokens), d);
    for (std::size_t l = 0; l < c.num_layers; ++l) {
        LayerParams lp;
        lp.wq = lp.wk = lp.wv = lp.wo = Eigen::MatrixXd::Zero(d, d);
        lp.w1 = Eigen::MatrixXd::Zero(d, f);
        lp.b1 = Eigen::MatrixXd::Zero(1, f);
        lp.w2 = Eigen::MatrixXd::Zero(f, d);
        lp.b2 = Eigen::MatrixXd::Zero(1, d);
        p.layers.push_back(std::move(lp));
    }
    p.head_w = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(c.num_labels));
    p.head_b = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(c.num_labels));
    return p;
}

ModelParams ModelParams::init(const EncoderConfig& c, std::uint64_t seed) {
    ModelParams p = zeros(c);
    Rng rng(seed);
    auto fill = [&rng](Eigen::MatrixXd& m, double scale) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * rng.normal();
    };
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(c.dim));
    fill(p.token_embedding, 1.0);
    p.token_embedding.row(Vocabulary::kPad).setZero();
    fill(p.position_embedding, 0.02);
    for (auto& lp : p.layers) {
        fill(lp.wq, inv_sqrt_d);
        fill(lp.wk, inv_sqrt_d);
        fill(lp.wv, inv_sqrt_d);
        fill(lp.wo, 0.5 * inv_sqrt_d);
        fill(lp.w1, inv_sqrt_d);
        fill(lp.w2, 0.5 / std::sqrt(static_cast<double>(c.ffn_dim)));
    }
    fill(p.head_w, inv_sqrt_d);
    return p;
}

void ModelParams::visit(const std::function<void(const std::string&, Eigen::MatrixXd&, bool)>& fn) {
    fn("token_embedding", token_embedding, false);
    fn("position_embedding", position_embedding, false);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        auto& lp = layers[l];
        fn(pre + "wq", lp.wq, false);
        fn(pre + "wk", lp.wk, false);
        fn(pre + "wv", lp.wv, false);
        fn(pre + "wo", lp.wo, false);
        fn(pre + "w1", lp.w1, false);
        fn(pre + "b1", lp.b1, true);
        fn(pre + "w2", lp.w2, false);
        fn(pre + "b2", lp.b2, true);
    }
    fn("head_w", head_w, false);
    fn("head_b", head_b, true);
}

void ModelParams::visit(const std::function<void(const std::string&, const Eigen::MatrixXd&, bool)>& fn) const {
    const_cast<ModelParams*>(this)->visit(
        [&fn](const std::string& name, Eigen::MatrixXd& m, bool bias) { fn(name, m, bias); });
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    visit([&n](const std::string&, const Eigen::MatrixXd& m, bool) { n += static_cast<std::size_t>(m.size()); });
    return n;
}

Eigen::VectorXd ModelParams::flatten() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index off = 0;
    visit([&](const std::string&, const Eigen::MatrixXd& m, bool) {
        out.segment(off, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
        off += m.size();
    });
    return out;
}

void ModelParams::set_zero() {
    visit([](const std::string&, Eigen::MatrixXd& m, bool) { m.setZero(); });
}

// ---------------------------------------------------------------------------

TinyEncoderModel::TinyEncoderModel(EncoderConfig config, ModelParams params)
    : config_(std::move(config)), params_(std::move(params)) {
    if (static_cast<std::size_t>(params_.token_embedding.rows()) != config_.vocab_size ||
        static_cast<std::size_t>(params_.token_embedding.cols()) != config_.dim ||
        params_.layers.size() != config_.num_layers ||
        static_cast<std::size_t>(params_.head_w.cols()) != config_.num_labels)
        throw ValidationError("model parameters do not match encoder config");
}

Eigen::MatrixXd TinyEncoderModel::embed_tokens(const std::vector<int>& ids) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(config_.dim));
    for (std::size_t t = 0; t < ids.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = params_.token_embedding.row(ids[t]);
    return out;
}

namespace {
void softmax_rows(Eigen::MatrixXd& s) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double m = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - m).exp();
        s.row(i) /= s.row(i).sum();
    }
}
}  // namespace

ForwardCache TinyEncoderModel::forward_embeddings(const Eigen::MatrixXd& token_embeddings) const {
    const Eigen::Index t = token_embeddings.rows();
    if (t == 0) throw ValidationError("cannot run the encoder on an empty token sequence");
    if (static_cast<std::size_t>(t) > config_.max_tokens) throw ValidationError("sequence exceeds max_tokens");
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.dim));

    ForwardCache cache;
    Eigen::MatrixXd x = token_embeddings + params_.position_embedding.topRows(t);
    for (const auto& lp : params_.layers) {
        ForwardCache::Layer lc;
        lc.x = x;
        lc.q = x * lp.wq;
        lc.k = x * lp.wk;
        lc.v = x * lp.wv;
        lc.attn = (lc.q * lc.k.transpose()) * scale;
        softmax_rows(lc.attn);
        lc.h = lc.attn * lc.v;
        lc.x1 = x + lc.h * lp.wo;
        lc.g = ((lc.x1 * lp.w1).rowwise() + lp.b1.row(0)).array().tanh().matrix();
        x = lc.x1 + lc.g * lp.w2;
        x.rowwise() += lp.b2.row(0);
        cache.layers.push_back(std::move(lc));
    }
    cache.output = x;
    cache.pooled = x.colwise().mean();
    cache.logits = cache.pooled * params_.head_w + params_.head_b.row(0);
    return cache;
}

ForwardCache TinyEncoderModel::forward(const std::vector<int>& ids) const {
    auto cache = forward_embeddings(embed_tokens(ids));
    cache.token_ids = ids;
    return cache;
}

Eigen::MatrixXd TinyEncoderModel::backward(const ForwardCache& cache, const Eigen::RowVectorXd& dlogits,
                                           ModelParams* grads) const {
    const Eigen::Index t = cache.output.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.dim));

    if (grads) {
        grads->head_w.noalias() += cache.pooled.transpose() * dlogits;
        grads->head_b.row(0) += dlogits;
    }
    const Eigen::RowVectorXd dpooled = dlogits * params_.head_w.transpose();
    Eigen::MatrixXd dx = dpooled.replicate(t, 1) / static_cast<double>(t);

    for (std::size_t li = params_.layers.size(); li-- > 0;) {
        const auto& lp = params_.layers[li];
        const auto& lc = cache.layers[li];
        // feed-forward block
        const Eigen::MatrixXd du = ((dx * lp.w2.transpose()).array() * (1.0 - lc.g.array().square())).matrix();
        if (grads) {
            auto& g = grads->layers[li];
            g.w2.noalias() += lc.g.transpose() * dx;
            g.b2.row(0) += dx.colwise().sum();
            g.w1.noalias() += lc.x1.transpose() * du;
            g.b1.row(0) += du.colwise().sum();
        }
        const Eigen::MatrixXd dx1 = dx + du * lp.w1.transpose();
        // attention block
        const Eigen::MatrixXd dh = dx1 * lp.wo.transpose();
        const Eigen::MatrixXd dattn = dh * lc.v.transpose();
        const Eigen::MatrixXd dv = lc.attn.transpose() * dh;
        const Eigen::VectorXd row_dot = (dattn.array() * lc.attn.array()).rowwise().sum();
        const Eigen::MatrixXd ds = (lc.attn.array() * (dattn.colwise() - row_dot).array()).matrix() * scale;
        const Eigen::MatrixXd dq = ds * lc.k;
        const Eigen::MatrixXd dk = ds.transpose() * lc.q;
        if (grads) {
            auto& g = grads->layers[li];
            g.wo.noalias() += lc.h.transpose() * dx1;
            g.wq.noalias() += lc.x.transpose() * dq;
            g.wk.noalias() += lc.x.transpose() * dk;
            g.wv.noalias() += lc.x.transpose() * dv;
        }
        dx = dx1 + dq * lp.wq.transpose() + dk * lp.wk.transpose() + dv * lp.wv.transpose();
    }

    if (grads) {
        grads->position_embedding.topRows(t) += dx;
        for (std::size_t i = 0; i < cache.token_ids.size(); ++i)
            grads->token_embedding.row(cache.token_ids[i]) += dx.row(static_cast<Eigen::Index>(i));
    }
    return dx;
}

}  // namespace mhc

#include "doctest.h"

#include "fixtures.hpp"
#include "mhc/embedding.hpp"

using namespace mhc;

TEST_SUITE("embedding") {

TEST_CASE("hashing encoder is deterministic and normalized") {
    HashingEncoder enc(32);
    auto a = enc.embed("I feel anxious all the time");
    auto b = enc.embed("I feel anxious all the time");
    CHECK(a.size() == 32);
    CHECK((a - b).norm() == 0.0);
    CHECK(a.norm() == doctest::Approx(1.0));
    CHECK((enc.embed("completely different words") - a).norm() > 1e-3);

    HashingEncoder other_seed(32, 512, true, 99);
    CHECK((other_seed.embed("I feel anxious all the time") - a).norm() > 1e-3);

    HashingEncoder raw(32, 512, false);
    CHECK_FALSE(raw.normalizes());
    auto one = raw.embed("solo");
    CHECK((one - raw.token_vector("solo")).norm() < 1e-12);
}

TEST_CASE("truncation ignores tokens past max_tokens") {
    HashingEncoder enc(16, 3);
    CHECK((enc.embed("a b c") - enc.embed("a b c d e f")).norm() < 1e-12);
}

TEST_CASE("encode keeps order and reports empty texts") {
    HashingEncoder enc(8);
    auto r = encode(enc, {"first text", "", "third text"}, 2, {"x", "y", "z"});
    CHECK(r.embeddings.size() == 2);
    CHECK(r.embeddings.ids() == std::vector<std::string>{"x", "z"});
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].id == "y");
    CHECK((r.embeddings.row(1) - enc.embed("third text")).norm() < 1e-12);

    auto same = encode(enc, {"first text", "", "third text"}, 1, {"x", "y", "z"});
    CHECK(same.embeddings.rows().isApprox(r.embeddings.rows()));

    auto def = encode(enc, {"a", "b"}, 8);
    CHECK(def.embeddings.ids() == std::vector<std::string>{"0", "1"});
    CHECK_THROWS_AS(encode(enc, {"a"}, 1, {"x", "y"}), ValidationError);
}

TEST_CASE("embedding matrix validation and round trip") {
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    CHECK_THROWS_AS(EmbeddingMatrix(m, {"a"}, "e"), ValidationError);
    Eigen::MatrixXd bad = m;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(EmbeddingMatrix(bad, {"a", "b"}, "e"), ValidationError);

    EmbeddingMatrix emb(m, {"a", "b"}, "enc");
    auto dir = fixtures::temp_dir("emb");
    emb.save(dir / "embeddings");
    auto back = EmbeddingMatrix::load(dir / "embeddings");
    CHECK(back.ids() == emb.ids());
    CHECK(back.encoder_name() == "enc");
    CHECK(back.rows().isApprox(m, 1e-6));
    CHECK_THROWS_AS(EmbeddingMatrix::load(dir / "missing"), IoError);
}

TEST_CASE("class centroids are per-class means") {
    Eigen::MatrixXd m(4, 2);
    m << 0, 0, 2, 2, 10, 0, 0, 10;
    EmbeddingMatrix emb(m, {"a", "b", "c", "d"}, "e");
    auto c = class_centroids(emb, {ClassLabel::Stress, ClassLabel::Stress, ClassLabel::None, ClassLabel::None});
    REQUIRE(c.size() == 2);
    CHECK(c.at(ClassLabel::Stress).isApprox(Eigen::Vector2d(1, 1)));
    CHECK(c.at(ClassLabel::None).isApprox(Eigen::Vector2d(5, 5)));
}

}  // TEST_SUITE

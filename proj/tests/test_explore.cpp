#include "doctest.h"

#include <cmath>
#include <map>
#include <random>

#include "fixtures.hpp"
#include "mhc/explore.hpp"

using namespace mhc;

namespace {

// Adjusted Rand via brute-force pair agreement counts.
double ari_pairs(const std::vector<int>& a, const std::vector<int>& b) {
    double both = 0, only_a = 0, only_b = 0, neither = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            if (sa && sb) ++both;
            else if (sa) ++only_a;
            else if (sb) ++only_b;
            else ++neither;
        }
    const double pairs = both + only_a + only_b + neither;
    const double expected = (both + only_a) * (both + only_b) / pairs;
    const double max_index = 0.5 * ((both + only_a) + (both + only_b));
    return (both - expected) / (max_index - expected);
}

double nmi_direct(const std::vector<int>& a, const std::vector<int>& b) {
    const double n = static_cast<double>(a.size());
    std::map<int, double> pa, pb;
    std::map<std::pair<int, int>, double> pab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1 / n;
        pb[b[i]] += 1 / n;
        pab[{a[i], b[i]}] += 1 / n;
    }
    double ha = 0, hb = 0, mi = 0;
    for (auto [k, p] : pa) ha -= p * std::log(p);
    for (auto [k, p] : pb) hb -= p * std::log(p);
    for (auto [k, p] : pab) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
    return mi / (0.5 * (ha + hb));
}

double silhouette_brute(const Eigen::MatrixXd& x, const std::vector<int>& c) {
    const auto n = static_cast<std::size_t>(x.rows());
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::map<int, std::pair<double, int>> acc;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            auto& e = acc[c[j]];
            e.first += (x.row(i) - x.row(j)).norm();
            e.second += 1;
        }
        if (acc[c[i]].second == 0) continue;
        const double a = acc[c[i]].first / acc[c[i]].second;
        double b = 1e300;
        for (auto& [k, e] : acc)
            if (k != c[i] && e.second > 0) b = std::min(b, e.first / e.second);
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

Eigen::MatrixXd blobs(int per, std::uint64_t seed, std::vector<int>& truth) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    const double centres[3][2] = {{0, 0}, {10, 0}, {0, 10}};
    Eigen::MatrixXd x(3 * per, 2);
    truth.clear();
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < per; ++i) {
            x(c * per + i, 0) = centres[c][0] + noise(rng);
            x(c * per + i, 1) = centres[c][1] + noise(rng);
            truth.push_back(c);
        }
    return x;
}

}  // namespace

TEST_SUITE("explore") {

TEST_CASE("ARI and NMI of identical partitions up to relabeling") {
    std::vector<int> a = {0, 0, 1, 1, 2, 2};
    std::vector<int> b = {5, 5, 3, 3, 9, 9};
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(1.0));
    CHECK(normalized_mutual_info(a, b) == doctest::Approx(1.0));
}

TEST_CASE("ARI matches the hand-computed negative case") {
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
    CHECK(normalized_mutual_info({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0));
}

TEST_CASE("ARI and NMI agree with independent oracles on random partitions") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 20 + rng() % 40;
        std::vector<int> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<int>(rng() % 4);
            b[i] = static_cast<int>(rng() % 5);
        }
        CHECK(adjusted_rand_index(a, b) == doctest::Approx(ari_pairs(a, b)).epsilon(1e-9));
        CHECK(normalized_mutual_info(a, b) == doctest::Approx(nmi_direct(a, b)).epsilon(1e-9));
        // Symmetric and invariant to renaming cluster ids.
        std::vector<int> renamed(b);
        for (auto& v : renamed) v = 100 - 7 * v;
        CHECK(adjusted_rand_index(a, renamed) == doctest::Approx(adjusted_rand_index(a, b)));
        CHECK(adjusted_rand_index(b, a) == doctest::Approx(adjusted_rand_index(a, b)));
        CHECK(normalized_mutual_info(a, renamed) == doctest::Approx(normalized_mutual_info(a, b)));
        const double nmi = normalized_mutual_info(a, b);
        CHECK(nmi >= -1e-12);
        CHECK(nmi <= 1.0 + 1e-12);
    }
}

TEST_CASE("agreement metric edge cases") {
    CHECK(normalized_mutual_info({1, 1, 1}, {2, 2, 2}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(adjusted_rand_index({0, 1}, {0}), ValidationError);
    CHECK_THROWS_AS(normalized_mutual_info({}, {}), ValidationError);
}

TEST_CASE("silhouette matches brute force and lies in [-1, 1]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(30, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    std::vector<int> c(30);
    for (auto& v : c) v = static_cast<int>(rng() % 3);
    c[0] = 3;  // singleton scores 0
    const double s = silhouette(x, c);
    CHECK(s == doctest::Approx(silhouette_brute(x, c)).epsilon(1e-9));
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
}

TEST_CASE("kmeans recovers well-separated blobs") {
    std::vector<int> truth;
    auto x = blobs(20, 11, truth);
    auto r = kmeans_cluster(x, 3, 42);
    CHECK(r.converged);
    CHECK(adjusted_rand_index(truth, r.cluster_ids) == doctest::Approx(1.0));
    CHECK(silhouette(x, r.cluster_ids) > 0.9);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i)
        CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] + 1e-9);

    auto again = kmeans_cluster(x, 3, 42);
    CHECK(again.cluster_ids == r.cluster_ids);
}

TEST_CASE("kmeans with k = 1 has total variance as inertia") {
    std::vector<int> truth;
    auto x = blobs(10, 2, truth);
    auto r = kmeans_cluster(x, 1, 0);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const double ss = (x.rowwise() - mean).squaredNorm();
    CHECK(r.inertia == doctest::Approx(ss));
    for (int id : r.cluster_ids) CHECK(id == 0);
    CHECK_THROWS_AS(kmeans_cluster(x, 0, 0), ValidationError);
    CHECK_THROWS_AS(kmeans_cluster(x, 31, 0), ValidationError);
}

TEST_CASE("cluster distribution counts") {
    auto d = cluster_distribution({ClassLabel::Stress, ClassLabel::Stress, ClassLabel::None}, {0, 1, 1},
                                  LabelSet({ClassLabel::Stress, ClassLabel::None}), 3);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == std::vector<std::size_t>{1, 1, 0});
    CHECK(d[1] == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("centroid cosine matrix") {
    std::map<ClassLabel, Eigen::VectorXd> c;
    c[ClassLabel::Stress] = Eigen::Vector2d(1, 0);
    c[ClassLabel::None] = Eigen::Vector2d(1, 1);
    auto m = centroid_cosine_matrix(c);
    CHECK(m.labels.names() == std::vector<std::string>{"Stress", "None"});
    CHECK(m.values(0, 0) == doctest::Approx(1.0));
    CHECK(m.values(0, 1) == doctest::Approx(std::sqrt(0.5)));
    CHECK(m.values(1, 0) == doctest::Approx(m.values(0, 1)));
}

TEST_CASE("PCA preserves distances of planar data") {
    Eigen::MatrixXd x(5, 3);
    x << 0, 0, 0, 1, 2, 0, 3, 1, 0, -2, 4, 0, 5, -1, 0;
    auto p = project_2d(x, ProjectionMethod::Pca, 0);
    REQUIRE(p.points.rows() == 5);
    REQUIRE(p.points.cols() == 2);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK((p.points.row(i) - p.points.row(j)).norm() == doctest::Approx((x.row(i) - x.row(j)).norm()));

    Eigen::MatrixXd line(4, 3);
    line << 0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3;
    auto l = project_2d(line, ProjectionMethod::Pca, 0);
    CHECK(l.points.allFinite());
    CHECK(l.points.col(1).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("t-SNE is deterministic for a fixed seed") {
    std::vector<int> truth;
    auto x = blobs(8, 4, truth);
    TsneOptions o;
    o.perplexity = 5;
    o.iterations = 200;
    auto a = project_2d(x, ProjectionMethod::Tsne, 9, o);
    auto b = project_2d(x, ProjectionMethod::Tsne, 9, o);
    CHECK(a.points.allFinite());
    CHECK((a.points - b.points).norm() == 0.0);
    // nearest neighbour in the embedding shares the blob
    int agree = 0;
    for (Eigen::Index i = 0; i < a.points.rows(); ++i) {
        Eigen::Index best = -1;
        double bd = 1e300;
        for (Eigen::Index j = 0; j < a.points.rows(); ++j) {
            const double d = (a.points.row(i) - a.points.row(j)).squaredNorm();
            if (j != i && d < bd) bd = d, best = j;
        }
        agree += truth[static_cast<std::size_t>(best)] == truth[static_cast<std::size_t>(i)];
    }
    CHECK(agree == a.points.rows());
}

TEST_CASE("evaluate_clustering uses one cluster per class") {
    auto corpus = fixtures::disjoint_corpus(10, 8, {ClassLabel::Stress, ClassLabel::PTSD, ClassLabel::None});
    HashingEncoder enc(48);
    auto r = encode(enc, corpus.texts(), 16, corpus.ids());
    auto rep = evaluate_clustering(r.embeddings, corpus.labels(), 42);
    CHECK(rep.label_order.size() == 3);
    CHECK(rep.distribution.size() == 3);
    CHECK(rep.distribution[0].size() == 3);
    CHECK(rep.ari > 0.5);
    CHECK(rep.to_markdown().find("ARI") != std::string::npos);
}

}  // TEST_SUITE

#include "mhc/explore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "mhc/random.hpp"

namespace mhc {

namespace {

std::vector<int> relabel_dense(const std::vector<int>& v) {
    std::vector<int> uniq = v;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<int> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), v[i]) - uniq.begin());
    return out;
}

struct Contingency {
    std::vector<std::vector<std::int64_t>> cells;
    std::vector<std::int64_t> row_sums, col_sums;
    std::int64_t n = 0;
};

Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
    const auto da = relabel_dense(a), db = relabel_dense(b);
    const int ra = da.empty() ? 0 : *std::max_element(da.begin(), da.end()) + 1;
    const int rb = db.empty() ? 0 : *std::max_element(db.begin(), db.end()) + 1;
    Contingency c;
    c.cells.assign(static_cast<std::size_t>(ra), std::vector<std::int64_t>(static_cast<std::size_t>(rb), 0));
    c.row_sums.assign(static_cast<std::size_t>(ra), 0);
    c.col_sums.assign(static_cast<std::size_t>(rb), 0);
    for (std::size_t i = 0; i < da.size(); ++i) {
        ++c.cells[static_cast<std::size_t>(da[i])][static_cast<std::size_t>(db[i])];
        ++c.row_sums[static_cast<std::size_t>(da[i])];
        ++c.col_sums[static_cast<std::size_t>(db[i])];
    }
    c.n = static_cast<std::int64_t>(da.size());
    return c;
}

std::int64_t comb2(std::int64_t x) { return x * (x - 1) / 2; }

// Sums a multiset of terms in a canonical order so the result does not depend on
// how the partitions were labelled.
double canonical_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

double entropy(const std::vector<std::int64_t>& counts, std::int64_t n) {
    std::vector<double> terms;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(n);
        terms.push_back(-p * std::log(p));
    }
    return canonical_sum(std::move(terms));
}

void check_same_length(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size())
        throw ValidationError("partitions differ in length (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
}

}  // namespace

// ---------------------------------------------------------------------------

ClusterAssignment kmeans_cluster(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iter) {
    const auto n = points.rows();
    if (k <= 0) throw ValidationError("k must be positive", "k");
    if (k > n) throw ValidationError("k (" + std::to_string(k) + ") exceeds sample count (" + std::to_string(n) + ")", "k");
    if (max_iter <= 0) throw ValidationError("max_iter must be positive", "max_iter");

    Eigen::MatrixXd centres(k, points.cols());
    Rng rng(seed);
    const auto first = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    centres.row(0) = points.row(first);
    Eigen::VectorXd nearest = (points.rowwise() - centres.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        Eigen::Index far = 0;
        nearest.maxCoeff(&far);
        centres.row(c) = points.row(far);
        nearest = nearest.cwiseMin((points.rowwise() - centres.row(c)).rowwise().squaredNorm());
    }

    ClusterAssignment out;
    out.k = k;
    out.seed = seed;
    out.cluster_ids.assign(static_cast<std::size_t>(n), -1);
    Eigen::VectorXd cost(n);

    auto assign = [&] {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            cost[i] = (centres.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
            if (out.cluster_ids[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
                out.cluster_ids[static_cast<std::size_t>(i)] = static_cast<int>(best);
                changed = true;
            }
        }
        return changed;
    };

    auto update = [&] {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int c = out.cluster_ids[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centres.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
                continue;
            }
            // Empty cluster: take over the point that is worst served by a shared cluster.
            Eigen::Index far = -1;
            double far_cost = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int owner = out.cluster_ids[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(owner)] > 1 && cost[i] > far_cost) {
                    far_cost = cost[i];
                    far = i;
                }
            }
            const int owner = out.cluster_ids[static_cast<std::size_t>(far)];
            --counts[static_cast<std::size_t>(owner)];
            sums.row(owner) -= points.row(far);
            centres.row(owner) = sums.row(owner) / static_cast<double>(counts[static_cast<std::size_t>(owner)]);
            out.cluster_ids[static_cast<std::size_t>(far)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
            sums.row(c) = points.row(far);
            cost[far] = 0.0;
            centres.row(c) = points.row(far);
        }
    };

    for (int it = 0; it < max_iter; ++it) {
        const bool changed = assign();
        out.inertia_history.push_back(cost.sum());
        out.iterations = it + 1;
        if (!changed && it > 0) {
            out.converged = true;
            break;
        }
        update();
    }
    // Final inertia against the centroids of the final assignment.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(out.cluster_ids[static_cast<std::size_t>(i)]) += points.row(i);
        counts[static_cast<std::size_t>(out.cluster_ids[static_cast<std::size_t>(i)])] += 1.0;
    }
    for (int c = 0; c < k; ++c)
        if (counts[static_cast<std::size_t>(c)] > 0) centres.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        inertia += (points.row(i) - centres.row(out.cluster_ids[static_cast<std::size_t>(i)])).squaredNorm();
    out.inertia = inertia;
    return out;
}

double adjusted_rand_index(const std::vector<int>& truth, const std::vector<int>& clusters) {
    check_same_length(truth, clusters);
    if (truth.size() < 2) throw ValidationError("ARI requires at least 2 samples");
    const auto c = contingency(truth, clusters);
    std::int64_t index = 0, a = 0, b = 0;
    for (const auto& row : c.cells)
        for (auto v : row) index += comb2(v);
    for (auto v : c.row_sums) a += comb2(v);
    for (auto v : c.col_sums) b += comb2(v);
    const double total = static_cast<double>(comb2(c.n));
    const double expected = static_cast<double>(a) * static_cast<double>(b) / total;
    const double max_index = 0.5 * static_cast<double>(a + b);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (static_cast<double>(index) - expected) / denom;
}

double normalized_mutual_info(const std::vector<int>& truth, const std::vector<int>& clusters) {
    check_same_length(truth, clusters);
    if (truth.empty()) throw ValidationError("NMI requires at least one sample");
    const auto c = contingency(truth, clusters);
    if (c.row_sums.size() == 1 && c.col_sums.size() == 1) return 1.0;

    const double n = static_cast<double>(c.n);
    std::vector<double> terms;
    for (std::size_t i = 0; i < c.cells.size(); ++i) {
        for (std::size_t j = 0; j < c.cells[i].size(); ++j) {
            const auto nij = c.cells[i][j];
            if (nij == 0) continue;
            const double p = static_cast<double>(nij) / n;
            terms.push_back(p * std::log(n * static_cast<double>(nij) /
                                         (static_cast<double>(c.row_sums[i]) * static_cast<double>(c.col_sums[j]))));
        }
    }
    const double mi = std::max(0.0, canonical_sum(std::move(terms)));
    const double ha = entropy(c.row_sums, c.n), hb = entropy(c.col_sums, c.n);
    const double norm = 0.5 * (ha + hb);
    if (norm <= 0.0) return 1.0;
    return std::clamp(mi / norm, 0.0, 1.0);
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& cluster_ids) {
    const auto n = points.rows();
    if (static_cast<std::size_t>(n) != cluster_ids.size())
        throw ValidationError("cluster ids do not align with points");
    if (n < 3) throw ValidationError("silhouette requires at least 3 samples");
    const auto dense = relabel_dense(cluster_ids);
    const int k = *std::max_element(dense.begin(), dense.end()) + 1;
    if (k < 2) throw ValidationError("silhouette requires at least 2 clusters");

    std::vector<double> sizes(static_cast<std::size_t>(k), 0.0);
    for (int c : dense) sizes[static_cast<std::size_t>(c)] += 1.0;

    double total = 0.0;
    std::vector<double> dist_sum(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(dense[static_cast<std::size_t>(i)]);
        if (sizes[own] <= 1.0) continue;
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[static_cast<std::size_t>(dense[static_cast<std::size_t>(j)])] += (points.row(i) - points.row(j)).norm();
        }
        const double a = dist_sum[own] / (sizes[own] - 1.0);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < dist_sum.size(); ++c)
            if (c != own) b = std::min(b, dist_sum[c] / sizes[c]);
        const double m = std::max(a, b);
        if (m > 0.0) total += (b - a) / m;
    }
    return total / static_cast<double>(n);
}

std::vector<std::vector<std::size_t>> cluster_distribution(const std::vector<ClassLabel>& truth,
                                                           const std::vector<int>& cluster_ids,
                                                           const LabelSet& label_order, int num_clusters) {
    if (truth.size() != cluster_ids.size()) throw ValidationError("labels and cluster ids differ in length");
    int k = num_clusters;
    for (int c : cluster_ids) {
        if (c < 0) throw ValidationError("negative cluster id");
        k = std::max(k, c + 1);
    }
    std::vector<std::vector<std::size_t>> table(label_order.size(), std::vector<std::size_t>(static_cast<std::size_t>(k), 0));
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++table[label_order.index_of(truth[i])][static_cast<std::size_t>(cluster_ids[i])];
    return table;
}

// ---------------------------------------------------------------------------

nlohmann::json ClusterReport::to_json() const {
    nlohmann::json dist = nlohmann::json::object();
    for (std::size_t r = 0; r < label_order.size(); ++r) dist[std::string(to_string(label_order[r]))] = distribution[r];
    return {{"encoder", encoder_name},
            {"ari", ari},
            {"nmi", nmi},
            {"silhouette", silhouette},
            {"label_order", label_order.names()},
            {"distribution", dist}};
}

namespace {
std::string fixed3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}
}  // namespace

std::string ClusterReport::to_markdown() const {
    std::ostringstream os;
    os << "| Embedding | ARI | NMI | Silhouette |\n|---|---:|---:|---:|\n";
    os << "| " << encoder_name << " | " << fixed3(ari) << " | " << fixed3(nmi) << " | " << fixed3(silhouette) << " |\n\n";
    const std::size_t k = distribution.empty() ? 0 : distribution.front().size();
    os << "| Class |";
    for (std::size_t c = 0; c < k; ++c) os << ' ' << c << " |";
    os << "\n|---|";
    for (std::size_t c = 0; c < k; ++c) os << "---:|";
    os << '\n';
    for (std::size_t r = 0; r < label_order.size(); ++r) {
        os << "| " << to_string(label_order[r]) << " |";
        for (auto v : distribution[r]) os << ' ' << v << " |";
        os << '\n';
    }
    return os.str();
}

ClusterReport evaluate_clustering(const EmbeddingMatrix& emb, const std::vector<ClassLabel>& labels,
                                  std::uint64_t seed, int max_iter) {
    if (labels.size() != emb.size()) throw ValidationError("labels do not align with embeddings");
    std::vector<ClassLabel> present(labels);
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    ClusterReport report;
    report.encoder_name = emb.encoder_name();
    report.label_order = LabelSet(present);

    std::vector<int> truth;
    truth.reserve(labels.size());
    for (auto l : labels) truth.push_back(static_cast<int>(report.label_order.index_of(l)));

    const int k = static_cast<int>(report.label_order.size());
    const auto assignment = kmeans_cluster(emb, k, seed, max_iter);
    report.ari = adjusted_rand_index(truth, assignment.cluster_ids);
    report.nmi = normalized_mutual_info(truth, assignment.cluster_ids);
    report.silhouette = k >= 2 ? silhouette(emb, assignment.cluster_ids) : 0.0;
    report.distribution = cluster_distribution(labels, assignment.cluster_ids, report.label_order, k);
    return report;
}

CorrelationMatrix centroid_cosine_matrix(const std::map<ClassLabel, Eigen::VectorXd>& centroids) {
    if (centroids.size() < 2) throw ValidationError("centroid correlation needs at least 2 classes");
    std::vector<ClassLabel> labels;
    std::vector<Eigen::VectorXd> units;
    for (const auto& [label, v] : centroids) {
        const double norm = v.norm();
        if (!(norm > 0.0)) throw ValidationError("centroid of class '" + std::string(to_string(label)) + "' has zero norm");
        labels.push_back(label);
        units.push_back(v / norm);
    }
    CorrelationMatrix out;
    out.labels = LabelSet(labels);
    const auto m = static_cast<Eigen::Index>(labels.size());
    out.values = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = a + 1; b < m; ++b) {
            const double cos = std::clamp(units[static_cast<std::size_t>(a)].dot(units[static_cast<std::size_t>(b)]), -1.0, 1.0);
            out.values(a, b) = cos;
            out.values(b, a) = cos;
        }
    return out;
}

nlohmann::json CorrelationMatrix::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(values.cols()));
        for (Eigen::Index c = 0; c < values.cols(); ++c) row[static_cast<std::size_t>(c)] = values(r, c);
        rows.push_back(row);
    }
    return {{"labels", labels.names()}, {"values", rows}};
}

std::string CorrelationMatrix::to_markdown() const {
    std::ostringstream os;
    os << "| |";
    for (auto l : labels.labels()) os << ' ' << to_string(l) << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < labels.size(); ++i) os << "---:|";
    os << '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        os << "| " << to_string(labels[static_cast<std::size_t>(r)]) << " |";
        for (Eigen::Index c = 0; c < values.cols(); ++c) os << ' ' << fixed3(values(r, c)) << " |";
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] <= 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff()))
        throw ValidationError("cannot project a matrix with no variance");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), 2);
    const Eigen::Index comps = std::min<Eigen::Index>(2, svd.matrixV().cols());
    for (Eigen::Index c = 0; c < comps; ++c) {
        Eigen::VectorXd axis = svd.matrixV().col(c);
        Eigen::Index pivot = 0;
        axis.cwiseAbs().maxCoeff(&pivot);
        if (axis[pivot] < 0) axis = -axis;
        out.col(c) = centered * axis;
    }
    return out;
}

// Row-stochastic conditional affinities with a per-point bandwidth matched to the perplexity.
Eigen::MatrixXd tsne_affinities(const Eigen::MatrixXd& x, double perplexity) {
    const auto n = x.rows();
    Eigen::MatrixXd d2(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) d2(i, j) = (x.row(i) - x.row(j)).squaredNorm();

    const double target = std::log(perplexity);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double beta = 1.0, lo = -1.0, hi = -1.0;
        for (int step = 0; step < 64; ++step) {
            double sum = 0.0, weighted = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double w = std::exp(-beta * d2(i, j));
                p(i, j) = w;
                sum += w;
                weighted += w * d2(i, j);
            }
            if (sum <= 0.0) {
                hi = beta;
                beta = lo < 0 ? beta / 2.0 : (lo + beta) / 2.0;
                continue;
            }
            const double h = std::log(sum) + beta * weighted / sum;
            p.row(i) /= sum;
            if (std::abs(h - target) < 1e-5) break;
            if (h > target) {
                lo = beta;
                beta = hi < 0 ? beta * 2.0 : (beta + hi) / 2.0;
            } else {
                hi = beta;
                beta = lo < 0 ? beta / 2.0 : (beta + lo) / 2.0;
            }
        }
    }
    return p;
}

Eigen::MatrixXd tsne_2d(const Eigen::MatrixXd& x, std::uint64_t seed, const TsneOptions& opt) {
    const auto n = x.rows();
    const double perplexity = std::clamp(opt.perplexity, 1.0, std::max(1.0, (static_cast<double>(n) - 1.0) / 3.0));
    Eigen::MatrixXd p = tsne_affinities(x, perplexity);
    p = (p + p.transpose()) / (2.0 * static_cast<double>(n));
    p = p.cwiseMax(1e-12);

    Rng rng(seed);
    Eigen::MatrixXd y(n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 2; ++c) y(i, c) = 1e-2 * rng.normal();

    const double lr = opt.learning_rate > 0 ? opt.learning_rate : std::max(static_cast<double>(n) / 48.0, 50.0);
    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
    Eigen::MatrixXd num(n, n), grad(n, 2);
    const int exaggeration_iters = std::min(100, opt.iterations / 4);
    for (int it = 0; it < opt.iterations; ++it) {
        const double exaggeration = it < exaggeration_iters ? 12.0 : 1.0;
        const double momentum = it < exaggeration_iters ? 0.5 : 0.8;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                num(i, j) = i == j ? 0.0 : 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        const double z = std::max(num.sum(), 1e-12);
        grad.setZero();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double q = std::max(num(i, j) / z, 1e-12);
                grad.row(i) += 4.0 * (exaggeration * p(i, j) - q) * num(i, j) * (y.row(i) - y.row(j));
            }
        for (Eigen::Index i = 0; i < n; ++i)
            for (int c = 0; c < 2; ++c) {
                const bool same_sign = (grad(i, c) > 0) == (velocity(i, c) > 0);
                gains(i, c) = same_sign ? std::max(0.01, gains(i, c) * 0.8) : gains(i, c) + 0.2;
                velocity(i, c) = momentum * velocity(i, c) - lr * gains(i, c) * grad(i, c);
            }
        y += velocity;
        y = y.rowwise() - y.colwise().mean();
    }
    return y;
}

}  // namespace

Projection2D project_2d(const Eigen::MatrixXd& points, ProjectionMethod method, std::uint64_t seed,
                        const TsneOptions& tsne) {
    if (points.rows() < 3) throw ValidationError("projection requires at least 3 rows");
    Projection2D out;
    out.seed = seed;
    if (method == ProjectionMethod::Pca) {
        out.method = "pca";
        out.points = pca_2d(points);
    } else {
        pca_2d(points);  // same no-variance check
        out.method = "tsne";
        out.points = tsne_2d(points, seed, tsne);
    }
    if (!out.points.allFinite()) throw Error("projection produced non-finite coordinates");
    return out;
}

void write_projection_points(const std::filesystem::path& path, const Projection2D& proj,
                             const std::vector<std::string>& ids, const std::vector<ClassLabel>& labels,
                             const std::vector<int>& clusters) {
    const auto n = static_cast<std::size_t>(proj.points.rows());
    if (ids.size() != n || labels.size() != n || clusters.size() != n)
        throw ValidationError("projection metadata does not align with points");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out << nlohmann::json{{"id", ids[i]},
                              {"x", proj.points(r, 0)},
                              {"y", proj.points(r, 1)},
                              {"label", std::string(to_string(labels[i]))},
                              {"cluster", clusters[i]}}
                   .dump()
            << '\n';
    }
}

std::string projection_svg(const Projection2D& proj, const std::vector<ClassLabel>& labels, const std::string& title) {
    static const char* kColours[kNumClasses] = {"#e6194b", "#f58231", "#4363d8", "#911eb4", "#000000", "#3cb44b"};
    const double width = 640, height = 480, margin = 40;
    const auto& pts = proj.points;
    const double xmin = pts.col(0).minCoeff(), xmax = pts.col(0).maxCoeff();
    const double ymin = pts.col(1).minCoeff(), ymax = pts.col(1).maxCoeff();
    auto sx = [&](double v) { return margin + (xmax > xmin ? (v - xmin) / (xmax - xmin) : 0.5) * (width - 2 * margin); };
    auto sy = [&](double v) { return height - margin - (ymax > ymin ? (v - ymin) / (ymax - ymin) : 0.5) * (height - 2 * margin); };

    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << title << " ("
       << proj.method << ")</text>\n";
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const auto c = static_cast<std::size_t>(canonical_index(labels.at(static_cast<std::size_t>(i))));
        os << "<circle cx=\"" << sx(pts(i, 0)) << "\" cy=\"" << sy(pts(i, 1)) << "\" r=\"2.5\" fill=\"" << kColours[c]
           << "\" fill-opacity=\"0.7\"/>\n";
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double y = margin + 18.0 * static_cast<double>(c);
        os << "<rect x=\"" << width - 120 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\"" << kColours[c] << "\"/>";
        os << "<text x=\"" << width - 104 << "\" y=\"" << y + 9 << "\" font-family=\"sans-serif\" font-size=\"12\">"
           << to_string(kAllLabels[c]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace mhc

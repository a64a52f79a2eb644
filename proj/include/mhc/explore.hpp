#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mhc/embedding.hpp"
#include "mhc/labels.hpp"

namespace mhc {

struct ClusterAssignment {
    std::vector<int> cluster_ids;
    int k = 0;
    std::uint64_t seed = 0;
    double inertia = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> inertia_history;  // after each assignment step
};

/// Lloyd's k-means with seeded farthest-point initialization: the first centre is a
/// uniformly drawn row, each further centre is the row farthest from all chosen centres.
/// A cluster that empties during iteration is re-seeded from the point farthest from its
/// assigned centre.
ClusterAssignment kmeans_cluster(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iter = 300);
inline ClusterAssignment kmeans_cluster(const EmbeddingMatrix& emb, int k, std::uint64_t seed, int max_iter = 300) {
    return kmeans_cluster(emb.rows(), k, seed, max_iter);
}

/// Hubert-Arabie adjusted Rand index. Both partitions identical up to relabeling -> 1.
double adjusted_rand_index(const std::vector<int>& truth, const std::vector<int>& clusters);

/// Mutual information normalized by the arithmetic mean of the two entropies.
/// Both partitions constant -> 1 by convention.
double normalized_mutual_info(const std::vector<int>& truth, const std::vector<int>& clusters);

/// Mean silhouette (Euclidean). Samples in singleton clusters score 0.
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& cluster_ids);
inline double silhouette(const EmbeddingMatrix& emb, const std::vector<int>& cluster_ids) {
    return silhouette(emb.rows(), cluster_ids);
}

/// Class x cluster counts. Rows follow `label_order`, columns 0..k-1 with k = max id + 1
/// (or `num_clusters` when larger).
std::vector<std::vector<std::size_t>> cluster_distribution(const std::vector<ClassLabel>& truth,
                                                           const std::vector<int>& cluster_ids,
                                                           const LabelSet& label_order, int num_clusters = 0);

struct ClusterReport {
    std::string encoder_name;
    double ari = 0.0;
    double nmi = 0.0;
    double silhouette = 0.0;
    LabelSet label_order;
    std::vector<std::vector<std::size_t>> distribution;

    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

/// k-means with k = number of classes present, then the three agreement metrics.
ClusterReport evaluate_clustering(const EmbeddingMatrix& emb, const std::vector<ClassLabel>& labels,
                                  std::uint64_t seed, int max_iter = 300);

struct CorrelationMatrix {
    LabelSet labels;
    Eigen::MatrixXd values;

    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

CorrelationMatrix centroid_cosine_matrix(const std::map<ClassLabel, Eigen::VectorXd>& centroids);

enum class ProjectionMethod { Pca, Tsne };

struct Projection2D {
    Eigen::MatrixXd points;  // n x 2
    std::string method;
    std::uint64_t seed = 0;
};

struct TsneOptions {
    double perplexity = 30.0;
    int iterations = 500;
    double learning_rate = 0.0;  // <= 0: max(n / 48, 50)
};

Projection2D project_2d(const Eigen::MatrixXd& points, ProjectionMethod method, std::uint64_t seed,
                        const TsneOptions& tsne = {});
inline Projection2D project_2d(const EmbeddingMatrix& emb, ProjectionMethod method, std::uint64_t seed) {
    return project_2d(emb.rows(), method, seed);
}

/// Writes `{id, x, y, label, cluster}` records, one JSON object per line.
void write_projection_points(const std::filesystem::path& path, const Projection2D& proj,
                             const std::vector<std::string>& ids, const std::vector<ClassLabel>& labels,
                             const std::vector<int>& clusters);

/// Scatter plot coloured by class.
std::string projection_svg(const Projection2D& proj, const std::vector<ClassLabel>& labels,
                           const std::string& title = "Embedding space");

}  // namespace mhc

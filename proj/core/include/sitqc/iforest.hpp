#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sitqc/features.hpp"

namespace sitqc {

/// Average path length of an unsuccessful search in a binary search tree of
/// n nodes: 2 H(n-1) - 2 (n-1)/n with H(i) ~ ln(i) + Euler's constant.
/// Edge conventions: c(0) = c(1) = 0, c(2) = 1.
double average_unsuccessful_search_depth(std::size_t n);

/// Anomaly score 2^(-mean_path / c_psi); returns 0.5 when c_psi <= 0
/// (a forest of bare roots carries no isolation information).
double iforest_score_from_mean_path(double mean_path, double c_psi);

struct IforestParams {
    int n_trees = 100;
    int subsample = 256;  // clamped to the training-set size
    std::uint64_t seed = 1;
    // Nominal expected outlier fraction. Recorded for provenance only:
    // scores are consumed raw against the pipeline threshold, not
    // re-thresholded by a contamination quantile.
    double contamination = 0.001;
};

struct IsolationTreeNode {
    // Internal: split_dim >= 0, value + child indices set.
    // External: split_dim == -1, size = training points that terminated here.
    std::int32_t split_dim = -1;
    double split_value = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t size = 0;
};

struct IsolationTree {
    std::vector<IsolationTreeNode> nodes;  // root at index 0

    /// Depth of the external node x falls into, plus c(size) of that node.
    double path_length(std::span<const double> x) const;
};

struct IsolationForest {
    std::vector<IsolationTree> trees;
    IforestParams params;
    int feature_dim = 0;
    int effective_subsample = 0;  // psi after clamping
    int height_limit = 0;         // ceil(log2(psi))
    double c_psi = 0.0;
    std::string feature_extractor_id;
    std::string feature_config_hash;

    double mean_path_length(std::span<const double> x) const;
    /// Anomaly score in (0, 1); higher = more anomalous.
    double score(std::span<const double> x) const;
};

/// Grow params.n_trees trees, each on a seeded without-replacement subsample
/// of psi rows. Rows are canonicalized by (clip_id, chunk_index, values)
/// before subsampling, so shuffling training-row order does not change the
/// model. Fully deterministic given (data, params).
IsolationForest fit_iforest(const FeatureMatrix& train, const IforestParams& params);

void save_iforest(const IsolationForest& forest, const std::filesystem::path& path);
IsolationForest load_iforest(const std::filesystem::path& path);

}  // namespace sitqc

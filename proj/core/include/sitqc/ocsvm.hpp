#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "sitqc/features.hpp"

namespace sitqc {

/// RBF kernel exp(-gamma ||x - y||^2). Dimensions must match.
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

struct OcsvmParams {
    // Upper bound on the training outlier fraction and lower bound on the
    // support-vector fraction. The default matches the common library
    // default and keeps the training decision range used for score
    // normalization well populated; tiny nu pins the range to a single
    // near-zero outlier and every novel clip saturates at score 1.
    double nu = 0.5;
    // <= 0 picks 1 / (16 * median pairwise squared distance) at fit time.
    double gamma = 0.0;
    double tolerance = 1e-6;
    std::size_t max_iterations = 100000;
};

/// One-class SVM with RBF kernel. The dual
///
///   min 1/2 sum_ij a_i a_j k(x_i, x_j)   s.t. 0 <= a_i <= 1/(nu l), sum a_i = 1
///
/// is solved by deterministic pairwise coordinate descent on the maximal
/// KKT-violating pair (ties broken by lowest index). Decision function
/// f(x) = sum_i a_i k(x_i, x) - rho; negative means outside the learned
/// region.
struct OcsvmModel {
    FeatureMatrix support_vectors;  // rows with alpha > 0, in training order
    std::vector<double> alpha;
    double rho = 0.0;
    double nu = 0.0;
    double gamma = 0.0;
    double tolerance = 1e-6;

    // Training decision-value range, used to normalize scores onto [0, 1].
    double train_decision_min = 0.0;
    double train_decision_max = 0.0;
    bool degenerate_score_range = false;  // min == max: every score is 0.5
    bool rho_from_bound_midpoint = false; // no interior alpha existed at fit

    // Fit diagnostics.
    std::size_t iterations = 0;
    double objective = 0.0;
    double train_outlier_fraction = 0.0;  // fraction with decision < 0
    double support_fraction = 0.0;        // fraction with alpha > 0

    double decision(std::span<const double> x) const;

    /// Min-max normalization of -decision against the training range,
    /// clamped to [0, 1]: the best-fitting training point maps to 0,
    /// anything at or below the worst training decision maps to 1.
    double anomaly_score(std::span<const double> x) const;
};

OcsvmModel fit_ocsvm(const FeatureMatrix& train, const OcsvmParams& params);

void save_ocsvm(const OcsvmModel& model, const std::filesystem::path& path);
OcsvmModel load_ocsvm(const std::filesystem::path& path);

}  // namespace sitqc

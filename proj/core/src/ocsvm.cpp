#include "sitqc/ocsvm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include <json.hpp>

#include "sitqc/errors.hpp"

namespace sitqc {

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    if (x.size() != y.size())
        throw DataError("ocsvm: kernel dimension mismatch (" + std::to_string(x.size()) +
                        " vs " + std::to_string(y.size()) + ")");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double OcsvmModel::decision(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != support_vectors.dim)
        throw DataError("ocsvm: vector dimension " + std::to_string(x.size()) +
                        " != model dimension " + std::to_string(support_vectors.dim));
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        sum += alpha[i] * rbf_kernel(support_vectors.rows[i].values, x, gamma);
    return sum - rho;
}

double OcsvmModel::anomaly_score(std::span<const double> x) const {
    if (degenerate_score_range) return 0.5;
    const double d = decision(x);
    const double range = train_decision_max - train_decision_min;
    return std::clamp((train_decision_max - d) / range, 0.0, 1.0);
}

OcsvmModel fit_ocsvm(const FeatureMatrix& train, const OcsvmParams& params) {
    const std::size_t l = train.size();
    if (l == 0) throw DataError("ocsvm: empty training set");
    if (train.dim <= 0) throw DataError("ocsvm: zero feature dimension");
    validate(train);
    if (!(params.nu > 0.0) || params.nu > 1.0)
        throw DataError("ocsvm: nu must be in (0, 1]");
    if (params.nu * static_cast<double>(l) < 1.0 - 1e-12)
        throw DataError("ocsvm: infeasible nu*l = " +
                        std::to_string(params.nu * static_cast<double>(l)) +
                        " < 1 (raise nu or add training rows)");
    double gamma = params.gamma;
    if (gamma <= 0.0) {
        // Distance-scaled default: 1 / (4 * median pairwise squared
        // distance), so the kernel length covers typical between-sample
        // spacing. A plain 1/D collapses to a near-constant kernel on
        // unstandardized features and the score normalization degenerates.
        std::vector<double> d2s;
        const std::size_t stride = l > 512 ? l / 512 + 1 : 1;
        for (std::size_t i = 0; i < l; i += stride)
            for (std::size_t j = i + stride; j < l; j += stride) {
                double d2 = 0.0;
                for (int d = 0; d < train.dim; ++d) {
                    const double dd = train.rows[i].values[static_cast<std::size_t>(d)] -
                                      train.rows[j].values[static_cast<std::size_t>(d)];
                    d2 += dd * dd;
                }
                d2s.push_back(d2);
            }
        double median_d2 = 0.0;
        if (!d2s.empty()) {
            std::nth_element(d2s.begin(), d2s.begin() + static_cast<std::ptrdiff_t>(d2s.size() / 2),
                             d2s.end());
            median_d2 = d2s[d2s.size() / 2];
        }
        gamma = median_d2 > 0.0 ? 1.0 / (16.0 * median_d2) : 1.0 / train.dim;
    }
    const double upper = 1.0 / (params.nu * static_cast<double>(l));  // box constraint

    // Dense Gram matrix; training sets here are small (tens to hundreds).
    std::vector<double> K(l * l);
    for (std::size_t i = 0; i < l; ++i) {
        K[i * l + i] = 1.0;
        for (std::size_t j = i + 1; j < l; ++j) {
            const double k = rbf_kernel(train.rows[i].values, train.rows[j].values, gamma);
            K[i * l + j] = k;
            K[j * l + i] = k;
        }
    }

    // Feasible symmetric start; g = K alpha is the dual gradient.
    std::vector<double> a(l, 1.0 / static_cast<double>(l));
    std::vector<double> g(l, 0.0);
    for (std::size_t i = 0; i < l; ++i) {
        const double* row = &K[i * l];
        double s = 0.0;
        for (std::size_t j = 0; j < l; ++j) s += row[j] * a[j];
        g[i] = s;
    }

#ifndef NDEBUG
    auto objective_of = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < l; ++i) s += a[i] * g[i];
        return 0.5 * s;
    };
    double last_objective = objective_of();
#endif

    // Pairwise coordinate descent on the maximal KKT-violating pair:
    // raise alpha at the smallest gradient below the box, lower it at the
    // largest gradient above zero. Ties break toward the lowest index.
    std::size_t iterations = 0;
    bool converged = false;
    for (; iterations < params.max_iterations; ++iterations) {
        std::size_t i_up = l, i_low = l;
        double g_up = std::numeric_limits<double>::infinity();
        double g_low = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < l; ++i) {
            if (a[i] < upper && g[i] < g_up) {
                g_up = g[i];
                i_up = i;
            }
            if (a[i] > 0.0 && g[i] > g_low) {
                g_low = g[i];
                i_low = i;
            }
        }
        if (i_up == l || i_low == l || g_low - g_up <= params.tolerance) {
            converged = true;
            break;
        }

        double eta = K[i_up * l + i_up] + K[i_low * l + i_low] - 2.0 * K[i_up * l + i_low];
        if (eta < 1e-12) eta = 1e-12;
        const double step = std::min({(g_low - g_up) / eta, upper - a[i_up], a[i_low]});

        a[i_up] += step;
        a[i_low] -= step;
        // Land exactly on the bounds so the working-set scan sees them.
        if (upper - a[i_up] < 1e-15 * upper) a[i_up] = upper;
        if (a[i_low] < 1e-15 * upper) a[i_low] = 0.0;

        const double* k_up = &K[i_up * l];
        const double* k_low = &K[i_low * l];
        for (std::size_t j = 0; j < l; ++j) g[j] += step * (k_up[j] - k_low[j]);

#ifndef NDEBUG
        if ((iterations & 127u) == 0) {
            const double obj = objective_of();
            assert(obj <= last_objective + 1e-9);
            last_objective = obj;
        }
#endif
    }
    if (!converged)
        throw ConvergenceError("ocsvm: no convergence after " +
                               std::to_string(params.max_iterations) + " iterations");

    // rho from margin support vectors; fall back to the midpoint of the
    // bound-derived KKT interval when none are strictly interior.
    double rho = 0.0;
    bool rho_from_bounds = false;
    {
        double margin_sum = 0.0;
        std::size_t margin_n = 0;
        double lb = -std::numeric_limits<double>::infinity();  // max g over alpha == upper
        double ub = std::numeric_limits<double>::infinity();   // min g over alpha == 0
        for (std::size_t i = 0; i < l; ++i) {
            if (a[i] > 0.0 && a[i] < upper) {
                margin_sum += g[i];
                ++margin_n;
            } else if (a[i] >= upper) {
                lb = std::max(lb, g[i]);
            } else {
                ub = std::min(ub, g[i]);
            }
        }
        if (margin_n > 0) {
            rho = margin_sum / static_cast<double>(margin_n);
        } else {
            rho_from_bounds = true;
            if (std::isfinite(lb) && std::isfinite(ub))
                rho = 0.5 * (lb + ub);
            else if (std::isfinite(lb))
                rho = lb;
            else
                rho = ub;
        }
    }

    OcsvmModel model;
    model.nu = params.nu;
    model.gamma = gamma;
    model.tolerance = params.tolerance;
    model.rho = rho;
    model.rho_from_bound_midpoint = rho_from_bounds;
    model.iterations = iterations;
    {
        double s = 0.0;
        for (std::size_t i = 0; i < l; ++i) s += a[i] * g[i];
        model.objective = 0.5 * s;
    }

    double d_min = std::numeric_limits<double>::infinity();
    double d_max = -std::numeric_limits<double>::infinity();
    std::size_t outliers = 0, svs = 0;
    for (std::size_t i = 0; i < l; ++i) {
        const double d = g[i] - rho;
        d_min = std::min(d_min, d);
        d_max = std::max(d_max, d);
        // Margin support vectors sit at decision 0 up to solver tolerance;
        // only genuinely negative decisions count as training outliers.
        if (d < -10.0 * params.tolerance) ++outliers;
        if (a[i] > 0.0) ++svs;
    }
    model.train_decision_min = d_min;
    model.train_decision_max = d_max;
    model.degenerate_score_range = !(d_max - d_min > 1e-12);
    model.train_outlier_fraction = static_cast<double>(outliers) / static_cast<double>(l);
    model.support_fraction = static_cast<double>(svs) / static_cast<double>(l);

    model.support_vectors.dim = train.dim;
    model.support_vectors.extractor_id = train.extractor_id;
    model.support_vectors.config_hash = train.config_hash;
    for (std::size_t i = 0; i < l; ++i) {
        if (a[i] > 0.0) {
            model.support_vectors.rows.push_back(train.rows[i]);
            model.alpha.push_back(a[i]);
        }
    }
    return model;
}

void save_ocsvm(const OcsvmModel& model, const std::filesystem::path& path) {
    nlohmann::json svs = nlohmann::json::array();
    for (const auto& row : model.support_vectors.rows)
        svs.push_back({{"clip_id", row.clip_id}, {"chunk_index", row.chunk_index},
                       {"values", row.values}});

    const nlohmann::json doc = {
        {"schema_version", 1},
        {"model", "sitqc-ocsvm"},
        {"nu", model.nu},
        {"gamma", model.gamma},
        {"tolerance", model.tolerance},
        {"rho", model.rho},
        {"alpha", model.alpha},
        {"train_decision_min", model.train_decision_min},
        {"train_decision_max", model.train_decision_max},
        {"degenerate_score_range", model.degenerate_score_range},
        {"rho_from_bound_midpoint", model.rho_from_bound_midpoint},
        {"iterations", model.iterations},
        {"objective", model.objective},
        {"train_outlier_fraction", model.train_outlier_fraction},
        {"support_fraction", model.support_fraction},
        {"feature",
         {{"dim", model.support_vectors.dim},
          {"extractor_id", model.support_vectors.extractor_id},
          {"config_hash", model.support_vectors.config_hash}}},
        {"support_vectors", std::move(svs)},
    };

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("ocsvm: cannot open for writing: " + path.string());
    f << doc.dump() << '\n';
    if (!f) throw IoError("ocsvm: write failed: " + path.string());
}

OcsvmModel load_ocsvm(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("ocsvm: missing file " + path.string());
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("ocsvm: malformed model file " + path.string() + ": " + e.what());
    }
    try {
        if (doc.at("model").get<std::string>() != "sitqc-ocsvm")
            throw IoError("ocsvm: not an ocsvm model: " + path.string());
        if (doc.at("schema_version").get<int>() != 1)
            throw IoError("ocsvm: unsupported schema version in " + path.string());

        OcsvmModel model;
        model.nu = doc.at("nu").get<double>();
        model.gamma = doc.at("gamma").get<double>();
        model.tolerance = doc.at("tolerance").get<double>();
        model.rho = doc.at("rho").get<double>();
        model.alpha = doc.at("alpha").get<std::vector<double>>();
        model.train_decision_min = doc.at("train_decision_min").get<double>();
        model.train_decision_max = doc.at("train_decision_max").get<double>();
        model.degenerate_score_range = doc.at("degenerate_score_range").get<bool>();
        model.rho_from_bound_midpoint = doc.at("rho_from_bound_midpoint").get<bool>();
        model.iterations = doc.at("iterations").get<std::size_t>();
        model.objective = doc.at("objective").get<double>();
        model.train_outlier_fraction = doc.at("train_outlier_fraction").get<double>();
        model.support_fraction = doc.at("support_fraction").get<double>();

        const auto& feat = doc.at("feature");
        model.support_vectors.dim = feat.at("dim").get<int>();
        model.support_vectors.extractor_id = feat.at("extractor_id").get<std::string>();
        model.support_vectors.config_hash = feat.at("config_hash").get<std::string>();
        for (const auto& sv : doc.at("support_vectors")) {
            FeatureVector row;
            row.clip_id = sv.at("clip_id").get<std::string>();
            row.chunk_index = sv.at("chunk_index").get<std::size_t>();
            row.values = sv.at("values").get<std::vector<double>>();
            model.support_vectors.rows.push_back(std::move(row));
        }
        if (model.alpha.size() != model.support_vectors.rows.size())
            throw IoError("ocsvm: alpha/support-vector count mismatch in " + path.string());
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("ocsvm: malformed model file " + path.string() + ": " + e.what());
    }
}

}  // namespace sitqc

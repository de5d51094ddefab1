#include "sitqc/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "sitqc/errors.hpp"
#include "sitqc/rng.hpp"

namespace sitqc {

double average_unsuccessful_search_depth(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;  // the harmonic estimate misbehaves at n = 2
    constexpr double euler_gamma = 0.5772156649;
    const auto x = static_cast<double>(n - 1);
    return 2.0 * (std::log(x) + euler_gamma) - 2.0 * x / static_cast<double>(n);
}

double iforest_score_from_mean_path(double mean_path, double c_psi) {
    if (!(c_psi > 0.0)) return 0.5;
    return std::exp2(-mean_path / c_psi);
}

double IsolationTree::path_length(std::span<const double> x) const {
    std::int32_t node = 0;
    double depth = 0.0;
    while (nodes[static_cast<std::size_t>(node)].split_dim >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.split_dim)] < n.split_value ? n.left : n.right;
        depth += 1.0;
    }
    return depth + average_unsuccessful_search_depth(
                       static_cast<std::size_t>(nodes[static_cast<std::size_t>(node)].size));
}

double IsolationForest::mean_path_length(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != feature_dim)
        throw DataError("iforest: vector dimension " + std::to_string(x.size()) +
                        " != model dimension " + std::to_string(feature_dim));
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.path_length(x);
    return trees.empty() ? 0.0 : sum / static_cast<double>(trees.size());
}

double IsolationForest::score(std::span<const double> x) const {
    return iforest_score_from_mean_path(mean_path_length(x), c_psi);
}

namespace {

struct TreeBuilder {
    const std::vector<const FeatureVector*>& rows;
    int dim;
    int height_limit;
    Rng& rng;
    std::vector<IsolationTreeNode> nodes;

    // indices: row ids of the node's subset; partitioned in place.
    std::int32_t build(std::span<std::size_t> indices, int depth) {
        const auto id = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();
        if (depth >= height_limit || indices.size() <= 1) {
            nodes[static_cast<std::size_t>(id)].size = static_cast<std::int32_t>(indices.size());
            return id;
        }

        // Split dimension uniform over D; constant dimensions are redrawn.
        // If every dimension is constant the subset is unsplittable.
        std::vector<bool> known_constant(static_cast<std::size_t>(dim), false);
        int known = 0;
        int split_dim = -1;
        double lo = 0.0, hi = 0.0;
        while (known < dim) {
            const auto d = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(dim)));
            if (known_constant[d]) continue;
            lo = hi = rows[indices[0]]->values[d];
            for (std::size_t i : indices) {
                const double v = rows[i]->values[d];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi > lo) {
                split_dim = static_cast<int>(d);
                break;
            }
            known_constant[d] = true;
            ++known;
        }
        if (split_dim < 0) {
            nodes[static_cast<std::size_t>(id)].size = static_cast<std::int32_t>(indices.size());
            return id;
        }

        // Strictly interior split point. Adjacent-double ranges may admit no
        // interior value; such a dimension is effectively constant.
        double split = lo;
        for (int attempt = 0; attempt < 16; ++attempt) {
            split = lo + rng.uniform() * (hi - lo);
            if (split > lo && split < hi) break;
        }
        if (!(split > lo && split < hi)) {
            nodes[static_cast<std::size_t>(id)].size = static_cast<std::int32_t>(indices.size());
            return id;
        }

        // Stable two-way partition keeps traversal order platform-independent.
        std::vector<std::size_t> left, right;
        left.reserve(indices.size());
        right.reserve(indices.size());
        for (std::size_t i : indices) {
            if (rows[i]->values[static_cast<std::size_t>(split_dim)] < split)
                left.push_back(i);
            else
                right.push_back(i);
        }
        std::copy(left.begin(), left.end(), indices.begin());
        std::copy(right.begin(), right.end(), indices.begin() + static_cast<std::ptrdiff_t>(left.size()));

        nodes[static_cast<std::size_t>(id)].split_dim = split_dim;
        nodes[static_cast<std::size_t>(id)].split_value = split;
        const std::int32_t l = build(indices.subspan(0, left.size()), depth + 1);
        const std::int32_t r = build(indices.subspan(left.size()), depth + 1);
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

}  // namespace

IsolationForest fit_iforest(const FeatureMatrix& train, const IforestParams& params) {
    if (train.empty()) throw DataError("iforest: empty training set");
    if (train.dim <= 0) throw DataError("iforest: zero feature dimension");
    validate(train);
    if (params.n_trees < 1) throw DataError("iforest: need at least one tree");
    if (params.subsample < 1) throw DataError("iforest: subsample must be positive");

    const std::size_t n = train.size();
    const auto psi = static_cast<std::size_t>(
        std::min<std::size_t>(static_cast<std::size_t>(params.subsample), n));

    // Canonical row order (id, then content) makes the fit invariant to
    // shuffles of the input rows.
    std::vector<const FeatureVector*> rows;
    rows.reserve(n);
    for (const auto& r : train.rows) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [](const FeatureVector* a, const FeatureVector* b) {
        if (a->clip_id != b->clip_id) return a->clip_id < b->clip_id;
        if (a->chunk_index != b->chunk_index) return a->chunk_index < b->chunk_index;
        return std::lexicographical_compare(a->values.begin(), a->values.end(),
                                            b->values.begin(), b->values.end());
    });

    IsolationForest forest;
    forest.params = params;
    forest.feature_dim = train.dim;
    forest.effective_subsample = static_cast<int>(psi);
    forest.height_limit =
        psi <= 1 ? 0 : static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));
    forest.c_psi = average_unsuccessful_search_depth(psi);
    forest.feature_extractor_id = train.extractor_id;
    forest.feature_config_hash = train.config_hash;
    forest.trees.reserve(static_cast<std::size_t>(params.n_trees));

    std::vector<std::size_t> order(n);
    for (int t = 0; t < params.n_trees; ++t) {
        // Child seed per tree, so growing trees in parallel would not change
        // the result.
        Rng rng(Rng::derive(params.seed, static_cast<std::uint64_t>(t)));
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = rng.below(i + 1);
            std::swap(order[i], order[j]);
        }
        std::vector<std::size_t> sample(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(psi));

        TreeBuilder builder{rows, train.dim, forest.height_limit, rng, {}};
        builder.nodes.reserve(2 * psi);
        builder.build(sample, 0);
        forest.trees.push_back(IsolationTree{std::move(builder.nodes)});
    }
    return forest;
}

void save_iforest(const IsolationForest& forest, const std::filesystem::path& path) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            if (n.split_dim < 0)
                nodes.push_back({-1, n.size});
            else
                nodes.push_back({n.split_dim, n.split_value, n.left, n.right});
        }
        trees.push_back(std::move(nodes));
    }

    const nlohmann::json doc = {
        {"schema_version", 1},
        {"model", "sitqc-iforest"},
        {"params",
         {{"n_trees", forest.params.n_trees},
          {"subsample", forest.params.subsample},
          {"seed", forest.params.seed},
          {"contamination", forest.params.contamination}}},
        {"feature_dim", forest.feature_dim},
        {"effective_subsample", forest.effective_subsample},
        {"height_limit", forest.height_limit},
        {"c_psi", forest.c_psi},
        {"feature",
         {{"extractor_id", forest.feature_extractor_id},
          {"config_hash", forest.feature_config_hash}}},
        {"trees", std::move(trees)},
    };

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("iforest: cannot open for writing: " + path.string());
    f << doc.dump() << '\n';
    if (!f) throw IoError("iforest: write failed: " + path.string());
}

IsolationForest load_iforest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("iforest: missing file " + path.string());
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("iforest: malformed model file " + path.string() + ": " + e.what());
    }
    try {
        if (doc.at("model").get<std::string>() != "sitqc-iforest")
            throw IoError("iforest: not an iforest model: " + path.string());
        if (doc.at("schema_version").get<int>() != 1)
            throw IoError("iforest: unsupported schema version in " + path.string());

        IsolationForest forest;
        const auto& p = doc.at("params");
        forest.params.n_trees = p.at("n_trees").get<int>();
        forest.params.subsample = p.at("subsample").get<int>();
        forest.params.seed = p.at("seed").get<std::uint64_t>();
        forest.params.contamination = p.at("contamination").get<double>();
        forest.feature_dim = doc.at("feature_dim").get<int>();
        forest.effective_subsample = doc.at("effective_subsample").get<int>();
        forest.height_limit = doc.at("height_limit").get<int>();
        forest.c_psi = doc.at("c_psi").get<double>();
        forest.feature_extractor_id = doc.at("feature").at("extractor_id").get<std::string>();
        forest.feature_config_hash = doc.at("feature").at("config_hash").get<std::string>();

        for (const auto& tnodes : doc.at("trees")) {
            IsolationTree tree;
            tree.nodes.reserve(tnodes.size());
            for (const auto& n : tnodes) {
                IsolationTreeNode node;
                if (n.at(0).get<int>() < 0) {
                    node.size = n.at(1).get<std::int32_t>();
                } else {
                    node.split_dim = n.at(0).get<std::int32_t>();
                    node.split_value = n.at(1).get<double>();
                    node.left = n.at(2).get<std::int32_t>();
                    node.right = n.at(3).get<std::int32_t>();
                }
                tree.nodes.push_back(node);
            }
            forest.trees.push_back(std::move(tree));
        }
        return forest;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("iforest: malformed model file " + path.string() + ": " + e.what());
    }
}

}  // namespace sitqc

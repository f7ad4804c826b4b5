#include "drx/inducers.hpp"

#include "drx/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace drx {

int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = static_cast<int>(i);
    }
    return best;
}

std::size_t ClassifierModel::input_dim() const {
    if (const auto* nn = std::get_if<NnPayload>(&payload)) return nn->features.cols();
    if (const auto* nb = std::get_if<NbPayload>(&payload)) return nb->means.cols();
    // Trees only record split features; the dimension check is per-split.
    const auto& nodes = std::get<TreePayload>(payload).nodes;
    std::size_t max_feature = 0;
    for (const auto& node : nodes) {
        if (node.feature >= 0) {
            max_feature = std::max(max_feature, static_cast<std::size_t>(node.feature) + 1);
        }
    }
    return max_feature;
}

namespace {

void validate_training_input(const Matrix& features, const std::vector<int>& labels,
                             const std::vector<double>* weights, const InducerParams& params) {
    if (features.rows() == 0) throw DataError("train: empty training set");
    if (labels.size() != features.rows()) throw ShapeError("train: labels length mismatch");
    if (params.class_count < 1) throw DataError("train: class_count must be >= 1");
    for (int y : labels) {
        if (y < 0 || y >= params.class_count) throw DataError("train: label out of range");
    }
    if (weights != nullptr) {
        if (weights->size() != features.rows()) {
            throw ShapeError("train: weights length mismatch");
        }
        double sum = 0.0;
        for (double w : *weights) {
            if (w < 0.0) throw DataError("train: negative instance weight");
            sum += w;
        }
        if (!(sum > 0.0)) throw DataError("train: weights sum to zero");
    }
}

// Weights rescaled to total N: Laplace smoothing and min_leaf then behave
// like plain counts, and any positive rescaling of the input weights trains
// an identical model.
std::vector<double> effective_weights(std::size_t n, const std::vector<double>* weights) {
    std::vector<double> w(n, 1.0);
    if (weights != nullptr) {
        const double sum = std::accumulate(weights->begin(), weights->end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = (*weights)[i] * static_cast<double>(n) / sum;
        }
    }
    return w;
}

double entropy(const std::vector<double>& class_weights, double total) {
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (double w : class_weights) {
        if (w > 0.0) {
            const double p = w / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

struct TreeBuilder {
    const Matrix& features;
    const std::vector<int>& labels;
    const std::vector<double>& weights;
    const InducerParams& params;
    std::vector<TreeNode> nodes;

    std::size_t build(std::vector<std::size_t>& rows) {
        const int c = params.class_count;
        std::vector<double> class_w(static_cast<std::size_t>(c), 0.0);
        double total_w = 0.0;
        for (std::size_t r : rows) {
            class_w[static_cast<std::size_t>(labels[r])] += weights[r];
            total_w += weights[r];
        }

        const bool pure = std::count_if(class_w.begin(), class_w.end(),
                                        [](double w) { return w > 0.0; }) <= 1;
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = 1e-12;
        if (!pure && rows.size() >= 2 * static_cast<std::size_t>(params.min_leaf)) {
            find_best_split(rows, class_w, total_w, best_feature, best_threshold, best_gain);
        }

        if (best_feature < 0) {
            TreeNode leaf;
            leaf.probs.resize(static_cast<std::size_t>(c));
            for (int y = 0; y < c; ++y) {
                leaf.probs[static_cast<std::size_t>(y)] =
                    (class_w[static_cast<std::size_t>(y)] + 1.0) / (total_w + c);
            }
            nodes.push_back(std::move(leaf));
            return nodes.size() - 1;
        }

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t r : rows) {
            if (features(r, static_cast<std::size_t>(best_feature)) <= best_threshold) {
                left_rows.push_back(r);
            } else {
                right_rows.push_back(r);
            }
        }
        rows.clear();
        rows.shrink_to_fit();

        const std::size_t self = nodes.size();
        nodes.emplace_back();
        nodes[self].feature = best_feature;
        nodes[self].threshold = best_threshold;
        const std::size_t left = build(left_rows);
        const std::size_t right = build(right_rows);
        nodes[self].left = left;
        nodes[self].right = right;
        return self;
    }

    // Weighted information gain over midpoint thresholds. Ties resolved by
    // lowest feature index, then lowest threshold, so the tree does not
    // depend on training-row order.
    void find_best_split(const std::vector<std::size_t>& rows, const std::vector<double>& class_w,
                         double total_w, int& best_feature, double& best_threshold,
                         double& best_gain) const {
        const int c = params.class_count;
        const double parent_entropy = entropy(class_w, total_w);
        std::vector<std::size_t> order(rows);

        for (std::size_t f = 0; f < features.cols(); ++f) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return features(a, f) < features(b, f);
            });

            std::vector<double> left_w(static_cast<std::size_t>(c), 0.0);
            double left_total = 0.0;
            std::size_t left_count = 0;
            std::size_t i = 0;
            while (i < order.size()) {
                // Consume the whole group of equal values.
                const double value = features(order[i], f);
                while (i < order.size() && features(order[i], f) == value) {
                    left_w[static_cast<std::size_t>(labels[order[i]])] += weights[order[i]];
                    left_total += weights[order[i]];
                    ++left_count;
                    ++i;
                }
                if (i == order.size()) break;
                if (left_count < static_cast<std::size_t>(params.min_leaf) ||
                    order.size() - left_count < static_cast<std::size_t>(params.min_leaf)) {
                    continue;
                }
                std::vector<double> right_w(static_cast<std::size_t>(c));
                for (int y = 0; y < c; ++y) {
                    right_w[static_cast<std::size_t>(y)] =
                        class_w[static_cast<std::size_t>(y)] - left_w[static_cast<std::size_t>(y)];
                }
                const double right_total = total_w - left_total;
                const double gain = parent_entropy -
                                    (left_total / total_w) * entropy(left_w, left_total) -
                                    (right_total / total_w) * entropy(right_w, right_total);
                // Candidates are visited in ascending (feature, threshold)
                // order, so requiring a strict improvement implements the
                // lowest-feature, lowest-threshold tie-break; the slack
                // absorbs summation-order noise.
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (value + features(order[i], f));
                }
            }
        }
    }
};

ClassifierModel train_tree(const Matrix& features, const std::vector<int>& labels,
                           const std::vector<double>& weights, const InducerParams& params) {
    TreeBuilder builder{features, labels, weights, params, {}};
    std::vector<std::size_t> all(features.rows());
    std::iota(all.begin(), all.end(), 0);
    builder.build(all);
    ClassifierModel model;
    model.kind = InducerKind::tree;
    model.class_count = params.class_count;
    model.payload = TreePayload{std::move(builder.nodes)};
    return model;
}

ClassifierModel train_nb(const Matrix& features, const std::vector<int>& labels,
                         const std::vector<double>& weights, const InducerParams& params) {
    const std::size_t c = static_cast<std::size_t>(params.class_count);
    const std::size_t n = features.cols();
    NbPayload nb;
    nb.priors.assign(c, 0.0);
    nb.means = Matrix(c, n);
    nb.variances = Matrix(c, n);

    std::vector<double> class_w(c, 0.0);
    double total_w = 0.0;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        class_w[static_cast<std::size_t>(labels[i])] += weights[i];
        total_w += weights[i];
        for (std::size_t f = 0; f < n; ++f) {
            nb.means(static_cast<std::size_t>(labels[i]), f) += weights[i] * features(i, f);
        }
    }
    for (std::size_t y = 0; y < c; ++y) {
        nb.priors[y] = class_w[y] / total_w;
        if (class_w[y] > 0.0) {
            for (std::size_t f = 0; f < n; ++f) nb.means(y, f) /= class_w[y];
        }
    }
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto y = static_cast<std::size_t>(labels[i]);
        for (std::size_t f = 0; f < n; ++f) {
            const double dev = features(i, f) - nb.means(y, f);
            nb.variances(y, f) += weights[i] * dev * dev;
        }
    }
    for (std::size_t y = 0; y < c; ++y) {
        for (std::size_t f = 0; f < n; ++f) {
            const double v = class_w[y] > 0.0 ? nb.variances(y, f) / class_w[y] : 0.0;
            nb.variances(y, f) = std::max(v, 1e-9);
        }
    }

    ClassifierModel model;
    model.kind = InducerKind::nb;
    model.class_count = params.class_count;
    model.payload = std::move(nb);
    return model;
}

} // namespace

ClassifierModel train(InducerKind kind, const Matrix& features, const std::vector<int>& labels,
                      const std::vector<double>* weights, const InducerParams& params) {
    validate_training_input(features, labels, weights, params);
    switch (kind) {
    case InducerKind::nn: {
        ClassifierModel model;
        model.kind = InducerKind::nn;
        model.class_count = params.class_count;
        model.payload = NnPayload{features, labels};
        return model;
    }
    case InducerKind::tree:
        return train_tree(features, labels, effective_weights(features.rows(), weights), params);
    case InducerKind::nb:
        return train_nb(features, labels, effective_weights(features.rows(), weights), params);
    }
    throw DataError("train: unknown inducer kind");
}

std::vector<double> predict_proba(const ClassifierModel& model, std::span<const double> x) {
    const std::size_t c = static_cast<std::size_t>(model.class_count);

    if (const auto* nn = std::get_if<NnPayload>(&model.payload)) {
        if (x.size() != nn->features.cols()) {
            std::ostringstream msg;
            msg << "predict: point has " << x.size() << " features, model expects "
                << nn->features.cols();
            throw ShapeError(msg.str());
        }
        std::size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nn->features.rows(); ++i) {
            const double d = squared_distance(x, nn->features.row(i));
            if (d < best_dist) { // strict: distance ties keep the lowest index
                best_dist = d;
                best = i;
            }
        }
        std::vector<double> probs(c, 0.0);
        probs[static_cast<std::size_t>(nn->labels[best])] = 1.0;
        return probs;
    }

    if (const auto* tree = std::get_if<TreePayload>(&model.payload)) {
        std::size_t node = 0;
        while (tree->nodes[node].feature >= 0) {
            const auto f = static_cast<std::size_t>(tree->nodes[node].feature);
            if (f >= x.size()) {
                std::ostringstream msg;
                msg << "predict: point has " << x.size() << " features, tree splits on feature "
                    << f;
                throw ShapeError(msg.str());
            }
            node = x[f] <= tree->nodes[node].threshold ? tree->nodes[node].left
                                                       : tree->nodes[node].right;
        }
        return tree->nodes[node].probs;
    }

    const auto& nb = std::get<NbPayload>(model.payload);
    if (x.size() != nb.means.cols()) {
        std::ostringstream msg;
        msg << "predict: point has " << x.size() << " features, model expects "
            << nb.means.cols();
        throw ShapeError(msg.str());
    }
    std::vector<double> log_post(c, -std::numeric_limits<double>::infinity());
    for (std::size_t y = 0; y < c; ++y) {
        if (nb.priors[y] <= 0.0) continue;
        double lp = std::log(nb.priors[y]);
        for (std::size_t f = 0; f < x.size(); ++f) {
            const double var = nb.variances(y, f);
            const double dev = x[f] - nb.means(y, f);
            lp += -0.5 * std::log(2.0 * std::numbers::pi * var) - dev * dev / (2.0 * var);
        }
        log_post[y] = lp;
    }
    const double peak = *std::max_element(log_post.begin(), log_post.end());
    std::vector<double> probs(c, 0.0);
    double total = 0.0;
    for (std::size_t y = 0; y < c; ++y) {
        if (std::isfinite(log_post[y])) {
            probs[y] = std::exp(log_post[y] - peak);
            total += probs[y];
        }
    }
    for (double& p : probs) p /= total;
    return probs;
}

int predict_class(const ClassifierModel& model, std::span<const double> x) {
    const std::vector<double> probs = predict_proba(model, x);
    return argmax_lowest(probs);
}

} // namespace drx

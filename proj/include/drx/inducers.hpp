#pragma once

#include "drx/matrix.hpp"

#include <span>
#include <variant>
#include <vector>

namespace drx {

enum class InducerKind { nn, tree, nb };

struct NnPayload {
    Matrix features;
    std::vector<int> labels;

    bool operator==(const NnPayload&) const = default;
};

/// Binary numeric-split node; feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::vector<double> probs; // leaf class distribution, Laplace smoothed

    bool operator==(const TreeNode&) const = default;
};

struct TreePayload {
    std::vector<TreeNode> nodes; // root at index 0

    bool operator==(const TreePayload&) const = default;
};

struct NbPayload {
    std::vector<double> priors; // C
    Matrix means;               // C x n
    Matrix variances;           // C x n, floored

    bool operator==(const NbPayload&) const = default;
};

struct ClassifierModel {
    InducerKind kind = InducerKind::nn;
    int class_count = 0;
    std::variant<NnPayload, TreePayload, NbPayload> payload;

    std::size_t input_dim() const;

    bool operator==(const ClassifierModel&) const = default;
};

struct InducerParams {
    int class_count = 0; // required; folds may miss classes
    int min_leaf = 2;
};

/// Trains one of the three base learners. weights (when given) must be
/// non-negative with a positive sum; the nearest-neighbor inducer ignores
/// them (boosting handles it by resampling upstream).
ClassifierModel train(InducerKind kind, const Matrix& features, const std::vector<int>& labels,
                      const std::vector<double>* weights, const InducerParams& params);

/// Probability vector over classes: non-negative, sums to 1.
std::vector<double> predict_proba(const ClassifierModel& model, std::span<const double> x);

/// Argmax of predict_proba; ties go to the lowest class index.
int predict_class(const ClassifierModel& model, std::span<const double> x);

int argmax_lowest(std::span<const double> values);

} // namespace drx

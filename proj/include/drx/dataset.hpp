#pragma once

#include "drx/matrix.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drx {

/// Labeled dataset: N x n feature matrix plus class indices into class_names.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
    int class_count() const { return static_cast<int>(class_names.size()); }

    bool operator==(const Dataset&) const = default;
};

/// Stratified cross-validation fold assignment, one fold index per instance.
struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;
    std::uint64_t seed = 0;
};

/// Per-feature location/scale record; scale 0 marks a constant column.
struct StandardizeRecord {
    std::vector<double> means;
    std::vector<double> scales;

    std::vector<double> apply(std::span<const double> x) const;

    bool operator==(const StandardizeRecord&) const = default;
};

/// Loads a CSV with a header row. label_column names the class column;
/// empty means the last column. Class names keep first-appearance order.
Dataset load_csv(const std::string& path, const std::string& label_column = "");

/// ARFF subset: numeric attributes plus exactly one nominal class attribute.
Dataset load_arff(const std::string& path);

void save_csv(const Dataset& d, const std::string& path,
              const std::string& label_name = "class");

/// Zero-mean unit-variance transform (population stdev, denominator N).
/// Constant columns map to zero.
std::pair<Dataset, StandardizeRecord> standardize(const Dataset& d);

Dataset apply_standardize(const Dataset& d, const StandardizeRecord& rec);

FoldPlan stratified_folds(const Dataset& d, int k, std::uint64_t seed);

/// Test fixture generator: class c is an isotropic Gaussian centered at
/// c along the first coordinate.
Dataset make_gaussian_blobs(std::size_t n_per_class, std::size_t n_features,
                            int class_count, double spread, std::uint64_t seed);

/// Rows of d selected by `indices`, preserving order (labels carried along).
Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& indices);

} // namespace drx

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "negm/matrix.hpp"
#include "negm/rng.hpp"

namespace negm {

enum class ColumnKind { numeric, categorical, binary };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
};

struct TableSchema {
    std::vector<ColumnSpec> columns;  // feature columns, in file order
    std::string label_column = "label";
};

// The 41-column KDD network-intrusion layout plus a trailing label column.
TableSchema kdd_schema();

struct RawTable {
    TableSchema schema;
    // Numeric/binary columns hold parsed doubles; categorical columns hold
    // the raw strings. Indexed by schema column order.
    std::vector<std::vector<double>> numeric_columns;
    std::vector<std::vector<std::string>> categorical_columns;
    std::vector<std::string> labels;
    std::size_t row_count = 0;
};

RawTable load_csv(const std::string& path, const TableSchema& schema);

struct FeatureMatrix {
    Matrix data;
    std::vector<std::string> labels;       // one per row
    std::vector<std::string> class_names;  // order of first appearance

    void rebuild_class_names();
    std::vector<std::size_t> rows_of_class(const std::string& name) const;
};

void save_feature_matrix(const FeatureMatrix& fm, const std::string& path);
FeatureMatrix load_feature_matrix(const std::string& path);

// One-hot encoder fitted on training data and reapplied to later batches.
// Unseen categories at transform time map to all-zero blocks and are tallied.
class Encoder {
public:
    struct DropPolicy {
        std::vector<std::string> drop_columns;  // by name, in addition to zero-variance
    };

    static Encoder fit(const RawTable& table, const DropPolicy& policy);
    FeatureMatrix transform(const RawTable& table) const;

    std::size_t encoded_width() const { return width_; }
    std::size_t unseen_category_count() const { return unseen_tally_; }
    const std::vector<std::string>& dropped_columns() const { return dropped_; }

private:
    TableSchema schema_;
    std::vector<bool> keep_;                              // per schema column
    std::vector<std::vector<std::string>> categories_;    // per column, sorted
    std::vector<std::string> dropped_;
    std::size_t width_ = 0;
    mutable std::size_t unseen_tally_ = 0;
};

FeatureMatrix encode(const RawTable& table, const Encoder::DropPolicy& policy);

// Per-column min-max map of the training data onto [-1, 1]; later data is
// clipped into range. Fit on training data only.
class Normalizer {
public:
    Normalizer() = default;

    static Normalizer fit(const FeatureMatrix& train);
    FeatureMatrix apply(const FeatureMatrix& fm) const;
    Matrix apply(const Matrix& m) const;
    Matrix invert(const Matrix& m) const;

    bool fitted() const { return fitted_; }
    const std::vector<double>& minimums() const { return min_; }
    const std::vector<double>& maximums() const { return max_; }
    void restore(std::vector<double> minimums, std::vector<double> maximums);

private:
    std::vector<double> min_;
    std::vector<double> max_;
    bool fitted_ = false;
};

struct SplitSpec {
    std::vector<std::string> known_classes;
    std::vector<std::string> unknown_classes;
    double known_test_fraction = 0.20;
    std::uint64_t seed = 0;
};

struct Split {
    FeatureMatrix train;  // known classes only
    FeatureMatrix test;   // held-out knowns plus every unknown instance, shuffled
};

Split build_splits(const FeatureMatrix& data, const SplitSpec& spec);

struct SyntheticSpec {
    std::size_t n_clusters = 16;
    std::size_t instances_per_cluster = 625;
    std::size_t dimension = 121;
    double mean_range = 3.0;        // means uniform in [-mean_range, mean_range]^d
    double scale_min = 0.5;         // per-axis standard deviations
    double scale_max = 1.5;
    double noise_fraction = 0.05;   // share of points redrawn at inflated variance
    double noise_multiplier = 9.0;  // variance multiplier for those points
    std::uint64_t seed = 0;

    void validate() const;
};

FeatureMatrix generate_synthetic(const SyntheticSpec& spec);

}  // namespace negm

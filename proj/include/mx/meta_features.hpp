#pragma once

// Dataset meta-feature extraction. The extractor set is fixed: three simple
// counts, four moment statistics averaged over numeric features, two
// information measures, and two landmarkers (depth-1 tree and 1-NN scored on
// a deterministic 70/30 holdout). Undefined entries (no numeric features,
// zero-variance moments, empty holdout) come back as NaN and are filled in
// later by the median imputer fitted on training datasets.

#include <cstdint>
#include <string>
#include <vector>

#include "mx/corpus.hpp"
#include "mx/table.hpp"

namespace mx {

struct MetaFeatureExtraction {
    MetaFeatureVector vector;
    // Degenerate inputs (constant target, no categorical features, ...)
    // are legal but worth reporting.
    std::vector<std::string> notes;
};

/// The fixed names, in emission order.
const std::vector<std::string>& meta_feature_names();

/// Computes the 11 meta-features of a table. `task` decides n_classes
/// (0 for regression) and whether the landmarkers report accuracy or R².
/// The holdout split for the landmarkers is seeded and reproducible.
MetaFeatureExtraction extract_meta_features(const TableData& table,
                                            const std::string& target_column,
                                            TaskKind task,
                                            std::uint64_t seed = 42);

/// Per-feature medians learned on training datasets only.
struct ImputerStats {
    std::vector<std::string> names;
    std::vector<double> medians;
    std::vector<std::size_t> n_missing_fit;  // NaN count per feature in the fit set
};

/// Fits medians over the finite entries of each feature. A feature that is
/// NaN in every fit vector gets median 0.
ImputerStats fit_imputer(const std::vector<const MetaFeatureVector*>& fit_set);

/// Replaces NaN entries by the fitted medians; returns how many were filled.
std::size_t apply_imputer(const ImputerStats& stats, MetaFeatureVector& mf);

}  // namespace mx

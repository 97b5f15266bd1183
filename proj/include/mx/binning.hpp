#pragma once

// Numeric literals are not walkable, so each property's numbers are turned
// into a small set of bin entities: LOF-based outlier deletion first, then
// equal-width bins over the surviving range.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mx/kg.hpp"

namespace mx {

struct PropertyBinning {
    std::string predicate;
    std::size_t bin_count = 1;
    // bin_count+1 ascending edges; a single distinct value degenerates to
    // two equal edges and one bin.
    std::vector<double> edges;
    double kept_min = 0.0;
    double kept_max = 0.0;
    std::vector<double> deleted_values;  // sorted, distinct

    bool operator==(const PropertyBinning&) const = default;
};

using BinningMap = std::map<std::string, PropertyBinning>;

struct BinningConfig {
    std::size_t bins_per_property = 10;
    std::size_t lof_k = 20;
    double lof_threshold = 1.5;
};

/// Brute-force 1-D Local Outlier Factor with k neighbors, one score per
/// input value (input order preserved). Duplicate-heavy neighborhoods give
/// infinite local densities; identical points score 1 by convention.
std::vector<double> lof_scores_1d(const std::vector<double>& values, std::size_t k);

/// Fits one PropertyBinning per predicate that carries numeric literals.
/// Predicates with fewer than lof_k+1 values skip outlier deletion.
BinningMap fit_bins(const KnowledgeGraph& kg, const BinningConfig& config = {});

/// Which bin a value falls into; out-of-range values clamp to the boundary
/// bins and set *clamped.
std::size_t bin_index(const PropertyBinning& b, double value, bool* clamped = nullptr);

struct BinApplyStats {
    std::size_t replaced = 0;  // numeric literals turned into bin entities
    std::size_t removed = 0;   // triples dropped because their value was deleted
    std::size_t clamped = 0;   // values outside the fitted range
};

/// Replaces every numeric literal under a fitted predicate by its bin
/// entity `mx:bin/<predicate-localname>/<index>`; triples whose values were
/// deleted as outliers disappear. Non-numeric literals are untouched.
KnowledgeGraph apply_binning(const KnowledgeGraph& kg, const BinningMap& binnings,
                             BinApplyStats* stats = nullptr);

/// JSON export/import of a fitted binning map, for reproducibility.
void save_binnings(const BinningMap& binnings, const std::string& path);
BinningMap load_binnings(const std::string& path);

}  // namespace mx

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "mx/util.hpp"

namespace mx {

/// A cell holds either a numeric value or a category label.
using Cell = std::variant<double, std::string>;

enum class VarKind { kNumeric, kCategorical };

/// In-memory tabular sample of a dataset: header plus row-major cells.
/// Column kinds normally come from the owning dataset's variable list;
/// infer_kinds() fills them for standalone tables (numeric iff every cell
/// in the column is a number).
struct TableData {
    std::vector<std::string> columns;
    std::vector<VarKind> kinds;
    std::vector<std::vector<Cell>> rows;

    bool operator==(const TableData&) const = default;

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw ValidationError("table has no column named '" + name + "'");
    }

    void infer_kinds() {
        kinds.assign(columns.size(), VarKind::kNumeric);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            for (const auto& row : rows) {
                if (!std::holds_alternative<double>(row.at(c))) {
                    kinds[c] = VarKind::kCategorical;
                    break;
                }
            }
        }
    }

    void check_shape() const {
        if (!kinds.empty() && kinds.size() != columns.size())
            throw ValidationError("table kinds/columns length mismatch");
        for (const auto& row : rows)
            if (row.size() != columns.size())
                throw ValidationError("table row width differs from header");
    }
};

}  // namespace mx

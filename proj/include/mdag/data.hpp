#ifndef MDAG_DATA_HPP
#define MDAG_DATA_HPP

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace mdag {

/// Cases are rows. A missing cell holds NaN. `labels` is either empty (the
/// mixture indicator is hidden everywhere) or one entry per case, where -1
/// marks a hidden indicator and any other value is the mixture index.
struct Dataset {
    std::vector<std::string> names;
    Eigen::MatrixXd values;
    std::vector<int> labels;

    Eigen::Index cases() const { return values.rows(); }
    Eigen::Index dims() const { return values.cols(); }

    bool observed(Eigen::Index row, Eigen::Index col) const { return !std::isnan(values(row, col)); }

    int label(Eigen::Index row) const {
        return labels.empty() ? -1 : labels[static_cast<std::size_t>(row)];
    }

    bool complete() const { return !values.hasNaN(); }

    Dataset subset(const std::vector<std::size_t>& rows) const {
        Dataset out;
        out.names = names;
        out.values.resize(static_cast<Eigen::Index>(rows.size()), dims());
        for (std::size_t r = 0; r < rows.size(); ++r) out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(rows[r]));
        if (!labels.empty()) {
            out.labels.reserve(rows.size());
            for (auto r : rows) out.labels.push_back(labels[r]);
        }
        return out;
    }

    Dataset without_labels() const {
        Dataset out{names, values, {}};
        return out;
    }
};

inline std::vector<std::string> default_names(Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < n; ++i) out.push_back("X" + std::to_string(i));
    return out;
}

inline Dataset make_dataset(Eigen::MatrixXd values, std::vector<int> labels = {}) {
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != values.rows())
        throw Error(ErrorCode::DimensionMismatch, "label count differs from case count");
    Dataset out;
    out.names = default_names(values.cols());
    out.values = std::move(values);
    out.labels = std::move(labels);
    return out;
}

}  // namespace mdag

#endif  // MDAG_DATA_HPP

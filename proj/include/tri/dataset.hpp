#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace tri {

/// Immutable columnar table of named real-valued variables.
///
/// Columns flagged binary are validated to contain only 0.0 and 1.0; the flag
/// is declared by the caller, never inferred from the values. Once built, a
/// Dataset never changes, so it can be shared read-only across concurrent
/// trial or replicate workers.
class Dataset {
public:
    /// Builds a dataset from parallel name/column lists. Column order is
    /// preserved for serialization.
    Dataset(std::vector<std::string> names, std::vector<Eigen::VectorXd> columns,
            std::set<std::string> binary_columns);

    Eigen::Index n() const { return n_; }
    const std::vector<std::string>& column_names() const { return names_; }

    bool has_column(const std::string& name) const;
    /// Throws DomainError for unknown names; unknown columns are never
    /// silently defaulted.
    const Eigen::VectorXd& column(const std::string& name) const;

    bool is_binary(const std::string& name) const;
    const std::set<std::string>& binary_columns() const { return binary_; }

    /// Row-gathered copy (bootstrap resamples, subsamples). Indices may
    /// repeat; binary flags carry over.
    Dataset subset(const std::vector<Eigen::Index>& rows) const;

private:
    std::vector<std::string> names_;
    std::vector<Eigen::VectorXd> columns_;
    std::unordered_map<std::string, std::size_t> index_;
    std::set<std::string> binary_;
    Eigen::Index n_ = 0;
};

/// Reads a numeric CSV (header row, comma-separated, no quoting) and flags
/// the named columns binary. Ragged rows and unparseable cells raise
/// ParseError; an empty table or a binary-flag violation raises
/// ValidationError.
Dataset load_csv(const std::string& path, const std::set<std::string>& binary_columns = {});

/// Writes the dataset as CSV with shortest round-tripping decimal
/// representations, so load_csv(write_csv(d)) reproduces every value.
void write_csv(const Dataset& data, const std::string& path);

}  // namespace tri

#include "tri/dataset.hpp"

#include "tri/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

namespace tri {

namespace {

bool is_zero_or_one(double v) { return v == 0.0 || v == 1.0; }

void check_binary(const std::string& name, const Eigen::VectorXd& col) {
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        if (!is_zero_or_one(col[i])) {
            throw ValidationError("column '" + name + "' is flagged binary but row " +
                                  std::to_string(i) + " holds " + std::to_string(col[i]));
        }
    }
}

}  // namespace

Dataset::Dataset(std::vector<std::string> names, std::vector<Eigen::VectorXd> columns,
                 std::set<std::string> binary_columns)
    : names_(std::move(names)), columns_(std::move(columns)), binary_(std::move(binary_columns)) {
    if (names_.size() != columns_.size()) {
        throw ValidationError("column name/value list length mismatch");
    }
    if (names_.empty()) {
        throw ValidationError("dataset needs at least one column");
    }
    n_ = columns_.front().size();
    if (n_ < 1) {
        throw ValidationError("dataset needs at least one row");
    }
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (columns_[j].size() != n_) {
            throw ValidationError("column '" + names_[j] + "' has " +
                                  std::to_string(columns_[j].size()) + " rows, expected " +
                                  std::to_string(n_));
        }
        if (!index_.emplace(names_[j], j).second) {
            throw ValidationError("duplicate column name '" + names_[j] + "'");
        }
    }
    for (const auto& name : binary_) {
        auto it = index_.find(name);
        if (it == index_.end()) {
            throw ValidationError("binary flag names unknown column '" + name + "'");
        }
        check_binary(name, columns_[it->second]);
    }
}

bool Dataset::has_column(const std::string& name) const { return index_.count(name) > 0; }

const Eigen::VectorXd& Dataset::column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
        throw DomainError("unknown column '" + name + "'");
    }
    return columns_[it->second];
}

bool Dataset::is_binary(const std::string& name) const { return binary_.count(name) > 0; }

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
    std::vector<Eigen::VectorXd> cols;
    cols.reserve(columns_.size());
    for (const auto& col : columns_) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out[static_cast<Eigen::Index>(i)] = col[rows[i]];
        }
        cols.push_back(std::move(out));
    }
    return Dataset(names_, std::move(cols), binary_);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last) {
        throw ParseError("line " + std::to_string(line_no) + ": cell '" + cell +
                         "' is not a real number");
    }
    return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::set<std::string>& binary_columns) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("'" + path + "' is empty (missing header)");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> names = split_line(line);

    std::vector<std::vector<double>> values(names.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.eof()) break;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != names.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(names.size()) + " cells, found " +
                             std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < cells.size(); ++j) {
            values[j].push_back(parse_cell(cells[j], line_no));
        }
    }
    if (values.empty() || values.front().empty()) {
        throw ValidationError("'" + path + "' has a header but no data rows");
    }

    std::vector<Eigen::VectorXd> columns;
    columns.reserve(values.size());
    for (auto& v : values) {
        columns.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return Dataset(names, std::move(columns), binary_columns);
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open '" + path + "' for writing");
    }
    const auto& names = data.column_names();
    for (std::size_t j = 0; j < names.size(); ++j) {
        out << (j ? "," : "") << names[j];
    }
    out << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (j) out << ',';
            const double v = data.column(names[j])[i];
            auto res = std::to_chars(buf, buf + sizeof(buf), v);
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

}  // namespace tri

#include "hdprior/cli/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hdprior/errors.hpp"

namespace hdprior::cli {

namespace {

struct TermColumns {
  std::string term;
  bool categorical = false;
  std::vector<std::string> levels;  // non-reference levels
};

int require_column(const CsvTable& t, const std::string& name, std::size_t table) {
  const int c = t.column(name);
  if (c < 0) {
    throw DataError("data set " + std::to_string(table + 1) + ": column '" + name + "' not found");
  }
  return c;
}

}  // namespace

std::vector<Dataset> datasets_from_tables(const std::vector<CsvTable>& tables, const Formula& formula,
                                          const std::optional<std::string>& offset_column) {
  if (tables.empty()) throw DataError("no data sets given");
  // A term is categorical when no cell in any table is numeric; levels are pooled.
  // Mixed columns stay numeric and fail on their first non-numeric cell.
  std::vector<TermColumns> terms;
  for (const auto& term : formula.terms) {
    TermColumns tc{term, false, {}};
    std::set<std::string> levels;
    bool any_number = false;
    for (std::size_t k = 0; k < tables.size(); ++k) {
      const int c = require_column(tables[k], term, k);
      for (const auto& row : tables[k].rows) {
        double v;
        const std::string& cell = row[static_cast<std::size_t>(c)];
        if (is_missing(cell)) continue;
        if (parse_number(cell, v)) any_number = true;
        levels.insert(cell);
      }
    }
    tc.categorical = !any_number && !levels.empty();
    if (tc.categorical) {
      if (levels.size() < 2) throw DataError("categorical column '" + term + "' has a single level");
      tc.levels.assign(std::next(levels.begin()), levels.end());
    }
    terms.push_back(std::move(tc));
  }

  std::vector<std::string> names;
  if (formula.intercept) names.push_back("(Intercept)");
  for (const auto& tc : terms) {
    if (!tc.categorical) {
      names.push_back(tc.term);
    } else {
      for (const auto& l : tc.levels) names.push_back(tc.term + ":" + l);
    }
  }

  std::vector<Dataset> out;
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const CsvTable& t = tables[k];
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    if (n == 0) throw DataError("data set " + std::to_string(k + 1) + " has no rows");
    const int ycol = require_column(t, formula.response, k);
    const int ocol = offset_column ? require_column(t, *offset_column, k) : -1;
    std::vector<int> cols;
    for (const auto& tc : terms) cols.push_back(require_column(t, tc.term, k));

    Eigen::VectorXd y(n), offset = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(names.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = t.rows[static_cast<std::size_t>(i)];
      const std::string where = "data set " + std::to_string(k + 1) + ", row " + std::to_string(i + 1);
      auto number = [&](int c, const std::string& what) {
        const std::string& cell = row[static_cast<std::size_t>(c)];
        if (is_missing(cell)) throw DataError(where + ": missing value in '" + what + "'");
        double v;
        if (!parse_number(cell, v)) throw DataError(where + ": '" + cell + "' in '" + what + "' is not numeric");
        return v;
      };
      y(i) = number(ycol, formula.response);
      if (ocol >= 0) offset(i) = number(ocol, *offset_column);
      Eigen::Index j = 0;
      if (formula.intercept) X(i, j++) = 1.0;
      for (std::size_t m = 0; m < terms.size(); ++m) {
        if (!terms[m].categorical) {
          X(i, j++) = number(cols[m], terms[m].term);
          continue;
        }
        const std::string& cell = row[static_cast<std::size_t>(cols[m])];
        if (is_missing(cell)) throw DataError(where + ": missing value in '" + terms[m].term + "'");
        for (const auto& l : terms[m].levels) X(i, j++) = cell == l ? 1.0 : 0.0;
      }
    }
    Dataset d = make_dataset(std::move(y), std::move(X), std::move(offset), names);
    d.role = k == 0 ? DataRole::current : DataRole::historical;
    d.history_index = static_cast<int>(k);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Dataset> load_datasets(const std::vector<std::string>& paths, const Formula& formula,
                                   const std::optional<std::string>& offset_column) {
  std::vector<CsvTable> tables;
  for (const auto& p : paths) tables.push_back(read_csv_file(p));
  try {
    return datasets_from_tables(tables, formula, offset_column);
  } catch (const DataError& e) {
    std::string msg = e.what();
    // Name the file instead of its position.
    for (std::size_t k = 0; k < paths.size(); ++k) {
      const std::string tag = "data set " + std::to_string(k + 1);
      if (msg.rfind(tag, 0) == 0) msg = paths[k] + msg.substr(tag.size());
    }
    throw DataError(msg);
  }
}

Dataset load_dataset(const std::string& path, const Formula& formula,
                     const std::optional<std::string>& offset_column) {
  return load_datasets({path}, formula, offset_column).front();
}

void write_dataset(std::ostream& out, const Dataset& data, const std::string& response) {
  std::vector<std::string> header = {response};
  header.insert(header.end(), data.column_names.begin(), data.column_names.end());
  header.push_back("offset");
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    row.clear();
    row.push_back(format_number(data.y(i)));
    for (Eigen::Index j = 0; j < data.cols(); ++j) row.push_back(format_number(data.X(i, j)));
    row.push_back(format_number(data.offset(i)));
    write_csv_row(out, row);
  }
}

std::vector<ScaleRecord> standardize(std::vector<Dataset>& data) {
  if (data.empty()) return {};
  const Dataset& cur = data.front();
  std::vector<ScaleRecord> records;
  for (Eigen::Index j = 0; j < cur.cols(); ++j) {
    const auto col = cur.X.col(j);
    const bool binary = (col.array() == 0.0 || col.array() == 1.0).all();
    if (binary) continue;
    const double n = static_cast<double>(col.size());
    if (n < 2) throw DataError("cannot standardize with a single current observation");
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / (n - 1.0));
    const std::string& name = cur.column_names[static_cast<std::size_t>(j)];
    if (!(sd > 0.0)) throw DataError("column '" + name + "' is constant in the current data");
    for (auto& d : data) d.X.col(j) = (d.X.col(j).array() - mean) / sd;
    records.push_back({name, mean, sd});
  }
  return records;
}

}  // namespace hdprior::cli

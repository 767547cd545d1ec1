#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hdprior/cli/csv.hpp"
#include "hdprior/cli/formula.hpp"
#include "hdprior/glm.hpp"

namespace hdprior::cli {

/// Builds design matrices for several tables at once. Columns with no numeric cells become
/// dummy columns "name:level" for every level except the alphabetically first,
/// with levels pooled across all tables so the columns agree. Missing cells are
/// rejected with their row number.
std::vector<Dataset> datasets_from_tables(const std::vector<CsvTable>& tables, const Formula& formula,
                                          const std::optional<std::string>& offset_column = {});

std::vector<Dataset> load_datasets(const std::vector<std::string>& paths, const Formula& formula,
                                   const std::optional<std::string>& offset_column = {});

Dataset load_dataset(const std::string& path, const Formula& formula,
                     const std::optional<std::string>& offset_column = {});

/// Writes response, design columns and an "offset" column.
void write_dataset(std::ostream& out, const Dataset& data, const std::string& response);

struct ScaleRecord {
  std::string column;
  double mean = 0.0;
  double sd = 1.0;
};

/// Centres and scales every column that is not 0/1-valued in the current data,
/// using current-data mean and sample sd for all data sets. Throws DataError for a
/// constant column.
std::vector<ScaleRecord> standardize(std::vector<Dataset>& data);

}  // namespace hdprior::cli

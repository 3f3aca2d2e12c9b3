#pragma once

// CSV ingestion. Time-fixed files carry covariate columns plus the reserved
// columns A (treatment), Y (outcome) and optional D (1 = train, 0 = test).
// Sequential files are long format: id, t, covariates, A, and Y repeated on
// every row of a subject.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfpred/core.hpp"

namespace cfpred {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position; throws Schema listing the available columns.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

// Comma-separated with optional double-quoted fields. Blank lines skipped.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

struct CsvLoadOptions {
  // Inferred as binary when every Y is 0 or 1.
  std::optional<OutcomeType> outcome;
  // Covariate columns in order; default is every non-reserved column.
  std::vector<std::string> covariates;
  // Used only when the file has no D column.
  double train_fraction = 0.5;
  std::uint64_t split_seed = 1;
  bool exact_count = false;
};

Dataset dataset_from_csv(const CsvTable& table, const CsvLoadOptions& options = {});
Dataset load_dataset(const std::string& path, const CsvLoadOptions& options = {});

SequentialDataset sequential_from_csv(const CsvTable& table, const CsvLoadOptions& options = {});
SequentialDataset load_sequential(const std::string& path, const CsvLoadOptions& options = {});

// Writes a time-fixed dataset with a D column.
std::string dataset_to_csv(const Dataset& data);

}  // namespace cfpred

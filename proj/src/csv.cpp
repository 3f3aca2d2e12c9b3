#include "cfpred/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cfpred {

namespace {

const std::set<std::string> kReserved{"A", "Y", "D"};
const std::set<std::string> kSequentialReserved{"id", "t", "A", "Y"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) fail(ErrorCode::Data, "unterminated quote on line " + std::to_string(line_no));
  fields.push_back(trim(cur));
  return fields;
}

double parse_number(const std::string& s, const std::string& column, std::size_t row) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    fail(ErrorCode::Data, "non-numeric value '" + s + "' in column " + column + " at data row " +
                              std::to_string(row + 1));
  }
  return v;
}

int parse_binary(const std::string& s, const std::string& column, std::size_t row) {
  const double v = parse_number(s, column, row);
  if (v != 0.0 && v != 1.0) {
    fail(ErrorCode::Data, "column " + column + " must be 0 or 1 (data row " + std::to_string(row + 1) + ")");
  }
  return static_cast<int>(v);
}

std::vector<std::string> resolve_covariates(const CsvTable& table, const CsvLoadOptions& options,
                                            const std::set<std::string>& reserved) {
  std::vector<std::string> names = options.covariates;
  if (names.empty()) {
    for (const auto& h : table.header) {
      if (!reserved.count(h)) names.push_back(h);
    }
  }
  std::string missing;
  for (const auto& n : names) {
    if (!table.has_column(n)) missing += (missing.empty() ? "" : ", ") + n;
  }
  if (!missing.empty()) {
    std::string avail;
    for (const auto& h : table.header) avail += (avail.empty() ? "" : ", ") + h;
    fail(ErrorCode::Schema, "unknown column(s): " + missing + "; available: " + avail);
  }
  if (names.empty()) fail(ErrorCode::Schema, "no covariate columns");
  return names;
}

OutcomeType resolve_outcome(const CsvLoadOptions& options, const Eigen::VectorXd& y) {
  if (options.outcome) return *options.outcome;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) return OutcomeType::Continuous;
  }
  return OutcomeType::Binary;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    std::string avail;
    for (const auto& h : header) avail += (avail.empty() ? "" : ", ") + h;
    fail(ErrorCode::Schema, "missing column " + name + "; available: " + avail);
  }
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_line(line, line_no);
    if (!have_header) {
      std::set<std::string> seen;
      for (const auto& f : fields) {
        if (f.empty()) fail(ErrorCode::Schema, "empty column name in header");
        if (!seen.insert(f).second) fail(ErrorCode::Schema, "duplicate column " + f);
      }
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      fail(ErrorCode::Data, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) fail(ErrorCode::Schema, "empty CSV input");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Data, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

Dataset dataset_from_csv(const CsvTable& table, const CsvLoadOptions& options) {
  const std::size_t col_a = table.column("A");
  const std::size_t col_y = table.column("Y");
  const bool has_d = table.has_column("D");
  const auto names = resolve_covariates(table, options, kReserved);
  if (table.rows.empty()) fail(ErrorCode::Data, "no data rows");

  const auto n = table.rows.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
  std::vector<int> a(n);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  std::vector<Split> split(n, Split::Train);
  std::vector<std::size_t> cols;
  for (const auto& nm : names) cols.push_back(table.column(nm));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t j = 0; j < cols.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_number(row[cols[j]], names[j], i);
    }
    a[i] = parse_binary(row[col_a], "A", i);
    y[static_cast<Eigen::Index>(i)] = parse_number(row[col_y], "Y", i);
    if (has_d) split[i] = parse_binary(row[table.column("D")], "D", i) == 1 ? Split::Train : Split::Test;
  }
  const OutcomeType outcome = resolve_outcome(options, y);
  Dataset data(std::move(x), std::move(a), std::move(y), std::move(split), outcome, names);
  if (!has_d) data = split_dataset(data, options.train_fraction, options.split_seed, SplitOptions{options.exact_count});
  return data;
}

Dataset load_dataset(const std::string& path, const CsvLoadOptions& options) {
  return dataset_from_csv(read_csv(path), options);
}

SequentialDataset sequential_from_csv(const CsvTable& table, const CsvLoadOptions& options) {
  const std::size_t col_id = table.column("id");
  const std::size_t col_t = table.column("t");
  const std::size_t col_a = table.column("A");
  const std::size_t col_y = table.column("Y");
  const auto names = resolve_covariates(table, options, kSequentialReserved);
  if (table.rows.empty()) fail(ErrorCode::Data, "no data rows");
  std::vector<std::size_t> cols;
  for (const auto& nm : names) cols.push_back(table.column(nm));

  // Subjects in order of first appearance; rows keyed by time.
  std::vector<std::string> ids;
  std::map<std::string, std::size_t> index;
  std::vector<std::map<std::size_t, std::size_t>> by_time;
  std::size_t max_t = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& id = table.rows[r][col_id];
    const double tv = parse_number(table.rows[r][col_t], "t", r);
    if (tv < 0 || tv != std::floor(tv)) fail(ErrorCode::Data, "t must be a nonnegative integer (data row " + std::to_string(r + 1) + ")");
    const auto t = static_cast<std::size_t>(tv);
    auto [it, inserted] = index.emplace(id, ids.size());
    if (inserted) {
      ids.push_back(id);
      by_time.emplace_back();
    }
    if (!by_time[it->second].emplace(t, r).second) {
      fail(ErrorCode::Data, "subject " + id + " has two rows at t = " + std::to_string(t));
    }
    max_t = std::max(max_t, t);
  }
  const std::size_t times = max_t + 1;
  const auto n = static_cast<Eigen::Index>(ids.size());
  std::vector<Eigen::MatrixXd> x(times, Eigen::MatrixXd(n, static_cast<Eigen::Index>(names.size())));
  std::vector<std::vector<int>> a(times, std::vector<int>(ids.size()));
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (by_time[i].size() != times) {
      fail(ErrorCode::Data, "subject " + ids[i] + " does not have rows for every t in 0.." + std::to_string(max_t));
    }
    for (const auto& [t, r] : by_time[i]) {
      const auto& row = table.rows[r];
      for (std::size_t j = 0; j < cols.size(); ++j) {
        x[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = parse_number(row[cols[j]], names[j], r);
      }
      a[t][i] = parse_binary(row[col_a], "A", r);
      const double yv = parse_number(row[col_y], "Y", r);
      if (t == 0) {
        y[static_cast<Eigen::Index>(i)] = yv;
      } else if (yv != y[static_cast<Eigen::Index>(i)]) {
        fail(ErrorCode::Data, "subject " + ids[i] + " has different Y values across rows");
      }
    }
  }
  const OutcomeType outcome = resolve_outcome(options, y);
  return SequentialDataset(std::move(x), std::move(a), std::move(y), outcome, std::move(ids));
}

SequentialDataset load_sequential(const std::string& path, const CsvLoadOptions& options) {
  return sequential_from_csv(read_csv(path), options);
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream os;
  std::vector<std::string> names = data.covariate_names();
  if (names.empty()) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) names.push_back("x" + std::to_string(j + 1));
  }
  for (const auto& nm : names) os << nm << ',';
  os << "A,Y,D\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) os << format_double(data.x()(static_cast<Eigen::Index>(i), j)) << ',';
    os << data.a()[i] << ',' << format_double(data.y()[static_cast<Eigen::Index>(i)]) << ','
       << (data.split()[i] == Split::Train ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace cfpred

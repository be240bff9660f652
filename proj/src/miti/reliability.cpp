#include "micoach/miti/reliability.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "micoach/error.hpp"

namespace micoach::miti {
namespace {

// Both statistics ignore per-column offsets, so each column is re-based on its
// first cell. When a caller's offset was added exactly, the re-based matrix is
// bit-identical to the original one and so are the results.
std::vector<double> rebased(const RatingsMatrix& m) {
  std::vector<double> y(m.rows() * m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) y[i * m.cols() + j] = m(i, j) - m(0, j);
  }
  return y;
}

double sample_variance(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

RatingsMatrix RatingsMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw Error("INVALID_MATRIX", "at least 2 subjects are required");
  const std::size_t cols = rows.front().size();
  if (cols < 2) throw Error("INVALID_MATRIX", "at least 2 raters or items are required");
  std::vector<double> cells;
  cells.reserve(rows.size() * cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw Error("INVALID_MATRIX", "row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                                        " cells, expected " + std::to_string(cols));
    }
    for (double v : rows[i]) {
      if (!std::isfinite(v)) throw Error("INVALID_MATRIX", "row " + std::to_string(i + 1) + " has a non-finite cell");
      cells.push_back(v);
    }
  }
  return RatingsMatrix(rows.size(), cols, std::move(cells));
}

RatingsMatrix parse_ratings_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::vector<double> row;
    std::size_t cell_start = 0;
    for (;;) {
      std::size_t comma = line.find(',', cell_start);
      std::string_view cell = line.substr(cell_start, comma == std::string_view::npos ? line.npos : comma - cell_start);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      double v = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw Error("INVALID_MATRIX", "line " + std::to_string(line_no) + ": '" + std::string(cell) + "' is not a number");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      cell_start = comma + 1;
    }
    rows.push_back(std::move(row));
    if (end == text.size()) break;
  }
  return RatingsMatrix::from_rows(rows);
}

double cronbach_alpha(const RatingsMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t k = m.cols();
  const std::vector<double> y = rebased(m);

  double item_variance_sum = 0;
  std::vector<double> column(n);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = y[i * k + j];
    item_variance_sum += sample_variance(column);
  }
  std::vector<double> totals(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) totals[i] += y[i * k + j];
  }
  const double total_variance = sample_variance(totals);
  if (total_variance == 0.0) throw Error("DEGENERATE", "total scores have zero variance");
  const double kk = static_cast<double>(k);
  return kk / (kk - 1.0) * (1.0 - item_variance_sum / total_variance);
}

double icc_avg_consistency(const RatingsMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t k = m.cols();
  const std::vector<double> y = rebased(m);

  std::vector<double> row_mean(n, 0.0);
  std::vector<double> col_mean(k, 0.0);
  double grand = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double v = y[i * k + j];
      row_mean[i] += v;
      col_mean[j] += v;
      grand += v;
    }
  }
  for (auto& r : row_mean) r /= static_cast<double>(k);
  for (auto& c : col_mean) c /= static_cast<double>(n);
  grand /= static_cast<double>(n * k);

  double ss_rows = 0;
  for (double r : row_mean) ss_rows += (r - grand) * (r - grand);
  ss_rows *= static_cast<double>(k);

  double ss_error = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double e = y[i * k + j] - row_mean[i] - col_mean[j] + grand;
      ss_error += e * e;
    }
  }
  const double ms_rows = ss_rows / static_cast<double>(n - 1);
  const double ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));
  if (ms_rows == 0.0) throw Error("DEGENERATE", "between-subject mean square is zero");
  return (ms_rows - ms_error) / ms_rows;
}

}  // namespace micoach::miti

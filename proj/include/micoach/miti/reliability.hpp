#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace micoach::miti {

/// Dense subjects x raters (or subjects x items) matrix of ratings.
class RatingsMatrix {
 public:
  /// Throws Error INVALID_MATRIX unless there are at least 2 rows, 2 columns,
  /// every row has the same length and every cell is finite.
  static RatingsMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

 private:
  RatingsMatrix(std::size_t rows, std::size_t cols, std::vector<double> cells)
      : rows_(rows), cols_(cols), cells_(std::move(cells)) {}

  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> cells_;
};

/// Headerless CSV, one subject per line. Throws Error INVALID_MATRIX.
RatingsMatrix parse_ratings_csv(std::string_view text);

/// Cronbach's alpha over the columns (items), sample variances.
/// Throws Error DEGENERATE when the row totals have zero variance.
double cronbach_alpha(const RatingsMatrix& m);

/// ICC(C,k): two-way model, consistency definition, average of k raters,
/// (MS_rows - MS_error) / MS_rows. Throws Error DEGENERATE when MS_rows = 0.
double icc_avg_consistency(const RatingsMatrix& m);

}  // namespace micoach::miti

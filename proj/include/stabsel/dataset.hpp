#ifndef STABSEL_DATASET_HPP
#define STABSEL_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "stabsel/matrix.hpp"

namespace stabsel {

// Synthetic regression data: X is n x p, y = X beta + eps, support holds the
// 0-based indices of the nonzero coefficients.
struct Dataset {
  Matrix X;
  std::vector<double> y;
  std::vector<double> beta_true;
  std::vector<int> support;
  double noise_sd = 0.0;

  int n() const { return X.rows(); }
  int p() const { return X.cols(); }
  void validate() const;
};

enum class ContaminationScheme { ColumnZeroRelevant, CaseWise, CellWiseRandom, ResponseOnly };

struct ContaminationSpec {
  ContaminationScheme scheme = ContaminationScheme::ColumnZeroRelevant;
  int row_count = 0;        // m~: rows affected (ColumnZeroRelevant, CaseWise, ResponseOnly)
  double cell_rate = 0.0;   // CellWiseRandom only
  double replacement_value = 0.0;
  std::vector<int> target_columns;  // 0-based; empty means "the support"
  // Outlier law for CaseWise / ResponseOnly replacements.
  double outlier_mean = 0.0;
  double outlier_sd = 10.0;

  void validate(const Dataset& d) const;
};

// Columns of X are i.i.d. N(5,1) entries, beta has s0 components ~ N(4,1) on
// the first s0 indices, y = X beta + eps with noise variance set so that
// Var(X beta) / Var(eps) equals snr on the realized design.
Dataset generate_dataset(int n, int p, int s0, double snr, std::uint64_t seed);

// Applies the contamination scheme (after response generation; y is kept for
// the X-only schemes). The input dataset is untouched. If attacked_rows is
// non-null it receives the sorted 0-based rows that were modified.
Dataset contaminate(const Dataset& d, const ContaminationSpec& spec, std::uint64_t seed,
                    std::vector<int>* attacked_rows = nullptr);

// Number of (row, column) positions that differ, counting the response column.
long long count_contaminated_cells(const Dataset& original, const Dataset& contaminated);

// CSV with header x1..xp,y plus a JSON sidecar carrying beta/support/seed.
void write_dataset_csv(const Dataset& d, const std::string& path);
void write_dataset_sidecar(const Dataset& d, std::uint64_t seed, const std::string& path,
                           const std::vector<int>* attacked_rows = nullptr,
                           const std::string& scheme_label = "");
Dataset read_dataset_csv(const std::string& csv_path, const std::string& sidecar_path);

}  // namespace stabsel

#endif

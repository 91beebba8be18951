#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "stabsel/dataset.hpp"

using namespace stabsel;

namespace {
double population_variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / v.size();
}
}  // namespace

TEST_CASE("generate_dataset geometry and support") {
  const Dataset d = generate_dataset(50, 25, 5, 5.0, 99);
  d.validate();
  CHECK(d.n() == 50);
  CHECK(d.p() == 25);
  CHECK(d.support == std::vector<int>{0, 1, 2, 3, 4});
  for (int j = 0; j < 5; ++j) CHECK(d.beta_true[j] != 0.0);
  for (int j = 5; j < 25; ++j) CHECK(d.beta_true[j] == 0.0);

  // Column marginals around N(5, 1).
  double mean = 0.0;
  for (int j = 0; j < d.p(); ++j)
    for (int i = 0; i < d.n(); ++i) mean += d.X(i, j);
  mean /= d.n() * d.p();
  CHECK(std::abs(mean - 5.0) < 0.2);
}

TEST_CASE("generate_dataset reproducible, seeds differ") {
  const Dataset a = generate_dataset(20, 8, 3, 2.0, 7);
  const Dataset b = generate_dataset(20, 8, 3, 2.0, 7);
  const Dataset c = generate_dataset(20, 8, 3, 2.0, 8);
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  CHECK(a.beta_true == b.beta_true);
  CHECK(a.X != c.X);
}

TEST_CASE("zero-noise limit: y = X beta") {
  const Dataset d = generate_dataset(10, 4, 4, 1e12, 3);
  for (int i = 0; i < d.n(); ++i) {
    double pred = 0.0;
    for (int j = 0; j < d.p(); ++j) pred += d.X(i, j) * d.beta_true[j];
    CHECK(d.y[i] == doctest::Approx(pred).epsilon(1e-5));
  }
}

TEST_CASE("snr calibration over many seeds") {
  // var(eps) * snr / var(X beta) averages to 1.
  const int seeds = 1000;
  double ratio_sum = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const Dataset d = generate_dataset(200, 500, 5, 1.0, 1000 + s);
    std::vector<double> signal(d.n(), 0.0);
    for (int j : d.support)
      for (int i = 0; i < d.n(); ++i) signal[i] += d.beta_true[j] * d.X(i, j);
    std::vector<double> eps(d.n());
    for (int i = 0; i < d.n(); ++i) eps[i] = d.y[i] - signal[i];
    ratio_sum += population_variance(eps) / population_variance(signal);
  }
  CHECK(ratio_sum / seeds == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("column-zero attack: counts and untouched columns") {
  const Dataset d = generate_dataset(50, 25, 5, 5.0, 11);
  ContaminationSpec spec;
  spec.scheme = ContaminationScheme::ColumnZeroRelevant;
  spec.row_count = 2;
  std::vector<int> rows;
  const Dataset dirty = contaminate(d, spec, 4, &rows);

  CHECK(rows.size() == 2);
  CHECK(count_contaminated_cells(d, dirty) == 10);  // 2 rows x 5 relevant columns
  CHECK(dirty.y == d.y);
  for (int j = 5; j < d.p(); ++j)
    for (int i = 0; i < d.n(); ++i) CHECK(dirty.X(i, j) == d.X(i, j));
  for (int i : rows)
    for (int j : d.support) CHECK(dirty.X(i, j) == 0.0);
}

TEST_CASE("scenario cell fractions: 10/1300 and 50/100200") {
  const Dataset s1 = generate_dataset(50, 25, 5, 5.0, 21);
  ContaminationSpec a1;
  a1.scheme = ContaminationScheme::ColumnZeroRelevant;
  a1.row_count = 2;
  const long long cells1 = count_contaminated_cells(s1, contaminate(s1, a1, 5));
  CHECK(cells1 == 10);
  CHECK(static_cast<double>(cells1) / (50.0 * 26.0) == doctest::Approx(10.0 / 1300.0));

  const Dataset s5 = generate_dataset(200, 500, 5, 5.0, 22);
  ContaminationSpec a5;
  a5.scheme = ContaminationScheme::ColumnZeroRelevant;
  a5.row_count = 10;
  const long long cells5 = count_contaminated_cells(s5, contaminate(s5, a5, 6));
  CHECK(cells5 == 50);
  CHECK(static_cast<double>(cells5) / (200.0 * 501.0) == doctest::Approx(50.0 / 100200.0));
}

TEST_CASE("contaminate edge cases") {
  const Dataset d = generate_dataset(12, 6, 2, 3.0, 5);

  ContaminationSpec none;
  none.scheme = ContaminationScheme::ColumnZeroRelevant;
  none.row_count = 0;
  CHECK(count_contaminated_cells(d, contaminate(d, none, 1)) == 0);

  ContaminationSpec all;
  all.scheme = ContaminationScheme::ColumnZeroRelevant;
  all.row_count = d.n();
  const Dataset dirty = contaminate(d, all, 1);
  for (int j : d.support)
    for (int i = 0; i < d.n(); ++i) CHECK(dirty.X(i, j) == 0.0);

  ContaminationSpec overflow;
  overflow.scheme = ContaminationScheme::ColumnZeroRelevant;
  overflow.row_count = d.n() + 1;
  CHECK_THROWS_AS(contaminate(d, overflow, 1), std::invalid_argument);

  ContaminationSpec response;
  response.scheme = ContaminationScheme::ResponseOnly;
  response.row_count = 3;
  const Dataset resp = contaminate(d, response, 9);
  CHECK(count_contaminated_cells(d, resp) == 3);
  for (int j = 0; j < d.p(); ++j)
    for (int i = 0; i < d.n(); ++i) CHECK(resp.X(i, j) == d.X(i, j));

  ContaminationSpec cases;
  cases.scheme = ContaminationScheme::CaseWise;
  cases.row_count = 2;
  std::vector<int> rows;
  const Dataset cw = contaminate(d, cases, 9, &rows);
  CHECK(rows.size() == 2);
  CHECK(count_contaminated_cells(d, cw) >= 2 * d.p());  // whole rows + responses replaced

  ContaminationSpec cellwise;
  cellwise.scheme = ContaminationScheme::CellWiseRandom;
  cellwise.cell_rate = 1.0;
  const Dataset cells = contaminate(d, cellwise, 9);
  for (int j = 0; j < d.p(); ++j)
    for (int i = 0; i < d.n(); ++i) CHECK(cells.X(i, j) == 0.0);
}

TEST_CASE("dataset csv round-trip") {
  namespace fs = std::filesystem;
  const Dataset d = generate_dataset(15, 4, 2, 2.0, 31);
  const auto dir = fs::temp_directory_path() / "stabsel_test_io";
  fs::create_directories(dir);
  const std::string csv = (dir / "d.csv").string();
  const std::string side = (dir / "d.json").string();
  write_dataset_csv(d, csv);
  write_dataset_sidecar(d, 31, side);
  const Dataset back = read_dataset_csv(csv, side);
  CHECK(back.n() == d.n());
  CHECK(back.p() == d.p());
  CHECK(back.support == d.support);
  for (int i = 0; i < d.n(); ++i) {
    CHECK(back.y[i] == doctest::Approx(d.y[i]).epsilon(1e-15));
    for (int j = 0; j < d.p(); ++j) CHECK(back.X(i, j) == doctest::Approx(d.X(i, j)).epsilon(1e-15));
  }
  fs::remove_all(dir);
}

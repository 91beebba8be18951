#include "stabsel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stabsel/rng.hpp"

namespace stabsel {

namespace {
// Sub-stream tags for dataset generation; fixed so the draw order is part of
// the format.
constexpr std::uint64_t kStreamBeta = 1;
constexpr std::uint64_t kStreamX = 2;
constexpr std::uint64_t kStreamNoise = 3;
constexpr std::uint64_t kStreamRows = 4;
constexpr std::uint64_t kStreamCells = 5;

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_variance(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}
}  // namespace

void Dataset::validate() const {
  if (static_cast<int>(y.size()) != n()) throw std::invalid_argument("Dataset: rows(X) != length(y)");
  if (static_cast<int>(beta_true.size()) != p())
    throw std::invalid_argument("Dataset: length(beta_true) != cols(X)");
  int nonzeros = 0;
  for (double b : beta_true)
    if (b != 0.0) ++nonzeros;
  if (nonzeros != static_cast<int>(support.size()))
    throw std::invalid_argument("Dataset: |support| != #nonzero(beta_true)");
  for (int j : support)
    if (j < 0 || j >= p() || beta_true[j] == 0.0)
      throw std::invalid_argument("Dataset: support index inconsistent with beta_true");
  if (noise_sd < 0.0) throw std::invalid_argument("Dataset: negative noise_sd");
}

void ContaminationSpec::validate(const Dataset& d) const {
  if (row_count < 0 || row_count > d.n())
    throw std::invalid_argument("ContaminationSpec: row_count must lie in [0, n]");
  if (cell_rate < 0.0 || cell_rate > 1.0)
    throw std::invalid_argument("ContaminationSpec: cell_rate must lie in [0, 1]");
  for (int j : target_columns)
    if (j < 0 || j >= d.p()) throw std::invalid_argument("ContaminationSpec: target column out of range");
  if (outlier_sd < 0.0) throw std::invalid_argument("ContaminationSpec: negative outlier_sd");
}

Dataset generate_dataset(int n, int p, int s0, double snr, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_dataset: need n >= 2");
  if (s0 < 1 || s0 > p) throw std::invalid_argument("generate_dataset: need 1 <= s0 <= p");
  if (!(snr > 0.0)) throw std::invalid_argument("generate_dataset: need snr > 0");

  Dataset d;
  d.beta_true.assign(p, 0.0);
  Rng beta_rng(mix_seed(seed, kStreamBeta));
  for (int j = 0; j < s0; ++j) {
    d.beta_true[j] = beta_rng.normal(4.0, 1.0);
    d.support.push_back(j);
  }

  d.X = Matrix(n, p);
  Rng x_rng(mix_seed(seed, kStreamX));
  for (int j = 0; j < p; ++j) {
    auto column = d.X.col(j);
    for (int i = 0; i < n; ++i) column[i] = x_rng.normal(5.0, 1.0);
  }

  std::vector<double> signal(n, 0.0);
  for (int j : d.support) {
    const auto column = d.X.col(j);
    const double b = d.beta_true[j];
    for (int i = 0; i < n; ++i) signal[i] += b * column[i];
  }

  const double sigma2 = population_variance(signal) / snr;
  d.noise_sd = std::sqrt(sigma2);

  d.y.resize(n);
  Rng noise_rng(mix_seed(seed, kStreamNoise));
  for (int i = 0; i < n; ++i) d.y[i] = signal[i] + noise_rng.normal(0.0, d.noise_sd);
  return d;
}

Dataset contaminate(const Dataset& d, const ContaminationSpec& spec, std::uint64_t seed,
                    std::vector<int>* attacked_rows) {
  spec.validate(d);
  Dataset out = d;
  std::vector<int> rows;

  switch (spec.scheme) {
    case ContaminationScheme::ColumnZeroRelevant: {
      Rng row_rng(mix_seed(seed, kStreamRows));
      rows = row_rng.sample_without_replacement(d.n(), spec.row_count);
      const std::vector<int>& cols = spec.target_columns.empty() ? d.support : spec.target_columns;
      for (int i : rows)
        for (int j : cols) out.X(i, j) = spec.replacement_value;
      break;
    }
    case ContaminationScheme::CaseWise: {
      Rng row_rng(mix_seed(seed, kStreamRows));
      rows = row_rng.sample_without_replacement(d.n(), spec.row_count);
      Rng cell_rng(mix_seed(seed, kStreamCells));
      for (int i : rows) {
        for (int j = 0; j < d.p(); ++j) out.X(i, j) = cell_rng.normal(spec.outlier_mean, spec.outlier_sd);
        out.y[i] = cell_rng.normal(spec.outlier_mean, spec.outlier_sd);
      }
      break;
    }
    case ContaminationScheme::CellWiseRandom: {
      Rng cell_rng(mix_seed(seed, kStreamCells));
      std::set<int> touched;
      for (int j = 0; j < d.p(); ++j)
        for (int i = 0; i < d.n(); ++i)
          if (cell_rng.uniform() < spec.cell_rate) {
            out.X(i, j) = spec.replacement_value;
            touched.insert(i);
          }
      rows.assign(touched.begin(), touched.end());
      break;
    }
    case ContaminationScheme::ResponseOnly: {
      Rng row_rng(mix_seed(seed, kStreamRows));
      rows = row_rng.sample_without_replacement(d.n(), spec.row_count);
      Rng cell_rng(mix_seed(seed, kStreamCells));
      for (int i : rows) out.y[i] = cell_rng.normal(spec.outlier_mean, spec.outlier_sd);
      break;
    }
  }

  std::sort(rows.begin(), rows.end());
  if (attacked_rows) *attacked_rows = rows;
  return out;
}

long long count_contaminated_cells(const Dataset& original, const Dataset& contaminated) {
  if (original.n() != contaminated.n() || original.p() != contaminated.p())
    throw std::invalid_argument("count_contaminated_cells: dimension mismatch");
  long long count = 0;
  for (int j = 0; j < original.p(); ++j) {
    const auto a = original.X.col(j);
    const auto b = contaminated.X.col(j);
    for (int i = 0; i < original.n(); ++i)
      if (a[i] != b[i]) ++count;
  }
  for (int i = 0; i < original.n(); ++i)
    if (original.y[i] != contaminated.y[i]) ++count;
  return count;
}

void write_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(17);
  for (int j = 0; j < d.p(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (int i = 0; i < d.n(); ++i) {
    for (int j = 0; j < d.p(); ++j) out << d.X(i, j) << ',';
    out << d.y[i] << '\n';
  }
}

void write_dataset_sidecar(const Dataset& d, std::uint64_t seed, const std::string& path,
                           const std::vector<int>* attacked_rows, const std::string& scheme_label) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["seed"] = seed;
  j["n"] = d.n();
  j["p"] = d.p();
  j["noise_sd"] = d.noise_sd;
  j["beta_true"] = d.beta_true;
  std::vector<int> support_1based;
  for (int s : d.support) support_1based.push_back(s + 1);
  j["support"] = support_1based;  // 1-based, matching the x1..xp column names
  if (attacked_rows) {
    std::vector<int> rows_1based;
    for (int r : *attacked_rows) rows_1based.push_back(r + 1);
    j["attack"] = {{"scheme", scheme_label}, {"rows", rows_1based}};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

Dataset read_dataset_csv(const std::string& csv_path, const std::string& sidecar_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open: " + csv_path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty dataset file: " + csv_path);
  int cols = 1;
  for (char c : header)
    if (c == ',') ++cols;
  const int p = cols - 1;

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (static_cast<int>(row.size()) != cols)
      throw std::runtime_error("ragged row in: " + csv_path);
    rows.push_back(std::move(row));
  }

  Dataset d;
  d.X = Matrix(static_cast<int>(rows.size()), p);
  d.y.resize(rows.size());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    for (int j = 0; j < p; ++j) d.X(i, j) = rows[i][j];
    d.y[i] = rows[i][p];
  }

  std::ifstream side(sidecar_path);
  if (!side) throw std::runtime_error("cannot open: " + sidecar_path);
  nlohmann::json j;
  side >> j;
  d.beta_true = j.at("beta_true").get<std::vector<double>>();
  for (int s : j.at("support").get<std::vector<int>>()) d.support.push_back(s - 1);
  d.noise_sd = j.at("noise_sd").get<double>();
  d.validate();
  return d;
}

}  // namespace stabsel

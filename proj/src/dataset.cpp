#include "nchmc/dataset.hpp"

#include "nchmc/rng.hpp"
#include "nchmc/serialization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace nchmc {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  // UTF-8 byte order mark
  if (s.compare(start, 3, "\xEF\xBB\xBF") == 0) start += 3;
  return s.substr(start);
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                  std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("dataset '" + path.string() + "' is empty");
  header.clear();
  for (auto& name : split_csv_line(trim(line))) header.push_back(trim(name));

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        row.push_back(parse_double(f));
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

LabelledDataset read_labelled_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_numeric_csv(path, header);
  if (header.size() < 2)
    throw InvalidArgument("dataset needs at least one feature column and a label column");
  if (rows.empty()) throw InvalidArgument("dataset '" + path.string() + "' has no rows");

  LabelledDataset data;
  data.feature_names.assign(header.begin(), header.end() - 1);
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(header.size() - 1);
  data.X.resize(m, n);
  data.y.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) data.X(i, j) = row[static_cast<std::size_t>(j)];
    const double label = row.back();
    if (label != 0.0 && label != 1.0)
      throw InvalidArgument("label in row " + std::to_string(i + 1) + " is not 0 or 1");
    data.y(i) = label;
  }
  return data;
}

void standardize(LabelledDataset& data) {
  const auto m = static_cast<double>(data.X.rows());
  for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
    auto col = data.X.col(j);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / m);
    if (sd > 0.0) col /= sd;
  }
}

LabelledDataset load_logistic_dataset(const std::filesystem::path& path) {
  LabelledDataset data = read_labelled_csv(path);
  standardize(data);
  return data;
}

LabelledDataset synthetic_logistic_dataset(std::uint64_t seed, Eigen::Index rows,
                                           const Vector& beta) {
  if (rows < 1 || beta.size() < 1)
    throw InvalidArgument("synthetic dataset needs rows >= 1 and at least one coefficient");
  RandomStream stream(seed);
  LabelledDataset data;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    data.feature_names.push_back("x" + std::to_string(j + 1));
  data.X = stream.normal_matrix(rows, beta.size());
  data.y.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double t = data.X.row(i).dot(beta);
    const double prob = 1.0 / (1.0 + std::exp(-t));
    data.y(i) = stream.uniform() < prob ? 1.0 : 0.0;
  }
  standardize(data);
  return data;
}

void write_labelled_csv(const std::filesystem::path& path, const LabelledDataset& data) {
  std::ostringstream os;
  for (const auto& name : data.feature_names) os << name << ',';
  os << "label\n";
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) os << format_double(data.X(i, j)) << ',';
    os << static_cast<int>(data.y(i)) << '\n';
  }
  write_text_file(path, os.str());
}

std::filesystem::path fn_sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_fn_data(const std::filesystem::path& csv_path, const FitzhughNagumoData& data) {
  data.validate();
  std::ostringstream os;
  os << "time,obsV,obsR\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    os << format_double(data.times[i]) << ',' << format_double(data.obsV[i]) << ','
       << format_double(data.obsR[i]) << '\n';
  }
  write_text_file(csv_path, os.str());

  nlohmann::json side;
  side["seed"] = data.seed;
  side["count"] = data.size();
  side["sigma_noise"] = data.sigma_noise;
  side["initial_state"] = {{"V0", data.V0}, {"R0", data.R0}};
  side["true_params"] = {{"a", data.true_params.a},
                         {"b", data.true_params.b},
                         {"c", data.true_params.c}};
  write_text_file(fn_sidecar_path(csv_path), side.dump(2) + "\n");
}

FitzhughNagumoData read_fn_data(const std::filesystem::path& csv_path) {
  std::vector<std::string> header;
  const auto rows = read_numeric_csv(csv_path, header);
  if (header != std::vector<std::string>{"time", "obsV", "obsR"})
    throw InvalidArgument("Fitzhugh-Nagumo CSV must have columns time,obsV,obsR");
  FitzhughNagumoData data;
  for (const auto& row : rows) {
    data.times.push_back(row[0]);
    data.obsV.push_back(row[1]);
    data.obsR.push_back(row[2]);
  }
  const auto side_path = fn_sidecar_path(csv_path);
  if (std::filesystem::exists(side_path)) {
    const auto side = nlohmann::json::parse(read_text_file(side_path));
    data.seed = side.value("seed", std::uint64_t{0});
    data.sigma_noise = side.value("sigma_noise", data.sigma_noise);
    if (side.contains("initial_state")) {
      data.V0 = side["initial_state"].value("V0", data.V0);
      data.R0 = side["initial_state"].value("R0", data.R0);
    }
    if (side.contains("true_params")) {
      data.true_params.a = side["true_params"].value("a", data.true_params.a);
      data.true_params.b = side["true_params"].value("b", data.true_params.b);
      data.true_params.c = side["true_params"].value("c", data.true_params.c);
    }
  }
  data.validate();
  return data;
}

}  // namespace nchmc

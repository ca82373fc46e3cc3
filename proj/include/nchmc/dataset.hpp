#ifndef NCHMC_DATASET_HPP
#define NCHMC_DATASET_HPP

#include "nchmc/models.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace nchmc {

/// Labelled design matrix for logistic regression.
struct LabelledDataset {
  std::vector<std::string> feature_names;
  Matrix X;
  Vector y;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index features() const { return X.cols(); }
};

/// Reads a UTF-8 CSV with a header row; the last column is the 0/1 label and
/// every other column a decimal feature.
LabelledDataset read_labelled_csv(const std::filesystem::path& path);

/// Centers every feature and scales it to unit (population) variance.
/// Constant columns are centered only.
void standardize(LabelledDataset& data);

/// read_labelled_csv followed by standardize.
LabelledDataset load_logistic_dataset(const std::filesystem::path& path);

/// Synthetic standardized logistic-regression data: standard normal features
/// and labels drawn from a logistic model with coefficients `beta`.
LabelledDataset synthetic_logistic_dataset(std::uint64_t seed, Eigen::Index rows,
                                           const Vector& beta);

void write_labelled_csv(const std::filesystem::path& path, const LabelledDataset& data);

/// CSV columns time,obsV,obsR plus `<stem>.json` next to it holding the seed,
/// initial state, noise scale and true parameters.
void write_fn_data(const std::filesystem::path& csv_path, const FitzhughNagumoData& data);
FitzhughNagumoData read_fn_data(const std::filesystem::path& csv_path);

std::filesystem::path fn_sidecar_path(const std::filesystem::path& csv_path);

}  // namespace nchmc

#endif  // NCHMC_DATASET_HPP

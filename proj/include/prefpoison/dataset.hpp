#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace prefpoison {

// One preference comparison. o = 0 means x is preferred, o = 1 means y is
// preferred, o = 0.5 marks indifference.
struct PreferencePair {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double o = 0.0;
};

bool is_valid_label(double o);

// Ordered collection of preference pairs over a common feature dimension.
// Index i is the identity of datapoint i; perturbation vectors align to it.
class PreferenceDataset {
 public:
  PreferenceDataset() = default;
  explicit PreferenceDataset(std::vector<PreferencePair> pairs);

  int n() const { return static_cast<int>(pairs_.size()); }
  int m() const { return m_; }
  const PreferencePair& pair(int i) const { return pairs_[static_cast<size_t>(i)]; }
  const std::vector<PreferencePair>& pairs() const { return pairs_; }

  Eigen::VectorXd labels() const;
  int non_tie_count() const;

  // Copy with labels replaced; feature vectors are shared values.
  PreferenceDataset with_labels(const Eigen::VectorXd& labels) const;
  PreferenceDataset subset(const std::vector<int>& indices) const;

  // All 2n outcome vectors as rows: x_0..x_{n-1}, y_0..y_{n-1}.
  Eigen::MatrixXd outcome_matrix() const;
  // Outcomes deduplicated by exact bit equality, first occurrence kept,
  // scanned in pair order (x_i then y_i).
  std::vector<Eigen::VectorXd> unique_outcomes() const;

 private:
  std::vector<PreferencePair> pairs_;
  int m_ = 0;
};

enum class FeatureLaw { UnitGaussian, UnitCube };

// Synthetic Bradley-Terry data: outcomes drawn i.i.d. from feature_law,
// binary labels sampled from sigma(true_theta . (y - x)), then a
// floor(tie_fraction * n) subset relabeled to 0.5.
struct GeneratorSpec {
  int m = 0;
  int n = 0;
  Eigen::VectorXd true_theta;
  FeatureLaw feature_law = FeatureLaw::UnitGaussian;
  double tie_fraction = 0.0;
  std::uint64_t seed = 0;
};

PreferenceDataset generate_synthetic(const GeneratorSpec& spec);

// Seeded gaussian direction of unit length; the usual way to make a
// ground-truth theta for synthetic specs.
Eigen::VectorXd random_unit_vector(int m, std::uint64_t seed);

// JSON-lines: one {"x":[...],"y":[...],"o":0} object per line.
PreferenceDataset load_dataset(const std::string& path);
void save_dataset(const PreferenceDataset& ds, const std::string& path);

struct PcaProjection {
  Eigen::VectorXd mean;            // length m
  Eigen::MatrixXd components;      // k x m, orthonormal rows
  Eigen::VectorXd explained_variance;  // length k, non-increasing
  double total_variance = 0.0;

  int k() const { return static_cast<int>(components.rows()); }
  int input_dim() const { return static_cast<int>(components.cols()); }
  double explained_variance_ratio() const;
  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
};

// Fit on the 2n outcome vectors. Component signs are fixed by making the
// largest-magnitude entry of each component positive.
PcaProjection pca_fit(const PreferenceDataset& ds, int k);
PreferenceDataset pca_apply(const PcaProjection& proj, const PreferenceDataset& ds);

PcaProjection load_projection(const std::string& path);
void save_projection(const PcaProjection& proj, const std::string& path);

// Uniform sample without replacement of ceil(fraction*n) pairs. The index map
// sends visible index -> original index so a perturbation computed on the
// visible subset can be re-expressed against the full dataset.
std::pair<PreferenceDataset, std::vector<int>> subsample(const PreferenceDataset& ds,
                                                         double fraction,
                                                         std::uint64_t seed);

}  // namespace prefpoison

#include "prefpoison/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "prefpoison/json_io.hpp"
#include "prefpoison/reward_model.hpp"

namespace prefpoison {

bool is_valid_label(double o) { return o == 0.0 || o == 0.5 || o == 1.0; }

PreferenceDataset::PreferenceDataset(std::vector<PreferencePair> pairs)
    : pairs_(std::move(pairs)) {
  if (pairs_.empty()) throw std::invalid_argument("empty dataset");
  m_ = static_cast<int>(pairs_[0].x.size());
  if (m_ <= 0) throw std::invalid_argument("pair 0: empty feature vector");
  for (size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    if (p.x.size() != m_ || p.y.size() != m_)
      throw std::invalid_argument("pair " + std::to_string(i) +
                                  ": dimension mismatch (expected " + std::to_string(m_) + ")");
    if (!p.x.allFinite() || !p.y.allFinite())
      throw std::invalid_argument("pair " + std::to_string(i) + ": non-finite feature");
    if (!is_valid_label(p.o))
      throw std::invalid_argument("pair " + std::to_string(i) +
                                  ": label must be one of {0, 0.5, 1}");
  }
}

Eigen::VectorXd PreferenceDataset::labels() const {
  Eigen::VectorXd o(n());
  for (int i = 0; i < n(); ++i) o[i] = pairs_[static_cast<size_t>(i)].o;
  return o;
}

int PreferenceDataset::non_tie_count() const {
  int c = 0;
  for (const auto& p : pairs_)
    if (p.o != 0.5) ++c;
  return c;
}

PreferenceDataset PreferenceDataset::with_labels(const Eigen::VectorXd& labels) const {
  if (labels.size() != n()) throw std::invalid_argument("label vector length mismatch");
  std::vector<PreferencePair> out = pairs_;
  for (int i = 0; i < n(); ++i) out[static_cast<size_t>(i)].o = labels[i];
  return PreferenceDataset(std::move(out));
}

PreferenceDataset PreferenceDataset::subset(const std::vector<int>& indices) const {
  std::vector<PreferencePair> out;
  out.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= n()) throw std::invalid_argument("subset index out of range");
    out.push_back(pairs_[static_cast<size_t>(i)]);
  }
  return PreferenceDataset(std::move(out));
}

Eigen::MatrixXd PreferenceDataset::outcome_matrix() const {
  Eigen::MatrixXd out(2 * n(), m_);
  for (int i = 0; i < n(); ++i) {
    out.row(i) = pairs_[static_cast<size_t>(i)].x.transpose();
    out.row(n() + i) = pairs_[static_cast<size_t>(i)].y.transpose();
  }
  return out;
}

namespace {

struct VectorBytesHash {
  size_t operator()(const std::vector<double>& v) const {
    size_t h = 1469598103934665603ull;
    for (double d : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof(bits));
      h ^= bits;
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace

std::vector<Eigen::VectorXd> PreferenceDataset::unique_outcomes() const {
  std::unordered_set<std::vector<double>, VectorBytesHash> seen;
  std::vector<Eigen::VectorXd> out;
  auto visit = [&](const Eigen::VectorXd& v) {
    std::vector<double> key(v.data(), v.data() + v.size());
    if (seen.insert(std::move(key)).second) out.push_back(v);
  };
  for (const auto& p : pairs_) {
    visit(p.x);
    visit(p.y);
  }
  return out;
}

PreferenceDataset generate_synthetic(const GeneratorSpec& spec) {
  if (spec.m <= 0) throw std::invalid_argument("generator: m must be positive");
  if (spec.n <= 0) throw std::invalid_argument("generator: n must be positive");
  if (spec.true_theta.size() != spec.m)
    throw std::invalid_argument("generator: true_theta length != m");
  if (!(spec.tie_fraction >= 0.0 && spec.tie_fraction < 1.0))
    throw std::invalid_argument("generator: tie_fraction must be in [0,1)");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto draw = [&](Eigen::VectorXd& v) {
    v.resize(spec.m);
    for (int j = 0; j < spec.m; ++j)
      v[j] = spec.feature_law == FeatureLaw::UnitGaussian ? gauss(rng) : unit(rng);
  };

  std::vector<PreferencePair> pairs(static_cast<size_t>(spec.n));
  for (auto& p : pairs) {
    draw(p.x);
    draw(p.y);
    double prob_y = bt_prob(spec.true_theta.dot(p.x), spec.true_theta.dot(p.y));
    p.o = unit(rng) < prob_y ? 1.0 : 0.0;
  }

  const int ties = static_cast<int>(std::floor(spec.tie_fraction * spec.n));
  if (ties > 0) {
    std::vector<int> idx(static_cast<size_t>(spec.n));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int t = 0; t < ties; ++t) pairs[static_cast<size_t>(idx[static_cast<size_t>(t)])].o = 0.5;
  }
  return PreferenceDataset(std::move(pairs));
}

Eigen::VectorXd random_unit_vector(int m, std::uint64_t seed) {
  if (m <= 0) throw std::invalid_argument("random_unit_vector: m must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(m);
  double norm = 0.0;
  while (norm == 0.0) {
    for (int j = 0; j < m; ++j) v[j] = gauss(rng);
    norm = v.norm();
  }
  return v / norm;
}

namespace {

Eigen::VectorXd parse_vector(const nlohmann::json& j, const char* key, int line) {
  if (!j.contains(key) || !j[key].is_array())
    throw std::runtime_error("line " + std::to_string(line) + ": missing array \"" +
                             key + "\"");
  const auto& arr = j[key];
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw std::runtime_error("line " + std::to_string(line) + ": non-numeric entry in \"" +
                               key + "\"");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

void append_vector(std::string& out, const Eigen::VectorXd& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  out += ']';
}

}  // namespace

PreferenceDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<PreferencePair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw std::runtime_error("line " + std::to_string(lineno) + ": invalid JSON");
    PreferencePair p;
    p.x = parse_vector(j, "x", lineno);
    p.y = parse_vector(j, "y", lineno);
    if (!j.contains("o") || !j["o"].is_number())
      throw std::runtime_error("line " + std::to_string(lineno) + ": missing numeric \"o\"");
    p.o = j["o"].get<double>();
    if (!is_valid_label(p.o))
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": label must be one of {0, 0.5, 1}");
    if (p.x.size() != p.y.size() || p.x.size() == 0)
      throw std::runtime_error("line " + std::to_string(lineno) + ": dimension mismatch");
    if (!pairs.empty() && p.x.size() != pairs[0].x.size())
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": dimension differs from line 1");
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw std::runtime_error("empty dataset: " + path);
  return PreferenceDataset(std::move(pairs));
}

void save_dataset(const PreferenceDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  std::string line;
  for (const auto& p : ds.pairs()) {
    line.clear();
    line += "{\"x\":";
    append_vector(line, p.x);
    line += ",\"y\":";
    append_vector(line, p.y);
    line += ",\"o\":";
    line += format_double(p.o);
    line += "}\n";
    out << line;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

double PcaProjection::explained_variance_ratio() const {
  if (total_variance <= 0.0) return 0.0;
  return explained_variance.sum() / total_variance;
}

Eigen::VectorXd PcaProjection::project(const Eigen::VectorXd& v) const {
  if (v.size() != mean.size()) throw std::invalid_argument("pca: dimension mismatch");
  return components * (v - mean);
}

PcaProjection pca_fit(const PreferenceDataset& ds, int k) {
  const int m = ds.m();
  if (k < 1 || k > m) throw std::invalid_argument("pca_fit: k must be in [1, m]");
  Eigen::MatrixXd rows = ds.outcome_matrix();

  bool all_identical = true;
  for (Eigen::Index i = 1; i < rows.rows() && all_identical; ++i)
    all_identical = rows.row(i) == rows.row(0);
  if (all_identical) throw std::invalid_argument("pca_fit: all outcomes identical");

  PcaProjection proj;
  proj.mean = rows.colwise().mean();
  Eigen::MatrixXd centered = rows.rowwise() - proj.mean.transpose();
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(rows.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("pca_fit: eigensolver failed");

  // eigenvalues come back ascending; take the top k in descending order
  proj.components.resize(k, m);
  proj.explained_variance.resize(k);
  proj.total_variance = eig.eigenvalues().sum();
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd comp = eig.eigenvectors().col(m - 1 - c);
    int imax = 0;
    comp.cwiseAbs().maxCoeff(&imax);
    if (comp[imax] < 0.0) comp = -comp;
    proj.components.row(c) = comp.transpose();
    proj.explained_variance[c] = std::max(0.0, eig.eigenvalues()[m - 1 - c]);
  }
  return proj;
}

PreferenceDataset pca_apply(const PcaProjection& proj, const PreferenceDataset& ds) {
  if (proj.input_dim() != ds.m())
    throw std::invalid_argument("pca_apply: projection dimension != dataset dimension");
  std::vector<PreferencePair> out;
  out.reserve(static_cast<size_t>(ds.n()));
  for (const auto& p : ds.pairs())
    out.push_back({proj.project(p.x), proj.project(p.y), p.o});
  return PreferenceDataset(std::move(out));
}

PcaProjection load_projection(const std::string& path) {
  nlohmann::json j = read_json_file(path);
  PcaProjection proj;
  const auto& mean = j.at("mean");
  proj.mean.resize(mean.size());
  for (size_t i = 0; i < mean.size(); ++i)
    proj.mean[static_cast<Eigen::Index>(i)] = mean[i].get<double>();
  const auto& comps = j.at("components");
  if (comps.empty()) throw std::runtime_error("projection file: empty components");
  proj.components.resize(comps.size(), proj.mean.size());
  for (size_t r = 0; r < comps.size(); ++r) {
    if (comps[r].size() != static_cast<size_t>(proj.mean.size()))
      throw std::runtime_error("projection file: component length mismatch");
    for (size_t c = 0; c < comps[r].size(); ++c)
      proj.components(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          comps[r][c].get<double>();
  }
  return proj;
}

void save_projection(const PcaProjection& proj, const std::string& path) {
  nlohmann::json j;
  j["mean"] = std::vector<double>(proj.mean.data(), proj.mean.data() + proj.mean.size());
  nlohmann::json comps = nlohmann::json::array();
  for (Eigen::Index r = 0; r < proj.components.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < proj.components.cols(); ++c) row.push_back(proj.components(r, c));
    comps.push_back(std::move(row));
  }
  j["components"] = std::move(comps);
  write_json_file(j, path);
}

std::pair<PreferenceDataset, std::vector<int>> subsample(const PreferenceDataset& ds,
                                                         double fraction,
                                                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("subsample: fraction must be in (0, 1]");
  const int n = ds.n();
  const int count = std::min(n, static_cast<int>(std::ceil(fraction * n)));
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<size_t>(count));
  std::sort(idx.begin(), idx.end());
  return {ds.subset(idx), idx};
}

}  // namespace prefpoison

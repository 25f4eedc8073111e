// ctsforge/backend.h

// Copyright 2026 The ctsforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Embedding backend: centering + ZCA whitening, length normalization, LDA,
// two-covariance PLDA and cosine scoring. Embedding sets are N x D with one
// vector per row.

#ifndef CTSFORGE_BACKEND_H_
#define CTSFORGE_BACKEND_H_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ctsforge {

inline constexpr double kCovEps = 1e-10;

/// Length-normalized copy of v. Throws std::domain_error for a zero vector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> length_norm(
    const Eigen::MatrixBase<Derived>& v) {
  auto norm = v.norm();
  if (!(norm > 0)) throw std::domain_error("length_norm: zero vector");
  return v / norm;
}

/// Inner product of the length-normalized vectors.
template <typename A, typename B>
typename A::Scalar cosine_score(const Eigen::MatrixBase<A>& a,
                                const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_score: dimension mismatch");
  auto na = a.norm(), nb = b.norm();
  if (!(na > 0) || !(nb > 0)) throw std::domain_error("cosine_score: zero vector");
  return a.dot(b) / (na * nb);
}

struct Gaussianizer {
  Eigen::VectorXd mean;
  Eigen::MatrixXd whitener;  // symmetric

  Eigen::Index dim() const { return mean.size(); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
  static Gaussianizer identity(Eigen::Index dim);
};

/// Sample mean and ZCA whitener U diag(lambda^-1/2) U^T of the (1/N)
/// sample covariance, eigenvalues floored at cov_eps. Needs N > D and a
/// covariance with at least one eigenvalue above cov_eps.
Gaussianizer fit_center_whiten(const Eigen::MatrixXd& rows, double cov_eps = kCovEps);

struct LdaTransform {
  Eigen::MatrixXd projection;   // d_out x D
  Eigen::VectorXd eigenvalues;  // descending

  Eigen::Index out_dim() const { return projection.rows(); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const {
    return rows * projection.transpose();
  }
};

struct LdaScatter {
  Eigen::MatrixXd between;
  Eigen::MatrixXd within;  // ridge included
};

/// Between/within-class scatter (1/N normalized); the within-class matrix
/// carries a ridge of ridge_scale * trace / D.
LdaScatter lda_scatter(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                       double ridge_scale = 1e-6);

/// Top d_out generalized eigenvectors of S_b v = lambda S_w v, scaled so
/// that v^T S_w v = 1.
LdaTransform fit_lda(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                     int d_out, double ridge_scale = 1e-6);

struct LabeledEmbeddingSet {
  Eigen::MatrixXd vectors;
  std::vector<int> labels;
  std::vector<bool> original;  // false for noise-degraded copies

  LabeledEmbeddingSet originals_only() const;
};

/// x = mu + y + e, y ~ N(0, between), e ~ N(0, within).
struct PldaModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd between;
  Eigen::MatrixXd within;

  Eigen::Index dim() const { return mu.size(); }
  /// Throws unless shapes agree, both matrices are symmetric, within is
  /// positive definite and between positive semi-definite.
  void check() const;
};

/// Total marginal log-likelihood of labeled data under the model.
double plda_log_likelihood(const PldaModel& model, const Eigen::MatrixXd& rows,
                           const std::vector<int>& labels);

struct PldaFit {
  PldaModel model;
  std::vector<double> log_likelihood;  // [0] at init, then after each iteration
  std::vector<std::string> warnings;
};

/// EM for the two-covariance model starting from mu = global mean and
/// between = within = half the total covariance. Every speaker needs at
/// least two vectors.
PldaFit fit_plda_em(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                    int n_iters = 20);

/// Same-speaker vs different-speaker log-likelihood ratio for a pair of
/// single vectors. The model is diagonalized once (within -> I, between ->
/// diag(psi)), after which each score costs two projections.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel& model);

  double score(const Eigen::VectorXd& e1, const Eigen::VectorXd& e2) const;
  Eigen::Index dim() const { return mu_.size(); }

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd transform_;   // rows are the diagonalizing directions
  Eigen::VectorXd quad_;        // coefficient of a^2 + b^2 per dimension
  Eigen::VectorXd cross_;       // coefficient of a*b per dimension
  double offset_ = 0.0;
};

double plda_llr(const PldaModel& model, const Eigen::VectorXd& e1,
                const Eigen::VectorXd& e2);

/// center -> whiten -> length-norm -> (LDA when given).
Eigen::MatrixXd apply_backend(const Gaussianizer& gauss, const LdaTransform* lda,
                              const Eigen::MatrixXd& rows);

// Binary files, float64 little-endian:
//   GAUS: u32 D, mean, whitener
//   LDA0: u32 d_out, u32 D, projection, eigenvalues
//   PLDA: u32 d, mu, between, within
void write_gaussianizer(const std::filesystem::path& path, const Gaussianizer& g);
Gaussianizer read_gaussianizer(const std::filesystem::path& path);
void write_lda(const std::filesystem::path& path, const LdaTransform& lda);
LdaTransform read_lda(const std::filesystem::path& path);
void write_plda(const std::filesystem::path& path, const PldaModel& plda);
PldaModel read_plda(const std::filesystem::path& path);

}  // namespace ctsforge

#endif  // CTSFORGE_BACKEND_H_

// backend.cc

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

#include "ctsforge/backend.h"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ctsforge/binary_io.h"

namespace ctsforge {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& rows, const Eigen::VectorXd& mean) {
  Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(rows.rows());
}

void check_labels(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                  const char* who) {
  if (static_cast<Eigen::Index>(labels.size()) != rows.rows())
    throw std::invalid_argument(std::string(who) + ": " +
                                std::to_string(labels.size()) + " labels for " +
                                std::to_string(rows.rows()) + " vectors");
}

/// Row indices grouped by label, in label order.
std::map<int, std::vector<Eigen::Index>> group_by_label(const std::vector<int>& labels) {
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i)
    groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  return groups;
}

}  // namespace

// ---------------------------------------------------------------------------

Eigen::MatrixXd Gaussianizer::apply(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != dim())
    throw std::invalid_argument("gaussianizer: expected dim " + std::to_string(dim()) +
                                ", got " + std::to_string(rows.cols()));
  return (rows.rowwise() - mean.transpose()) * whitener;  // whitener symmetric
}

Gaussianizer Gaussianizer::identity(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim)};
}

Gaussianizer fit_center_whiten(const Eigen::MatrixXd& rows, double cov_eps) {
  const Eigen::Index n = rows.rows(), d = rows.cols();
  if (n <= d)
    throw std::invalid_argument(
        "fit_center_whiten: " + std::to_string(n) + " vectors of dim " +
        std::to_string(d) +
        "; need more vectors than dimensions (add data or reduce the embedding dim)");
  Gaussianizer g;
  g.mean = rows.colwise().mean().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance(rows, g.mean));
  Eigen::VectorXd lambda = eig.eigenvalues();
  if (!(lambda.maxCoeff() > cov_eps))
    throw std::invalid_argument("fit_center_whiten: covariance is zero");
  lambda = lambda.cwiseMax(cov_eps);
  g.whitener = eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
               eig.eigenvectors().transpose();
  g.whitener = symmetrized(g.whitener);
  return g;
}

// ---------------------------------------------------------------------------

LdaScatter lda_scatter(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                       double ridge_scale) {
  check_labels(rows, labels, "lda");
  const Eigen::Index d = rows.cols();
  const auto n = static_cast<double>(rows.rows());
  Eigen::VectorXd mean = rows.colwise().mean().transpose();
  LdaScatter s{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
  for (const auto& [label, idx] : group_by_label(labels)) {
    Eigen::MatrixXd members(static_cast<Eigen::Index>(idx.size()), d);
    for (std::size_t i = 0; i < idx.size(); ++i)
      members.row(static_cast<Eigen::Index>(i)) = rows.row(idx[i]);
    Eigen::VectorXd class_mean = members.colwise().mean().transpose();
    Eigen::MatrixXd centered = members.rowwise() - class_mean.transpose();
    s.within += centered.transpose() * centered;
    Eigen::VectorXd diff = class_mean - mean;
    s.between += static_cast<double>(idx.size()) * diff * diff.transpose();
  }
  s.within /= n;
  s.between /= n;
  const double trace = s.within.trace();
  if (!(trace > 0.0)) throw std::invalid_argument("lda: within-class scatter is zero");
  s.within.diagonal().array() += ridge_scale * trace / static_cast<double>(d);
  return s;
}

LdaTransform fit_lda(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                     int d_out, double ridge_scale) {
  check_labels(rows, labels, "lda");
  const auto n_classes = static_cast<int>(group_by_label(labels).size());
  if (n_classes < 2) throw std::invalid_argument("lda: need at least two classes");
  const int max_out = std::min(static_cast<int>(rows.cols()), n_classes - 1);
  if (d_out < 1 || d_out > max_out)
    throw std::invalid_argument("lda: requested " + std::to_string(d_out) +
                                " dims; at most " + std::to_string(max_out) +
                                " for " + std::to_string(n_classes) +
                                " classes in dim " + std::to_string(rows.cols()));
  LdaScatter s = lda_scatter(rows, labels, ridge_scale);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(s.between, s.within);
  if (ges.info() != Eigen::Success)
    throw std::runtime_error("lda: generalized eigensolver failed");
  const Eigen::Index d = rows.cols();
  LdaTransform lda;
  lda.projection.resize(d_out, d);
  lda.eigenvalues.resize(d_out);
  for (int i = 0; i < d_out; ++i) {
    lda.projection.row(i) = ges.eigenvectors().col(d - 1 - i).transpose();
    lda.eigenvalues[i] = ges.eigenvalues()[d - 1 - i];
  }
  return lda;
}

LabeledEmbeddingSet LabeledEmbeddingSet::originals_only() const {
  LabeledEmbeddingSet out;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (i >= original.size() || original[i]) keep.push_back(static_cast<Eigen::Index>(i));
  out.vectors.resize(static_cast<Eigen::Index>(keep.size()), vectors.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.vectors.row(static_cast<Eigen::Index>(i)) = vectors.row(keep[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(keep[i])]);
    out.original.push_back(true);
  }
  return out;
}

// ---------------------------------------------------------------------------

void PldaModel::check() const {
  const Eigen::Index d = dim();
  if (between.rows() != d || between.cols() != d || within.rows() != d ||
      within.cols() != d)
    throw std::invalid_argument("plda: inconsistent dimensions");
  const double tol = 1e-9;
  if (!between.isApprox(between.transpose(), tol) ||
      !within.isApprox(within.transpose(), tol))
    throw std::invalid_argument("plda: covariances must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> w(within, Eigen::EigenvaluesOnly);
  if (!(w.eigenvalues().minCoeff() > 0.0))
    throw std::invalid_argument("plda: within-class covariance not positive definite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> b(between, Eigen::EigenvaluesOnly);
  if (b.eigenvalues().minCoeff() < -tol * std::max(1.0, b.eigenvalues().cwiseAbs().maxCoeff()))
    throw std::invalid_argument("plda: between-class covariance not PSD");
}

namespace {

struct SpeakerStats {
  std::vector<int> counts;
  Eigen::MatrixXd means;          // speakers x d
  Eigen::MatrixXd within_scatter; // sum over speakers of scatter about own mean
  Eigen::Index total = 0;
};

SpeakerStats speaker_stats(const Eigen::MatrixXd& rows, const std::vector<int>& labels) {
  auto groups = group_by_label(labels);
  const Eigen::Index d = rows.cols();
  SpeakerStats s;
  s.means.resize(static_cast<Eigen::Index>(groups.size()), d);
  s.within_scatter = Eigen::MatrixXd::Zero(d, d);
  s.total = rows.rows();
  Eigen::Index k = 0;
  for (const auto& [label, idx] : groups) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (auto i : idx) mean += rows.row(i).transpose();
    mean /= static_cast<double>(idx.size());
    for (auto i : idx) {
      Eigen::VectorXd r = rows.row(i).transpose() - mean;
      s.within_scatter += r * r.transpose();
    }
    s.means.row(k++) = mean.transpose();
    s.counts.push_back(static_cast<int>(idx.size()));
  }
  return s;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string("plda: ") + what + " not positive definite");
  return llt;
}

double log_likelihood(const PldaModel& model, const SpeakerStats& s) {
  const auto d = static_cast<double>(model.dim());
  auto w_llt = checked_llt(model.within, "within-class covariance");
  const double logdet_w = log_det(w_llt);
  double ll = -0.5 * w_llt.solve(s.within_scatter).trace();
  std::map<int, Eigen::LLT<Eigen::MatrixXd>> by_count;
  for (std::size_t i = 0; i < s.counts.size(); ++i) {
    const int n = s.counts[i];
    auto it = by_count.find(n);
    if (it == by_count.end())
      it = by_count.emplace(n, checked_llt(model.between + model.within / n,
                                           "speaker-mean covariance")).first;
    Eigen::VectorXd r = s.means.row(static_cast<Eigen::Index>(i)).transpose() - model.mu;
    ll += -0.5 * (d * kLog2Pi + log_det(it->second) + r.dot(it->second.solve(r)));
    ll += -0.5 * ((n - 1) * d * kLog2Pi + (n - 1) * logdet_w + d * std::log(n));
  }
  return ll;
}

/// Clamps eigenvalues below floor; returns true if any was raised.
bool floor_eigenvalues(Eigen::MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.eigenvalues().minCoeff() >= floor) return false;
  m = eig.eigenvectors() * eig.eigenvalues().cwiseMax(floor).asDiagonal() *
      eig.eigenvectors().transpose();
  m = symmetrized(m);
  return true;
}

}  // namespace

double plda_log_likelihood(const PldaModel& model, const Eigen::MatrixXd& rows,
                           const std::vector<int>& labels) {
  check_labels(rows, labels, "plda");
  return log_likelihood(model, speaker_stats(rows, labels));
}

PldaFit fit_plda_em(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                    int n_iters) {
  check_labels(rows, labels, "plda");
  const Eigen::Index d = rows.cols();
  if (rows.rows() <= d)
    throw std::invalid_argument("plda: need more vectors than dimensions");
  SpeakerStats s = speaker_stats(rows, labels);
  for (std::size_t i = 0; i < s.counts.size(); ++i)
    if (s.counts[i] < 2)
      throw std::invalid_argument("plda: a speaker has a single vector; every "
                                  "speaker needs at least two");

  PldaFit fit;
  auto& m = fit.model;
  m.mu = rows.colwise().mean().transpose();
  Eigen::MatrixXd total = covariance(rows, m.mu);
  m.between = 0.5 * total;
  m.within = 0.5 * total;
  const double w_floor = kCovEps * std::max(1e-300, total.trace() / static_cast<double>(d));
  if (floor_eigenvalues(m.within, w_floor))
    fit.warnings.push_back("initial within-class covariance floored");
  fit.log_likelihood.push_back(log_likelihood(m, s));

  const auto n_spk = static_cast<double>(s.counts.size());
  for (int iter = 0; iter < n_iters; ++iter) {
    // E-step: posterior of each speaker's latent mean z = mu + y.
    std::map<int, std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> gain_cov;
    Eigen::MatrixXd post(s.means.rows(), d);
    for (std::size_t i = 0; i < s.counts.size(); ++i) {
      const int n = s.counts[i];
      auto it = gain_cov.find(n);
      if (it == gain_cov.end()) {
        auto llt = checked_llt(m.between + m.within / n, "speaker-mean covariance");
        Eigen::MatrixXd gain = llt.solve(m.between).transpose();  // B (B + W/n)^-1
        Eigen::MatrixXd cov = symmetrized(m.between - gain * m.between);
        it = gain_cov.emplace(n, std::make_pair(gain, cov)).first;
      }
      auto row = static_cast<Eigen::Index>(i);
      post.row(row) = (m.mu + it->second.first *
                                  (s.means.row(row).transpose() - m.mu)).transpose();
    }

    // M-step.
    Eigen::VectorXd mu = post.colwise().mean().transpose();
    Eigen::MatrixXd between = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd within = s.within_scatter;
    for (std::size_t i = 0; i < s.counts.size(); ++i) {
      const int n = s.counts[i];
      const auto& cov = gain_cov.at(n).second;
      auto row = static_cast<Eigen::Index>(i);
      Eigen::VectorXd dz = post.row(row).transpose() - mu;
      between += cov + dz * dz.transpose();
      Eigen::VectorXd dx = s.means.row(row).transpose() - post.row(row).transpose();
      within += n * (dx * dx.transpose() + cov);
    }
    m.mu = mu;
    m.between = symmetrized(between / n_spk);
    m.within = symmetrized(within / static_cast<double>(s.total));
    floor_eigenvalues(m.between, 0.0);
    if (floor_eigenvalues(m.within, w_floor))
      fit.warnings.push_back("iteration " + std::to_string(iter + 1) +
                             ": within-class covariance floored");
    fit.log_likelihood.push_back(log_likelihood(m, s));
  }
  return fit;
}

// ---------------------------------------------------------------------------

PldaScorer::PldaScorer(const PldaModel& model) {
  const Eigen::Index d = model.dim();
  if (model.between.rows() != d || model.within.rows() != d)
    throw std::invalid_argument("plda: inconsistent dimensions");
  // V^T W V = I and V^T B V = diag(psi).
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      symmetrized(model.between), symmetrized(model.within));
  if (ges.info() != Eigen::Success)
    throw std::runtime_error("plda: within-class covariance not positive definite");
  mu_ = model.mu;
  transform_ = ges.eigenvectors().transpose();
  Eigen::ArrayXd psi = ges.eigenvalues().array().max(0.0);
  // Per dimension, with a, b the projected vectors:
  //   same:  [a b] ~ N(0, [[1+psi, psi], [psi, 1+psi]])
  //   diff:  [a b] ~ N(0, diag(1+psi, 1+psi))
  quad_ = (0.5 * (1.0 / (1.0 + psi) - (1.0 + psi) / (1.0 + 2.0 * psi))).matrix();
  cross_ = (psi / (1.0 + 2.0 * psi)).matrix();
  offset_ = ((1.0 + psi).log() - 0.5 * (1.0 + 2.0 * psi).log()).sum();
}

double PldaScorer::score(const Eigen::VectorXd& e1, const Eigen::VectorXd& e2) const {
  if (e1.size() != dim() || e2.size() != dim())
    throw std::invalid_argument("plda_llr: dimension mismatch (model dim " +
                                std::to_string(dim()) + ")");
  Eigen::ArrayXd a = transform_ * (e1 - mu_);
  Eigen::ArrayXd b = transform_ * (e2 - mu_);
  return (quad_.array() * (a.square() + b.square()) + cross_.array() * (a * b)).sum() +
         offset_;
}

double plda_llr(const PldaModel& model, const Eigen::VectorXd& e1,
                const Eigen::VectorXd& e2) {
  return PldaScorer(model).score(e1, e2);
}

Eigen::MatrixXd apply_backend(const Gaussianizer& gauss, const LdaTransform* lda,
                              const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd out = gauss.apply(rows);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    out.row(i) = length_norm(out.row(i).transpose()).transpose();
  if (!lda) return out;
  if (lda->projection.cols() != out.cols())
    throw std::invalid_argument("apply_backend: LDA expects dim " +
                                std::to_string(lda->projection.cols()));
  return lda->apply(out);
}

// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace

void write_gaussianizer(const std::filesystem::path& path, const Gaussianizer& g) {
  auto out = open_out(path);
  write_magic(out, "GAUS");
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
  write_matrix_data<double>(out, g.mean.transpose());
  write_matrix_data<double>(out, g.whitener);
}

Gaussianizer read_gaussianizer(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_magic(in, "GAUS");
  auto d = read_le<std::uint32_t>(in);
  Gaussianizer g{Eigen::VectorXd(d), Eigen::MatrixXd(d, d)};
  read_matrix_data<double>(in, g.mean);
  read_matrix_data<double>(in, g.whitener);
  return g;
}

void write_lda(const std::filesystem::path& path, const LdaTransform& lda) {
  auto out = open_out(path);
  write_magic(out, "LDA0");
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(lda.projection.rows()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(lda.projection.cols()));
  write_matrix_data<double>(out, lda.projection);
  write_matrix_data<double>(out, lda.eigenvalues);
}

LdaTransform read_lda(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_magic(in, "LDA0");
  auto rows = read_le<std::uint32_t>(in);
  auto cols = read_le<std::uint32_t>(in);
  LdaTransform lda{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
  read_matrix_data<double>(in, lda.projection);
  read_matrix_data<double>(in, lda.eigenvalues);
  return lda;
}

void write_plda(const std::filesystem::path& path, const PldaModel& plda) {
  auto out = open_out(path);
  write_magic(out, "PLDA");
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(plda.dim()));
  write_matrix_data<double>(out, plda.mu);
  write_matrix_data<double>(out, plda.between);
  write_matrix_data<double>(out, plda.within);
}

PldaModel read_plda(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_magic(in, "PLDA");
  auto d = read_le<std::uint32_t>(in);
  PldaModel m{Eigen::VectorXd(d), Eigen::MatrixXd(d, d), Eigen::MatrixXd(d, d)};
  read_matrix_data<double>(in, m.mu);
  read_matrix_data<double>(in, m.between);
  read_matrix_data<double>(in, m.within);
  return m;
}

}  // namespace ctsforge

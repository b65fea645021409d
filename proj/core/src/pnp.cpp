// Copyright 2026 The roadcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "roadcal/pnp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "roadcal/errors.hpp"

namespace roadcal
{

void RansacParams::validate() const
{
  if (max_iterations < 1 || !(inlier_threshold_px > 0.0) || min_inlier_ratio < 0.0 ||
      min_inlier_ratio > 1.0) {
    throw Error(ErrorCode::kConfig, "invalid RANSAC parameters");
  }
}

double median(std::vector<double> values)
{
  if (values.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) {
    return *mid;
  }
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

std::vector<double> reprojection_errors(
  const ExtrinsicCalibration & extr, const Intrinsics & intr,
  std::span<const Correspondence> corrs)
{
  std::vector<double> out;
  out.reserve(corrs.size());
  for (const auto & c : corrs) {
    const auto px = try_project(intr, extr, c.world);
    out.push_back(px ? (*px - c.pixel).norm() : std::numeric_limits<double>::infinity());
  }
  return out;
}

double reprojection_rms(
  const ExtrinsicCalibration & extr, const Intrinsics & intr,
  std::span<const Correspondence> corrs)
{
  double sum = 0.0;
  for (double e : reprojection_errors(extr, intr, corrs)) {
    sum += e * e;
  }
  return corrs.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(corrs.size()));
}

namespace
{

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

// Rigid alignment of world points onto camera-frame points.
ExtrinsicCalibration align(std::span<const Correspondence> corrs, const std::vector<Vec3> & pcs)
{
  const auto n = static_cast<double>(corrs.size());
  Vec3 cw = Vec3::Zero();
  Vec3 cc = Vec3::Zero();
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    cw += corrs[i].world;
    cc += pcs[i];
  }
  cw /= n;
  cc /= n;
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    h += (pcs[i] - cc) * (corrs[i].world - cw).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  ExtrinsicCalibration out;
  out.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  out.translation = cc - out.rotation * cw;
  return out;
}

// Shared machinery for the planar (3 control points) and general (4 control
// points) formulations.
class ControlPointSolver
{
public:
  ControlPointSolver(
    std::span<const Correspondence> corrs, const Intrinsics & intr, std::vector<Vec3> controls,
    MatX alphas)
  : corrs_(corrs), controls_(std::move(controls)), alphas_(std::move(alphas))
  {
    k_ = static_cast<int>(controls_.size());
    const auto n = static_cast<Eigen::Index>(corrs.size());
    MatX m = MatX::Zero(2 * n, 3 * k_);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto & px = corrs[static_cast<std::size_t>(i)].pixel;
      for (int j = 0; j < k_; ++j) {
        const double a = alphas_(i, j);
        m(2 * i, 3 * j) = a * intr.fx;
        m(2 * i, 3 * j + 2) = a * (intr.cx - px.x());
        m(2 * i + 1, 3 * j + 1) = a * intr.fy;
        m(2 * i + 1, 3 * j + 2) = a * (intr.cy - px.y());
      }
    }
    Eigen::SelfAdjointEigenSolver<MatX> eig(m.transpose() * m);
    null_ = eig.eigenvectors();  // ascending eigenvalues: column 0 is the best null vector
    for (int a = 0; a < k_; ++a) {
      for (int b = a + 1; b < k_; ++b) {
        pairs_.push_back({a, b});
        rho_.push_back((controls_[a] - controls_[b]).squaredNorm());
      }
    }
  }

  // Squared-distance constraint matrix over the monomials of the first
  // `dims` betas, ordered (b00, b01, b11, b02, b12, b22, b03, ...).
  MatX constraint_matrix(int dims) const
  {
    const int monomials = dims * (dims + 1) / 2;
    MatX l(static_cast<Eigen::Index>(pairs_.size()), monomials);
    for (std::size_t r = 0; r < pairs_.size(); ++r) {
      std::vector<Vec3> dv(dims);
      for (int i = 0; i < dims; ++i) {
        dv[i] = control_of(i, pairs_[r][0]) - control_of(i, pairs_[r][1]);
      }
      int col = 0;
      for (int b = 0; b < dims; ++b) {
        for (int a = 0; a <= b; ++a) {
          l(static_cast<Eigen::Index>(r), col++) = (a == b ? 1.0 : 2.0) * dv[a].dot(dv[b]);
        }
      }
    }
    return l;
  }

  VecX rho() const { return Eigen::Map<const VecX>(rho_.data(), static_cast<Eigen::Index>(rho_.size())); }

  // Gauss-Newton on the distance constraints over `dims` betas.
  void gauss_newton(VecX & beta, int iterations = 10) const
  {
    const int dims = static_cast<int>(beta.size());
    const MatX l = constraint_matrix(dims);
    const VecX target = rho();
    for (int it = 0; it < iterations; ++it) {
      MatX jac(l.rows(), dims);
      VecX res(l.rows());
      for (Eigen::Index r = 0; r < l.rows(); ++r) {
        double value = 0.0;
        int col = 0;
        VecX grad = VecX::Zero(dims);
        for (int b = 0; b < dims; ++b) {
          for (int a = 0; a <= b; ++a) {
            const double c = l(r, col++);
            value += c * beta[a] * beta[b];
            grad[a] += c * beta[b];
            grad[b] += c * beta[a];
          }
        }
        res[r] = target[r] - value;
        jac.row(r) = grad.transpose();
      }
      const VecX step = jac.colPivHouseholderQr().solve(res);
      if (!step.allFinite()) {
        break;
      }
      beta += step;
      if (step.norm() < 1e-14 * (1.0 + beta.norm())) {
        break;
      }
    }
  }

  // Pose for camera-frame control points given by the beta combination.
  ExtrinsicCalibration pose(const VecX & beta) const
  {
    std::vector<Vec3> ccs(k_, Vec3::Zero());
    for (int i = 0; i < beta.size(); ++i) {
      for (int j = 0; j < k_; ++j) {
        ccs[j] += beta[i] * control_of(i, j);
      }
    }
    std::vector<Vec3> pcs(corrs_.size(), Vec3::Zero());
    double mean_z = 0.0;
    for (std::size_t p = 0; p < corrs_.size(); ++p) {
      for (int j = 0; j < k_; ++j) {
        pcs[p] += alphas_(static_cast<Eigen::Index>(p), j) * ccs[j];
      }
      mean_z += pcs[p].z();
    }
    if (mean_z < 0.0) {
      for (auto & p : pcs) {
        p = -p;
      }
    }
    return align(corrs_, pcs);
  }

  int controls() const { return k_; }

private:
  Vec3 control_of(int null_index, int control) const
  {
    return null_.col(null_index).segment<3>(3 * control);
  }

  std::span<const Correspondence> corrs_;
  std::vector<Vec3> controls_;
  MatX alphas_;
  MatX null_;
  int k_ = 0;
  std::vector<std::array<int, 2>> pairs_;
  std::vector<double> rho_;
};

// Beta seeds from the linearized distance constraints. `columns` picks the
// monomials kept; the first entry must be b00.
VecX linearized_betas(const MatX & l_full, const VecX & rho, const std::vector<int> & columns, int dims)
{
  MatX l(l_full.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    l.col(static_cast<Eigen::Index>(c)) = l_full.col(columns[c]);
  }
  const VecX b = l.colPivHouseholderQr().solve(rho);
  VecX beta = VecX::Zero(dims);
  if (!b.allFinite()) {
    return beta;
  }
  const double b00 = b[0];
  beta[0] = std::sqrt(std::abs(b00));
  if (beta[0] == 0.0) {
    return beta;
  }
  // Column layout (b00, b01, b11, b02, b12, b22, b03, ...).
  if (columns.size() >= 3 && columns[2] == 2) {
    const double b11 = b[2];
    beta[1] = (b00 < 0.0) == (b11 < 0.0) ? std::sqrt(std::abs(b11)) : 0.0;
    if ((b[1] < 0.0) != (b00 < 0.0)) {
      beta[0] = -beta[0];
    }
    if (columns.size() >= 5 && dims > 2) {
      beta[2] = (b00 < 0.0 ? -b[3] : b[3]) / beta[0];
    }
  } else {
    // (b00, b01, b02, b03): every beta from its cross term with beta 0.
    for (std::size_t c = 1; c < columns.size(); ++c) {
      beta[static_cast<Eigen::Index>(c)] = (b00 < 0.0 ? -b[static_cast<Eigen::Index>(c)] : b[static_cast<Eigen::Index>(c)]) / beta[0];
    }
  }
  return beta;
}

struct Candidate
{
  ExtrinsicCalibration calib;
  double rms = std::numeric_limits<double>::infinity();
};

void consider(
  Candidate & best, const ExtrinsicCalibration & calib, std::span<const Correspondence> corrs,
  const Intrinsics & intr)
{
  if (!calib.rotation.allFinite() || !calib.translation.allFinite()) {
    return;
  }
  const double rms = reprojection_rms(calib, intr, corrs);
  if (rms < best.rms) {
    best.calib = calib;
    best.rms = rms;
  }
}

void solve_general(
  std::span<const Correspondence> corrs, const Intrinsics & intr, const Vec3 & centroid,
  const Mat3 & axes, const Vec3 & variances, Candidate & best)
{
  const double n = static_cast<double>(corrs.size());
  std::vector<Vec3> controls{centroid};
  Mat3 basis;
  for (int k = 0; k < 3; ++k) {
    basis.col(k) = std::sqrt(variances[k] / n) * axes.col(k);
    controls.push_back(centroid + basis.col(k));
  }
  const Mat3 inv = basis.inverse();
  MatX alphas(static_cast<Eigen::Index>(corrs.size()), 4);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Vec3 a = inv * (corrs[i].world - centroid);
    alphas.row(static_cast<Eigen::Index>(i)) << 1.0 - a.sum(), a.x(), a.y(), a.z();
  }
  const ControlPointSolver solver(corrs, intr, std::move(controls), std::move(alphas));
  const MatX l = solver.constraint_matrix(4);
  const VecX rho = solver.rho();
  const std::vector<std::vector<int>> seeds{{0, 1, 3, 6}, {0, 1, 2}, {0, 1, 2, 3, 4}};
  for (const auto & cols : seeds) {
    VecX beta = linearized_betas(l, rho, cols, 4);
    solver.gauss_newton(beta);
    consider(best, solver.pose(beta), corrs, intr);
  }
}

void solve_planar(
  std::span<const Correspondence> corrs, const Intrinsics & intr, const Vec3 & centroid,
  const Mat3 & axes, const Vec3 & variances, Candidate & best)
{
  const double n = static_cast<double>(corrs.size());
  // Two dominant principal directions span the plane.
  const Vec3 e1 = std::sqrt(variances[2] / n) * axes.col(2);
  const Vec3 e2 = std::sqrt(variances[1] / n) * axes.col(1);
  std::vector<Vec3> controls{centroid, centroid + e1, centroid + e2};
  Eigen::Matrix<double, 3, 2> basis;
  basis << e1, e2;
  const Eigen::Matrix<double, 2, 3> pinv =
    (basis.transpose() * basis).inverse() * basis.transpose();
  MatX alphas(static_cast<Eigen::Index>(corrs.size()), 3);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Vec2 a = pinv * (corrs[i].world - centroid);
    alphas.row(static_cast<Eigen::Index>(i)) << 1.0 - a.sum(), a.x(), a.y();
  }
  const ControlPointSolver solver(corrs, intr, std::move(controls), std::move(alphas));
  const MatX l = solver.constraint_matrix(3);
  const VecX rho = solver.rho();

  // N = 1: closed form scale.
  {
    const VecX col = l.col(0);
    VecX beta = VecX::Zero(1);
    beta[0] = std::sqrt(std::max(0.0, col.dot(rho) / col.squaredNorm()));
    solver.gauss_newton(beta);
    consider(best, solver.pose(beta), corrs, intr);
  }
  // N = 2 and N = 3 (the latter seeded from the N = 2 solution).
  {
    VecX beta2 = linearized_betas(l.leftCols(3), rho, {0, 1, 2}, 2);
    solver.gauss_newton(beta2);
    consider(best, solver.pose(beta2), corrs, intr);
    VecX beta3 = VecX::Zero(3);
    beta3.head(2) = beta2;
    solver.gauss_newton(beta3);
    consider(best, solver.pose(beta3), corrs, intr);
  }
}

}  // namespace

ExtrinsicCalibration epnp(std::span<const Correspondence> corrs, const Intrinsics & intr)
{
  if (corrs.size() < 4) {
    throw Error(ErrorCode::kInsufficientData, "EPnP requires at least 4 correspondences");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto & c : corrs) {
    centroid += c.world;
  }
  centroid /= static_cast<double>(corrs.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto & c : corrs) {
    const Vec3 d = c.world - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Vec3 variances = eig.eigenvalues().cwiseMax(0.0);  // ascending
  const Mat3 axes = eig.eigenvectors();
  const Vec3 sigma = variances.cwiseSqrt();
  if (!(sigma[2] > 0.0) || sigma[1] < 1e-6 * sigma[2]) {
    throw Error(ErrorCode::kDegenerate, "world points are collinear");
  }
  const double flatness = sigma[0] / sigma[2];

  Candidate best;
  if (flatness < 0.1) {
    solve_planar(corrs, intr, centroid, axes, variances, best);
  }
  if (flatness > 1e-6) {
    solve_general(corrs, intr, centroid, axes, variances, best);
  }
  if (!std::isfinite(best.rms)) {
    throw Error(ErrorCode::kDegenerate, "no finite EPnP solution");
  }
  best.calib.rotation = nearest_rotation(best.calib.rotation);
  return best.calib;
}

namespace
{

// Sum of squared reprojection residuals; +inf if any point leaves the
// front of the camera.
double pose_cost(
  const ExtrinsicCalibration & extr, const Intrinsics & intr, std::span<const Correspondence> corrs)
{
  double cost = 0.0;
  for (const auto & c : corrs) {
    const auto px = try_project(intr, extr, c.world);
    if (!px) {
      return std::numeric_limits<double>::infinity();
    }
    cost += (*px - c.pixel).squaredNorm();
  }
  return cost;
}

}  // namespace

ExtrinsicCalibration refine_pose(
  std::span<const Correspondence> corrs, const Intrinsics & intr,
  const ExtrinsicCalibration & init, int max_iterations)
{
  ExtrinsicCalibration current = init;
  double cost = pose_cost(current, intr, corrs);
  if (!std::isfinite(cost) || corrs.size() < 3) {
    return init;
  }
  double lambda = 1e-3;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
    for (const auto & c : corrs) {
      const Vec3 rp = current.rotation * c.world;
      const Vec3 pc = rp + current.translation;
      const double iz = 1.0 / pc.z();
      const Vec2 r(intr.fx * pc.x() * iz + intr.cx - c.pixel.x(), intr.fy * pc.y() * iz + intr.cy - c.pixel.y());
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << intr.fx * iz, 0.0, -intr.fx * pc.x() * iz * iz, 0.0, intr.fy * iz,
        -intr.fy * pc.y() * iz * iz;
      Mat3 skew;
      skew << 0.0, -rp.z(), rp.y(), rp.z(), 0.0, -rp.x(), -rp.y(), rp.x(), 0.0;
      Eigen::Matrix<double, 2, 6> j;
      j.leftCols<3>() = -dproj * skew;
      j.rightCols<3>() = dproj;
      jtj += j.transpose() * j;
      jtr += j.transpose() * r;
    }
    if (jtr.norm() < 1e-12) {
      break;
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
      Eigen::Matrix<double, 6, 6> a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Matrix<double, 6, 1> step = a.ldlt().solve(-jtr);
      ExtrinsicCalibration trial = current;
      trial.rotation = nearest_rotation(rotation_exp(step.head<3>()) * current.rotation);
      trial.translation = rotation_exp(step.head<3>()) * current.translation + step.tail<3>();
      const double trial_cost = pose_cost(trial, intr, corrs);
      if (trial_cost < cost) {
        const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
        current = trial;
        cost = trial_cost;
        lambda = std::max(lambda * 0.3, 1e-12);
        accepted = true;
        if (rel < 1e-14 || step.norm() < 1e-14) {
          return current;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) {
      break;
    }
  }
  return current;
}

namespace
{

double inlier_median(
  const ExtrinsicCalibration & calib, const Intrinsics & intr, std::span<const Correspondence> corrs,
  const std::vector<bool> & mask)
{
  const auto errors = reprojection_errors(calib, intr, corrs);
  std::vector<double> kept;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (mask[i]) {
      kept.push_back(errors[i]);
    }
  }
  return median(std::move(kept));
}

}  // namespace

RansacResult ransac_pnp(
  std::span<const Correspondence> corrs, const Intrinsics & intr, const RansacParams & params,
  const ModelCheck & is_valid)
{
  params.validate();
  const std::size_t n = corrs.size();
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientData, "RANSAC PnP requires at least 4 correspondences");
  }

  std::mt19937_64 rng(params.rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  RansacResult result;
  std::vector<bool> mask(n);
  std::array<Correspondence, 4> sample;
  for (int it = 0; it < params.max_iterations; ++it) {
    std::array<std::size_t, 4> idx{};
    for (std::size_t k = 0; k < 4; ++k) {
      std::size_t candidate = 0;
      do {
        candidate = pick(rng);
      } while (std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), candidate) !=
               idx.begin() + static_cast<std::ptrdiff_t>(k));
      idx[k] = candidate;
      sample[k] = corrs[candidate];
    }
    ExtrinsicCalibration model;
    try {
      model = epnp(sample, intr);
    } catch (const Error &) {
      continue;
    }
    if (is_valid && !is_valid(model)) {
      continue;
    }
    const auto errors = reprojection_errors(model, intr, corrs);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mask[i] = errors[i] <= params.inlier_threshold_px;
      count += mask[i] ? 1 : 0;
    }
    if (count > result.inlier_count) {
      result.inlier_count = count;
      result.inliers = mask;
      result.calib = model;
      result.best_iteration = it;
      if (count == n) {
        break;
      }
    }
  }

  if (result.best_iteration < 0 ||
      static_cast<double>(result.inlier_count) < params.min_inlier_ratio * static_cast<double>(n) ||
      result.inlier_count < 4) {
    throw Error(ErrorCode::kNoConsensus, "no RANSAC sample reached the minimum inlier ratio");
  }

  std::vector<Correspondence> inliers;
  inliers.reserve(result.inlier_count);
  for (std::size_t i = 0; i < n; ++i) {
    if (result.inliers[i]) {
      inliers.push_back(corrs[i]);
    }
  }

  const ExtrinsicCalibration sample_model = result.calib;
  result.sample_median_error_px = inlier_median(sample_model, intr, corrs, result.inliers);
  double best_median = result.sample_median_error_px;

  std::vector<ExtrinsicCalibration> candidates;
  try {
    const ExtrinsicCalibration refit = epnp(inliers, intr);
    candidates.push_back(refine_pose(inliers, intr, refit));
  } catch (const Error &) {
  }
  candidates.push_back(refine_pose(inliers, intr, sample_model));
  for (const auto & c : candidates) {
    if (is_valid && !is_valid(c)) {
      continue;
    }
    const double m = inlier_median(c, intr, corrs, result.inliers);
    if (m <= best_median) {
      best_median = m;
      result.calib = c;
    }
  }
  result.median_error_px = best_median;
  return result;
}

}  // namespace roadcal

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "xrt/core.hpp"
#include "xrt/types.hpp"

namespace xrt {

/// Probabilities are clamped to this floor before any logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

template <typename Scalar>
Scalar clamped_log(Scalar p) {
  using std::log;
  using std::max;
  return log(max(p, Scalar(kProbabilityFloor)));
}

/// H(p) with 0 log 0 = 0.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index y = 0; y < p.size(); ++y)
    if (p(y) > Scalar(0)) h -= p(y) * clamped_log(p(y));
  return h;
}

/// Cross-entropy H(target, predicted) = -sum_y target(y) log predicted(y).
/// Zero-mass target entries contribute nothing.
template <typename DerivedT, typename DerivedP>
typename DerivedP::Scalar xr_loss(const Eigen::MatrixBase<DerivedT>& target,
                                  const Eigen::MatrixBase<DerivedP>& predicted) {
  using Scalar = typename DerivedP::Scalar;
  if (target.size() != predicted.size())
    throw Error(ErrorCode::DimensionMismatch, "xr_loss: label spaces differ");
  Scalar loss(0);
  for (Eigen::Index y = 0; y < target.size(); ++y)
    if (target(y) != 0) loss -= Scalar(target(y)) * clamped_log(predicted(y));
  return loss;
}

inline double xr_loss(const Distribution& target, const Distribution& predicted) {
  return xr_loss(target.mass(), predicted.mass());
}

/// KL(target || predicted). Diagnostic only; training minimizes xr_loss.
template <typename DerivedT, typename DerivedP>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedT>& target,
                                        const Eigen::MatrixBase<DerivedP>& predicted) {
  using Scalar = typename DerivedP::Scalar;
  if (target.size() != predicted.size())
    throw Error(ErrorCode::DimensionMismatch, "kl_divergence: label spaces differ");
  Scalar kl(0);
  for (Eigen::Index y = 0; y < target.size(); ++y)
    if (target(y) > 0)
      kl += Scalar(target(y)) * (clamped_log(Scalar(target(y))) - clamped_log(predicted(y)));
  return kl;
}

inline double kl_divergence(const Distribution& target, const Distribution& predicted) {
  return kl_divergence(target.mass(), predicted.mass());
}

/// Summed (q-hat) and normalized (p-hat) posterior of a set of rows.
template <typename Scalar>
struct BatchPosterior {
  Matrix<Scalar> rows;        // one posterior per member
  Vector<Scalar> aggregate;   // column sums of rows
  Vector<Scalar> normalized;  // aggregate / sum(aggregate)
};

/// `rows` holds one posterior per row (members x labels).
template <typename Derived>
BatchPosterior<typename Derived::Scalar> aggregate_posterior(const Eigen::MatrixBase<Derived>& rows) {
  using Scalar = typename Derived::Scalar;
  if (rows.rows() == 0) throw Error(ErrorCode::EmptyRows, "aggregate_posterior needs at least one row");
  BatchPosterior<Scalar> out;
  out.rows = rows;
  out.aggregate = Vector<Scalar>::Zero(rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.aggregate += rows.row(i).transpose();
  const Scalar total = out.aggregate.sum();
  if (!(total > Scalar(0))) throw Error(ErrorCode::ZeroMass, "aggregate posterior has no mass");
  out.normalized = out.aggregate / total;
  return out;
}

/// Stacks distributions into a members x labels matrix.
inline Eigen::MatrixXd stack_rows(std::span<const Distribution> rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyRows, "no rows to stack");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw Error(ErrorCode::DimensionMismatch, "rows over different label spaces");
    m.row(static_cast<Eigen::Index>(i)) = rows[i].mass().transpose();
  }
  return m;
}

inline BatchPosterior<double> aggregate_posterior(std::span<const Distribution> rows) {
  return aggregate_posterior(stack_rows(rows));
}

/// XR loss of a sampled subset: xr_loss(target, normalized subset posterior).
template <typename DerivedT, typename DerivedR>
typename DerivedR::Scalar batched_xr_loss(const Eigen::MatrixBase<DerivedT>& target,
                                          const Eigen::MatrixBase<DerivedR>& subset_rows) {
  return xr_loss(target, aggregate_posterior(subset_rows).normalized);
}

inline double batched_xr_loss(const Distribution& target, std::span<const Distribution> subset_rows) {
  return batched_xr_loss(target.mass(), stack_rows(subset_rows));
}

/// Summed negative log-likelihood of the gold labels (not averaged).
template <typename Derived>
typename Derived::Scalar cross_entropy_loss(std::span<const LabelIndex> gold,
                                            const Eigen::MatrixBase<Derived>& rows) {
  using Scalar = typename Derived::Scalar;
  if (gold.size() != static_cast<std::size_t>(rows.rows()))
    throw Error(ErrorCode::LengthMismatch, "cross_entropy_loss: gold and rows differ in length");
  Scalar loss(0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= static_cast<std::size_t>(rows.cols()))
      throw Error(ErrorCode::DimensionMismatch, "gold label outside the label space");
    loss -= clamped_log(rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(gold[i])));
  }
  return loss;
}

inline double cross_entropy_loss(std::span<const LabelIndex> gold, std::span<const Distribution> rows) {
  if (gold.size() != rows.size())
    throw Error(ErrorCode::LengthMismatch, "cross_entropy_loss: gold and rows differ in length");
  if (rows.empty()) return 0.0;
  return cross_entropy_loss(gold, stack_rows(rows));
}

}  // namespace xrt

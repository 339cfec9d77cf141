#ifndef ENSDIV_QDA_HPP
#define ENSDIV_QDA_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ensdiv/error.hpp"
#include "ensdiv/point_set.hpp"
#include "ensdiv/random.hpp"

namespace ensdiv {

// Gaussian class-conditional classifier with one full covariance per class.
class QdaModel {
 public:
  struct ClassModel {
    int label;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;  ///< unbiased estimate plus ridge
    double log_prior;
    double log_det;
    Eigen::LLT<Eigen::MatrixXd> chol;
  };

  /// Ridge added to each covariance: ridge_scale * trace(cov) / d.
  static QdaModel fit(const PointSet& points, std::span<const int> labels, std::span<const std::size_t> rows,
                      double ridge_scale = 1e-6) {
    const auto d = static_cast<Eigen::Index>(points.dim());
    std::map<int, std::vector<std::size_t>> by_class;
    for (auto r : rows) by_class[labels[r]].push_back(r);
    QdaModel model;
    for (const auto& [label, members] : by_class) {
      if (members.size() < 2)
        throw Error(ErrorKind::model, "class " + std::to_string(label) + " has fewer than two training points");
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
      for (auto r : members) mean += Eigen::Map<const Eigen::VectorXd>(points.point(r).data(), d);
      mean /= static_cast<double>(members.size());
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
      for (auto r : members) {
        const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(points.point(r).data(), d) - mean;
        cov.noalias() += c * c.transpose();
      }
      cov /= static_cast<double>(members.size() - 1);
      cov.diagonal().array() += ridge_scale * cov.trace() / static_cast<double>(d);
      Eigen::LLT<Eigen::MatrixXd> chol(cov);
      if (chol.info() != Eigen::Success || !(cov.trace() > 0.0))
        throw Error(ErrorKind::model, "covariance of class " + std::to_string(label) + " is singular after regularization");
      const Eigen::MatrixXd lower = chol.matrixL();
      double log_det = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) log_det += 2.0 * std::log(lower(i, i));
      const double prior = static_cast<double>(members.size()) / static_cast<double>(rows.size());
      model.classes_.push_back({label, mean, cov, std::log(prior), log_det, chol});
    }
    return model;
  }

  /// log w_c - 0.5 ln|S_c| - 0.5 (x - m_c)' S_c^{-1} (x - m_c), maximised over classes.
  int predict(std::span<const double> x) const {
    int best_label = classes_.front().label;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : classes_) {
      const Eigen::VectorXd diff = Eigen::Map<const Eigen::VectorXd>(x.data(), c.mean.size()) - c.mean;
      const Eigen::VectorXd solved = c.chol.matrixL().solve(diff);
      const double score = c.log_prior - 0.5 * c.log_det - 0.5 * solved.squaredNorm();
      if (score > best) {
        best = score;
        best_label = c.label;
      }
    }
    return best_label;
  }

  const std::vector<ClassModel>& classes() const noexcept { return classes_; }

 private:
  std::vector<ClassModel> classes_;
};

/// Stratified k-fold cross-validated misclassification rate of QDA.
/// Folds come from one seeded shuffle of all rows; within each class, rows are
/// dealt to folds round-robin in shuffled order, so the assignment does not
/// depend on how classes are named.
inline double qda_cv_error(const PointSet& points, std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
  if (labels.size() != points.size()) throw Error(ErrorKind::shape, "one label per point is required");
  if (folds < 2) throw Error(ErrorKind::parameter, "cross-validation needs at least two folds");
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) throw Error(ErrorKind::input, "QDA needs at least two classes");
  for (const auto& [label, count] : counts)
    if (count < folds)
      throw Error(ErrorKind::parameter, "class " + std::to_string(label) + " has fewer points than folds");

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> fold_of(points.size());
  std::map<int, std::size_t> dealt;
  for (auto r : order) fold_of[r] = dealt[labels[r]]++ % folds;

  std::size_t errors = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t r = 0; r < points.size(); ++r) (fold_of[r] == f ? test : train).push_back(r);
    const auto model = QdaModel::fit(points, labels, train);
    for (auto r : test) errors += static_cast<std::size_t>(model.predict(points.point(r)) != labels[r]);
  }
  return static_cast<double>(errors) / static_cast<double>(points.size());
}

}  // namespace ensdiv

#endif  // ENSDIV_QDA_HPP

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pgu {

/// Histogram-equalisation map of one variable: sorted (data, Gaussian)
/// knot pairs with Hazen plotting positions, linear between knots and
/// linearly extended past the ends with the outermost inter-knot slope.
class MarginalMap {
 public:
  MarginalMap() = default;
  explicit MarginalMap(std::span<const double> sample);

  double forward(double x) const;
  double inverse(double g) const;

  bool degenerate() const { return data_.size() < 2; }
  const std::vector<double>& data_knots() const { return data_; }
  const std::vector<double>& gauss_knots() const { return gauss_; }

  static MarginalMap from_knots(std::vector<double> data, std::vector<double> gauss);

 private:
  std::vector<double> data_, gauss_;
};

/// Ordered record of fitted marginal maps and PCA rotations. Rows of a data
/// matrix are samples; one iteration maps X -> Phi(X) * R.
struct RbigTransform {
  struct Iteration {
    std::vector<MarginalMap> maps;
    Eigen::MatrixXd rotation;  // m x m, orthonormal, eigenvectors as columns
  };
  std::vector<Iteration> iterations;
  std::vector<double> trace;       // non-Gaussianity after each iteration
  std::vector<bool> degenerate;    // zero-variance input columns (mapped to 0)

  std::size_t dims() const { return iterations.empty() ? 0 : iterations.front().maps.size(); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& data) const;
  /// Inverse rotations and inverse marginal maps in reverse order. Throws
  /// DataError on non-finite factors or a column-count mismatch.
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& factors) const;

  std::vector<std::uint8_t> serialize() const;
  static RbigTransform deserialize(std::span<const std::uint8_t> bytes);
};

struct RbigFit {
  Eigen::MatrixXd factors;
  RbigTransform transform;
};

/// Sum over columns of |skewness| + |excess kurtosis|.
double non_gaussianity(const Eigen::MatrixXd& x);

/// Rotation-based iterative Gaussianisation. Stops at max_iterations, when
/// the non-Gaussianity drops below tol (default 0.05 * m), or when another
/// iteration would raise it (that iteration is discarded, so the stored
/// trace never increases). A final marginal Gaussianisation with
/// identity rotation leaves every factor on standard normal marginals. Requires n >= 10 m
/// samples.
RbigFit rbig_fit(const Eigen::MatrixXd& data, std::size_t max_iterations = 30,
                 std::optional<double> tol = std::nullopt);

}  // namespace pgu

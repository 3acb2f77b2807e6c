#include "pgu/rbig.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <Eigen/Eigenvalues>

#include "pgu/error.hpp"
#include "pgu/log.hpp"
#include "pgu/normal.hpp"

namespace pgu {
namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const std::size_t n = xs.size();
  if (n == 1) return ys[0];
  std::size_t hi;
  if (x <= xs.front()) {
    hi = 1;
  } else if (x >= xs.back()) {
    hi = n - 1;
  } else {
    hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    if (xs[hi - 1] == x) return ys[hi - 1];
  }
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

class ByteWriter {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint64_t u64() {
    if (b_.size() - pos_ < 8) throw FormatError("rbig: truncated transform section");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

constexpr std::uint64_t kRbigMagic = 0x31474942'52ULL;  // "RBIG1"

}  // namespace

MarginalMap::MarginalMap(std::span<const double> sample) {
  if (sample.empty()) throw DataError("marginal map: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  for (const double v : sorted)
    if (!std::isfinite(v)) throw DataError("marginal map: non-finite value");
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // Tied values share one knot at the mean Gaussian score of their ranks.
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    double g = 0.0;
    while (j < sorted.size() && sorted[j] == sorted[i]) {
      g += normal::quantile((static_cast<double>(j) + 0.5) / n);
      ++j;
    }
    data_.push_back(sorted[i]);
    gauss_.push_back(g / static_cast<double>(j - i));
    i = j;
  }
  if (data_.size() == 1) gauss_[0] = 0.0;
}

MarginalMap MarginalMap::from_knots(std::vector<double> data, std::vector<double> gauss) {
  if (data.size() != gauss.size() || data.empty()) throw FormatError("marginal map: bad knot table");
  MarginalMap m;
  m.data_ = std::move(data);
  m.gauss_ = std::move(gauss);
  return m;
}

double MarginalMap::forward(double x) const {
  if (degenerate()) return 0.0;
  return interp(data_, gauss_, x);
}

double MarginalMap::inverse(double g) const {
  if (degenerate()) return data_.front();
  return interp(gauss_, data_, g);
}

double non_gaussianity(const Eigen::MatrixXd& x) {
  double total = 0.0;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto col = x.col(c);
    const double mean = col.mean();
    const Eigen::ArrayXd d = col.array() - mean;
    const double m2 = d.square().sum() / n;
    if (m2 <= 0.0) continue;
    const double m3 = d.cube().sum() / n;
    const double m4 = d.square().square().sum() / n;
    total += std::abs(m3 / std::pow(m2, 1.5)) + std::abs(m4 / (m2 * m2) - 3.0);
  }
  return total;
}

RbigFit rbig_fit(const Eigen::MatrixXd& data, std::size_t max_iterations, std::optional<double> tol) {
  const auto n = data.rows();
  const auto m = data.cols();
  if (m < 1) throw DataError("rbig: no variables");
  if (n < 10 * m) throw DataError("rbig: need at least 10 samples per variable");
  if (!data.allFinite()) throw DataError("rbig: non-finite input");
  const double stop = tol.value_or(0.05 * static_cast<double>(m));
  max_iterations = std::max<std::size_t>(1, max_iterations);

  RbigFit fit;
  Eigen::MatrixXd x = data;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    RbigTransform::Iteration step;
    Eigen::MatrixXd g(n, m);
    for (Eigen::Index c = 0; c < m; ++c) {
      const Eigen::VectorXd col = x.col(c);
      MarginalMap map(std::span<const double>(col.data(), static_cast<std::size_t>(n)));
      if (it == 0) {
        fit.transform.degenerate.push_back(map.degenerate());
        if (map.degenerate()) log::warn("rbig: zero-variance column " + std::to_string(c) + " mapped to zeros");
      }
      for (Eigen::Index r = 0; r < n; ++r) g(r, c) = map.forward(col(r));
      step.maps.push_back(std::move(map));
    }
    const Eigen::RowVectorXd mean = g.colwise().mean();
    const Eigen::MatrixXd centered = g.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    // Descending eigenvalues; flip signs so each vector's largest component is positive.
    Eigen::MatrixXd rot(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::VectorXd v = eig.eigenvectors().col(m - 1 - k);
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0) v = -v;
      rot.col(k) = v;
    }
    step.rotation = rot;
    Eigen::MatrixXd y = g * rot;
    const double measure = non_gaussianity(y);
    if (!fit.transform.trace.empty() && measure > fit.transform.trace.back() + 1e-9) break;
    fit.transform.iterations.push_back(std::move(step));
    fit.transform.trace.push_back(measure);
    x = std::move(y);
    if (measure < stop) break;
  }

  // The last rotation leaves rotated columns with PCA-eigenvalue variances and
  // some residual skew. A closing marginal Gaussianisation with identity
  // rotation puts every factor back on standard normal marginals.
  RbigTransform::Iteration closing;
  for (Eigen::Index c = 0; c < m; ++c) {
    const Eigen::VectorXd col = x.col(c);
    MarginalMap map(std::span<const double>(col.data(), static_cast<std::size_t>(n)));
    for (Eigen::Index r = 0; r < n; ++r) x(r, c) = map.forward(col(r));
    closing.maps.push_back(std::move(map));
  }
  closing.rotation = Eigen::MatrixXd::Identity(m, m);
  fit.transform.iterations.push_back(std::move(closing));
  fit.transform.trace.push_back(non_gaussianity(x));
  fit.factors = std::move(x);
  return fit;
}

Eigen::MatrixXd RbigTransform::forward(const Eigen::MatrixXd& data) const {
  if (static_cast<std::size_t>(data.cols()) != dims()) throw DataError("rbig forward: column count mismatch");
  Eigen::MatrixXd x = data;
  for (const auto& step : iterations) {
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = step.maps[static_cast<std::size_t>(c)].forward(x(r, c));
    x = x * step.rotation;
  }
  return x;
}

Eigen::MatrixXd RbigTransform::inverse(const Eigen::MatrixXd& factors) const {
  if (static_cast<std::size_t>(factors.cols()) != dims()) throw DataError("rbig inverse: column count mismatch");
  if (!factors.allFinite()) throw DataError("rbig inverse: non-finite factors");
  Eigen::MatrixXd x = factors;
  for (auto it = iterations.rbegin(); it != iterations.rend(); ++it) {
    x = x * it->rotation.transpose();
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = it->maps[static_cast<std::size_t>(c)].inverse(x(r, c));
  }
  return x;
}

std::vector<std::uint8_t> RbigTransform::serialize() const {
  ByteWriter w;
  const std::size_t m = dims();
  w.u64(kRbigMagic);
  w.u64(m);
  w.u64(iterations.size());
  for (const auto& step : iterations) {
    for (const auto& map : step.maps) {
      w.u64(map.data_knots().size());
      for (const double v : map.data_knots()) w.f64(v);
      for (const double v : map.gauss_knots()) w.f64(v);
    }
    for (Eigen::Index i = 0; i < step.rotation.size(); ++i) w.f64(step.rotation.data()[i]);
  }
  for (const double t : trace) w.f64(t);
  for (const bool d : degenerate) w.u64(d ? 1 : 0);
  return std::move(w.bytes);
}

RbigTransform RbigTransform::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader rd(bytes);
  if (rd.u64() != kRbigMagic) throw FormatError("rbig: bad transform magic");
  const auto m = rd.u64();
  const auto n_iter = rd.u64();
  if (m == 0 || m > 4096 || n_iter > 100000) throw FormatError("rbig: implausible transform header");
  RbigTransform t;
  for (std::uint64_t i = 0; i < n_iter; ++i) {
    RbigTransform::Iteration step;
    for (std::uint64_t c = 0; c < m; ++c) {
      const auto k = rd.u64();
      if (k == 0 || k > bytes.size()) throw FormatError("rbig: bad knot count");
      std::vector<double> d(k), g(k);
      for (auto& v : d) v = rd.f64();
      for (auto& v : g) v = rd.f64();
      step.maps.push_back(MarginalMap::from_knots(std::move(d), std::move(g)));
    }
    step.rotation.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (Eigen::Index j = 0; j < step.rotation.size(); ++j) step.rotation.data()[j] = rd.f64();
    t.iterations.push_back(std::move(step));
  }
  t.trace.resize(n_iter);
  for (auto& v : t.trace) v = rd.f64();
  for (std::uint64_t c = 0; c < m; ++c) t.degenerate.push_back(rd.u64() != 0);
  return t;
}

}  // namespace pgu

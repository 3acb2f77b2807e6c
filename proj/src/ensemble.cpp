#include "pgu/ensemble.hpp"

#include <algorithm>
#include <bit>

#include "pgu/error.hpp"

namespace pgu {

Ensemble::Ensemble(GridSpec grid, std::size_t n_real, std::vector<std::string> names)
    : grid_(grid), n_real_(n_real), names_(std::move(names)),
      values_(n_real_ * names_.size() * grid_.size(), 0.0) {}

std::size_t Ensemble::var(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw DataError("ensemble has no variable '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

bool Ensemble::has_var(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t Ensemble::add_var(const std::string& name, double fill) {
  if (has_var(name)) throw DataError("ensemble already has variable '" + name + "'");
  const std::size_t m = names_.size();
  const std::size_t nb = grid_.size();
  std::vector<double> next(n_real_ * (m + 1) * nb, fill);
  for (std::size_t r = 0; r < n_real_; ++r) {
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(r * m * nb), m * nb,
                next.begin() + static_cast<std::ptrdiff_t>(r * (m + 1) * nb));
  }
  values_ = std::move(next);
  names_.push_back(name);
  return m;
}

void Ensemble::quantize_to_float() {
  for (auto& v : values_) v = static_cast<double>(static_cast<float>(v));
}

bool Ensemble::operator==(const Ensemble& other) const {
  if (!(grid_.nx == other.grid_.nx && grid_.ny == other.grid_.ny && grid_.nz == other.grid_.nz))
    return false;
  if (n_real_ != other.n_real_ || names_ != other.names_ || aux != other.aux) return false;
  // Bitwise, so NaN payloads and signed zeros compare exactly.
  return std::equal(values_.begin(), values_.end(), other.values_.begin(), other.values_.end(),
                    [](double a, double b) {
                      return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
                    });
}

std::uint64_t checksum_blocks(const Ensemble& ens, std::span<const std::size_t> blocks) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t r = 0; r < ens.n_real(); ++r) {
    for (std::size_t v = 0; v < ens.n_vars(); ++v) {
      const auto f = ens.field(r, v);
      for (const std::size_t b : blocks) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(f[b]);
        for (int k = 0; k < 8; ++k) {
          h ^= bits & 0xff;
          h *= 1099511628211ULL;
          bits >>= 8;
        }
      }
    }
  }
  return h;
}

}  // namespace pgu

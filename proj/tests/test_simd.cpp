#include <doctest.h>

#include <cmath>
#include <vector>

#include "pgu/random.hpp"
#include "pgu/simd/kernels.hpp"
#include "pgu/truncation.hpp"
#include "support.hpp"

using namespace pgu;

namespace {

std::vector<const simd::KernelTable*> vector_tables() {
  std::vector<const simd::KernelTable*> out;
#if defined(PGU_HAVE_AVX2)
  if (simd::available(simd::Isa::avx2)) out.push_back(&simd::avx2_table());
#endif
#if defined(PGU_HAVE_NEON)
  out.push_back(&simd::neon_table());
#endif
  return out;
}

std::vector<double> randn(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar kernel table is always available") {
  CHECK(simd::available(simd::Isa::scalar));
  CHECK(simd::scalar_table().isa == simd::Isa::scalar);
  MESSAGE("active kernels: " << simd::name(simd::active().isa));
}

TEST_CASE("vector kernels agree with the scalar reference") {
  const auto& ref = simd::scalar_table();
  for (const auto* t : vector_tables()) {
    CAPTURE(simd::name(t->isa));
    // Odd lengths exercise the remainder loops.
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 17u, 1001u}) {
      CAPTURE(n);
      const auto a = randn(n, 1 + n), b = randn(n, 100 + n);
      const double d_ref = ref.dot(a.data(), b.data(), n), d = t->dot(a.data(), b.data(), n);
      CHECK(d == doctest::Approx(d_ref).epsilon(1e-12).scale(static_cast<double>(n) + 1.0));
      const double s_ref = ref.squared_error_sum(a.data(), b.data(), n);
      CHECK(t->squared_error_sum(a.data(), b.data(), n) == doctest::Approx(s_ref).epsilon(1e-12));

      auto y1 = b, y2 = b;
      ref.axpy(0.37, a.data(), y1.data(), n);
      t->axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-14));

      y1 = b;
      y2 = b;
      ref.hadamard(y1.data(), a.data(), n);
      t->hadamard(y2.data(), a.data(), n);
      CHECK(y1 == y2);

      std::vector<double> dist(n);
      for (std::size_t i = 0; i < n; ++i) dist[i] = 3.0 * std::abs(a[i]);
      std::vector<double> g1(n), g2(n);
      ref.gaspari_cohn(dist.data(), 0.5, g1.data(), n);
      t->gaspari_cohn(dist.data(), 0.5, g2.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(g2[i] == doctest::Approx(g1[i]).epsilon(1e-13));
        if (g1[i] == 0.0) CHECK(g2[i] == 0.0);
      }
    }
  }
}

TEST_CASE("vector truncate kernel matches scalar labels exactly") {
  const auto rule = thresholds_from_proportions(testing::table2_topology(), testing::table2_normalised());
  const auto& rects = rule.rectangles();
  const std::size_t n = 4099;
  auto g1 = randn(n, 7), g2 = randn(n, 8);
  // Points exactly on thresholds exercise the closed-below convention.
  g1[0] = rule.thresholds()[0];
  g2[1] = rule.thresholds()[1];
  std::vector<std::int32_t> ref(n), out(n);
  simd::scalar_table().truncate(g1.data(), g2.data(), n, rects.data(), rects.size(), ref.data());
  for (std::size_t i = 0; i < n; ++i) CHECK(ref[i] == rule.truncate(g1[i], g2[i]));
  for (const auto* t : vector_tables()) {
    t->truncate(g1.data(), g2.data(), n, rects.data(), rects.size(), out.data());
    CHECK(out == ref);
  }
}

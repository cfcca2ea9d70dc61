#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops shared by the ERM, process and Monte Carlo code.
// Every kernel has a scalar reference; wider variants are picked at runtime
// and must agree with the reference up to reduction-order rounding.

namespace mixfree::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// sum_i a[i]
  double (*sum)(const double* a, std::size_t n);
  /// sum_i (table[idx[i]] - y[i])^2
  double (*gathered_sq_error)(const double* table, const std::int32_t* idx,
                              const double* y, std::size_t n);
  /// sum_i w[i] * table[idx[i]]
  double (*gathered_weighted_sum)(const double* table, const std::int32_t* idx,
                                  const double* w, std::size_t n);
  /// sum_i table[idx[i]]^2
  double (*gathered_sq_sum)(const double* table, const std::int32_t* idx, std::size_t n);
};

const KernelTable& scalar_table();
/// Only valid when isa_supported(Isa::Avx2).
const KernelTable& avx2_table();

bool isa_supported(Isa isa);
std::string_view isa_name(Isa isa);

/// Table chosen at first use: the widest supported ISA, unless the
/// MIXFREE_SIMD environment variable is set to "scalar".
const KernelTable& active();

// Convenience wrappers over active().
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
double gathered_sq_error(std::span<const double> table, std::span<const std::int32_t> idx,
                         std::span<const double> y);
double gathered_weighted_sum(std::span<const double> table, std::span<const std::int32_t> idx,
                             std::span<const double> w);
double gathered_sq_sum(std::span<const double> table, std::span<const std::int32_t> idx);

}  // namespace mixfree::kernels

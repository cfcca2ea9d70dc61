#include "mixfree/kernels.hpp"

namespace mixfree::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double gathered_sq_error_scalar(const double* table, const std::int32_t* idx, const double* y,
                                std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = table[idx[i]] - y[i];
    acc += r * r;
  }
  return acc;
}

double gathered_weighted_sum_scalar(const double* table, const std::int32_t* idx,
                                    const double* w, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * table[idx[i]];
  return acc;
}

double gathered_sq_sum_scalar(const double* table, const std::int32_t* idx, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = table[idx[i]];
    acc += v * v;
  }
  return acc;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar,
                                 dot_scalar,
                                 sum_scalar,
                                 gathered_sq_error_scalar,
                                 gathered_weighted_sum_scalar,
                                 gathered_sq_sum_scalar};
  return table;
}

}  // namespace mixfree::kernels

#include <cstdlib>
#include <string>

#include "mixfree/error.hpp"
#include "mixfree/kernels.hpp"

namespace mixfree::kernels {

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    if (const char* env = std::getenv("MIXFREE_SIMD"); env && std::string(env) == "scalar")
      return scalar_table();
    if (isa_supported(Isa::Avx2)) return avx2_table();
    return scalar_table();
  }();
  return chosen;
}

namespace {

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error("kernel operands differ in length");
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size());
  return active().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

double gathered_sq_error(std::span<const double> table, std::span<const std::int32_t> idx,
                         std::span<const double> y) {
  require_same_size(idx.size(), y.size());
  return active().gathered_sq_error(table.data(), idx.data(), y.data(), idx.size());
}

double gathered_weighted_sum(std::span<const double> table, std::span<const std::int32_t> idx,
                             std::span<const double> w) {
  require_same_size(idx.size(), w.size());
  return active().gathered_weighted_sum(table.data(), idx.data(), w.data(), idx.size());
}

double gathered_sq_sum(std::span<const double> table, std::span<const std::int32_t> idx) {
  return active().gathered_sq_sum(table.data(), idx.data(), idx.size());
}

}  // namespace mixfree::kernels

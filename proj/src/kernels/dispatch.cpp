#include "kernels/detail.hpp"

namespace sapr::kernels {
namespace {

#if defined(SAPR_HAVE_AVX2)
bool cpu_has_avx2_fma() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

} // namespace

std::vector<const Table*> available_tables() {
  std::vector<const Table*> tables;
#if defined(SAPR_HAVE_AVX2)
  if (cpu_has_avx2_fma()) tables.push_back(&detail::avx2_table());
#endif
#if defined(SAPR_HAVE_NEON)
  tables.push_back(&detail::neon_table());
#endif
  return tables;
}

const Table& active() {
  static const Table& table = [] () -> const Table& {
    const auto tables = available_tables();
    return tables.empty() ? scalar_table() : *tables.front();
  }();
  return table;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
  case Isa::scalar: return "scalar";
  case Isa::avx2: return "avx2";
  case Isa::neon: return "neon";
  }
  return "unknown";
}

} // namespace sapr::kernels

#pragma once

#include "sapr/kernels.hpp"

namespace sapr::kernels::detail {

#if defined(SAPR_HAVE_AVX2)
const Table& avx2_table();
#endif
#if defined(SAPR_HAVE_NEON)
const Table& neon_table();
#endif

} // namespace sapr::kernels::detail

#pragma once

#include "dts/simd.hpp"

namespace dts::simd::detail {

const KernelTable& scalar_table();
#if defined(DTS_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace dts::simd::detail

#pragma once

#include "afil/kernels/kernels.hpp"

namespace afil::kernels::detail {

const KernelTable& scalar_table();
#if defined(AFIL_WITH_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace afil::kernels::detail

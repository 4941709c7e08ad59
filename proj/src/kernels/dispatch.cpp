#include "dmimo/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace dmimo::kernels {

const Table* avx2_impl_table(); // defined in kernels_avx2.cpp

namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table* select_active() {
    const Table* best = &scalar();
    if (cpu_has_avx2() && avx2_impl_table() != nullptr) best = avx2_impl_table();
    if (const char* env = std::getenv("DMIMO_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return &scalar();
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2() && avx2_impl_table() != nullptr)
            return avx2_impl_table();
    }
    return best;
}

} // namespace

const Table* avx2() {
    return cpu_has_avx2() ? avx2_impl_table() : nullptr;
}

const Table& active() {
    static const Table* chosen = select_active();
    return *chosen;
}

} // namespace dmimo::kernels

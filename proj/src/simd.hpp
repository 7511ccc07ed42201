#pragma once

// Hot loops get an AVX2 clone next to the baseline build on x86-64 GCC; the
// loader picks the variant at startup. Elsewhere this expands to nothing.
#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__) && defined(__linux__)
#define PASEM_VECTOR_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define PASEM_VECTOR_CLONES
#endif

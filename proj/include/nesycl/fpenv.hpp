#pragma once

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

namespace nesycl {

/// Flush-to-zero / denormals-are-zero for the current thread while alive.
/// Converged training produces tiny gradients whose squares are subnormal,
/// which otherwise slows the optimizer loop by an order of magnitude.
class ScopedFlushDenormals {
public:
    ScopedFlushDenormals() {
#if defined(__SSE2__)
        saved_ = _mm_getcsr();
        _mm_setcsr(saved_ | 0x8040u);
#endif
    }
    ~ScopedFlushDenormals() {
#if defined(__SSE2__)
        _mm_setcsr(saved_);
#endif
    }
    ScopedFlushDenormals(const ScopedFlushDenormals&) = delete;
    ScopedFlushDenormals& operator=(const ScopedFlushDenormals&) = delete;

private:
    unsigned saved_ = 0;
};

}  // namespace nesycl

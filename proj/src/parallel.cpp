#include "blindsr/parallel.hpp"

#include <cstdlib>
#include <string>

namespace blindsr {

unsigned default_thread_count()
{
    if (const char* env = std::getenv("BLINDSR_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace blindsr

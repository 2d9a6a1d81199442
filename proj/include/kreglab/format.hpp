#pragma once

#include <cstdio>
#include <string>

namespace kreglab {

// 17 significant digits reproduce any double exactly on re-parse; used for
// every numeric field written to CSV so repeated runs emit identical bytes.
inline std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

}  // namespace kreglab

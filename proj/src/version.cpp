#include "tlab/common.hpp"

#ifndef TLAB_VERSION
#define TLAB_VERSION "0.0.0"
#endif

namespace tlab {

const char* version_string() { return TLAB_VERSION; }

}  // namespace tlab

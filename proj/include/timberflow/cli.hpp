#pragma once

#include <iosfwd>

namespace timberflow {

// timberflow <validate|odmatrix|optimize|cluster|scenario|synth|serve|report> ...
// Exit 0 on success, 1 on domain errors, 2 on input errors and bad usage.
int cli_main(int argc, const char* const argv[], std::ostream& out, std::ostream& err);

}  // namespace timberflow

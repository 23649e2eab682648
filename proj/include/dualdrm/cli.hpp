#pragma once

namespace dualdrm {

/// Entry point of the dualdrm command-line tool. Exit codes:
///   0 success, 1 trajectory validation failure (check), 2 usage or invalid
///   input, 3 resource cap or budget exceeded, 4 planning failure,
///   5 IO/format error, 6 artifact compatibility mismatch.
int cli_main(int argc, const char* const* argv);

}  // namespace dualdrm

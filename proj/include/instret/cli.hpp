#pragma once

namespace instret {

// Entry point behind the `instret` binary. Exit codes: 0 success, 2 usage or
// configuration error, 3 runtime failure.
int cli_main(int argc, const char* const* argv);

}  // namespace instret

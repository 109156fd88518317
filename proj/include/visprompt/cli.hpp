#pragma once

namespace visprompt {

// Command-line entry point. Returns 0 on success, 1 on usage errors,
// 2 on invalid input files or arguments and 3 on runtime failures.
int cli_main(int argc, char** argv);

}  // namespace visprompt

#pragma once

namespace eclip {

/// Entry point of the eclip-sim command line tool. Returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace eclip

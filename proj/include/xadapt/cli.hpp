#ifndef XADAPT_CLI_HPP
#define XADAPT_CLI_HPP

namespace xadapt {

// Subcommand dispatcher behind the `xadapt` binary. Exit codes:
//   0 ok, 2 usage, 3 data format, 4 numeric divergence, 5 degenerate input.
int run_cli(int argc, const char *const *argv);

}  // namespace xadapt

#endif  // XADAPT_CLI_HPP

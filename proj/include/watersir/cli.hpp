#ifndef WATERSIR_CLI_HPP
#define WATERSIR_CLI_HPP

// Command-line front end. Exit codes: 0 success, 1 findings (parse or
// validation problems, infeasible verdicts, convexity violations) or
// runtime failures, 2 command-line usage errors. Human-readable messages
// go to stderr, data to stdout; --json switches data output to JSON.

namespace watersir {

int run_cli(int argc, const char* const* argv);

}  // namespace watersir

#endif

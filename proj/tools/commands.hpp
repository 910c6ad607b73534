#pragma once

/// Subcommand implementations behind the cbctproj binary. Split from main()
/// so the test suite can drive the CLI in-process.

namespace cbct::cli {

/// Parses argv and dispatches to one of the subcommands:
/// project, backproject, recon, compare, bench, adjoint-test.
int run(int argc, const char* const* argv);

} // namespace cbct::cli

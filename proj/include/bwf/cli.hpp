#pragma once

namespace bwf::cli {

/// Entry point behind the `bathywave` binary. Subcommands: generate,
/// generate-shifted, train, predict, evaluate, invert, kdfit, adapt,
/// finetune, gradcheck. Every failure is reported on stderr as a single
/// machine-readable line `error: <Code>: <message>`.
///
/// Exit status: 0 success (including --help), 1 domain error (bwf::Error) or
/// a failed gradcheck, 2 unknown command / bad usage, 3 unexpected exception.
int run_command(int argc, const char* const* argv);

} // namespace bwf::cli

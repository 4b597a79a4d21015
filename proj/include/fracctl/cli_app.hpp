#pragma once

namespace fracctl {

// Entry point for the command-line front end; returns the process exit code.
//
// Subcommands: simulate | analyze | steer | demo-heat. Every command is
// deterministic given its flags (--seed is accepted and reserved for future
// randomized diagnostics); re-running writes byte-identical files.
//
// Exit codes: 0 success (including --help); 1 configuration, validation, or
// unsupported-model errors (field-named diagnostic on stderr); 2 numerical or
// internal failures.
int run_cli(int argc, char** argv);

}  // namespace fracctl

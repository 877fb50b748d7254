// Copyright 2026 The parrep authors.
// SPDX-License-Identifier: Apache-2.0

#include "parrep/cli/commands.hpp"

int main(int argc, char** argv) { return parrep::cli::main_entry(argc, argv); }

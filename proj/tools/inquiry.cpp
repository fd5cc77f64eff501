// Copyright 2026 The Inquiry Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "inquiry/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return inquiry::run_cli(args, std::cout, std::cerr);
}

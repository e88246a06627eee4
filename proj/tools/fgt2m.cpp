// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "fgt2m/cli/commands.hpp"

int main(int argc, char** argv) { return fgt2m::cli::run(argc, argv, std::cout, std::cerr); }

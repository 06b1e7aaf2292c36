// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ccu Authors

#include <iostream>

#include "ccu/cli.hpp"

int main(int argc, char** argv) { return ccu::cli::main(argc, argv, std::cin, std::cout, std::cerr); }

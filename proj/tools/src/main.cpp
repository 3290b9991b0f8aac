// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "stylebal/cli.hpp"

int main(int argc, char** argv) { return stylebal::cli_main(argc, argv, std::cout, std::cerr); }

// SPDX-License-Identifier: Apache-2.0

#include "diva/cli.hpp"

int main(int argc, char** argv) { return diva::cli::run(argc, argv); }

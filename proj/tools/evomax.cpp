// SPDX-License-Identifier: Apache-2.0
#include "evomax/cli.hpp"

int main(int argc, char** argv) { return evomax::run_cli(argc, argv); }

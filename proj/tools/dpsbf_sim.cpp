// SPDX-License-Identifier: Apache-2.0
#include "dpsbf/cli.hpp"

int main(int argc, char** argv) { return dpsbf::run_cli(argc, argv); }

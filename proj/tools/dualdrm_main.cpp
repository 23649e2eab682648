#include "dualdrm/cli.hpp"

int main(int argc, char** argv) { return dualdrm::cli_main(argc, argv); }

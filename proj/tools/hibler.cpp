#include "hibler/cli_io.hpp"

int main(int argc, char** argv) { return hibler::cli_main(argc, argv); }

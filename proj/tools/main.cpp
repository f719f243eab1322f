#include "eclip/cli.hpp"

int main(int argc, char** argv) { return eclip::cli_main(argc, argv); }

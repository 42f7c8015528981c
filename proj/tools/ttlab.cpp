#include "ttlab/cli.hpp"

int main(int argc, char** argv) { return ttlab::cli_main(argc, argv); }

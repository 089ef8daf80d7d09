#include "glarma/cli.hpp"

int main(int argc, char** argv) { return glarma::run_command(argc, argv); }

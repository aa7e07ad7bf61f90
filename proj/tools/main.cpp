#include "recl/cli.hpp"

int main(int argc, char** argv) { return recl::cli::run(argc, argv); }

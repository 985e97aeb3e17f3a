#include "srgeom/cli.hpp"

int main(int argc, char** argv) { return srg::cli::run(argc, argv); }

#include "gsu/cli.hpp"

int main(int argc, char** argv) { return gsu::cli::run(argc, argv); }

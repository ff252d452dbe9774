#include "cli.hpp"

int main(int argc, char** argv) { return amoc::cli::run(argc, argv); }

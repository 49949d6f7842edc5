#include "cli.hpp"

int main(int argc, char** argv) { return gpv::cli::run(argc, argv); }

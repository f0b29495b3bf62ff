#include "cli.hpp"

int main(int argc, char** argv) { return kic::cli::run(argc, argv); }

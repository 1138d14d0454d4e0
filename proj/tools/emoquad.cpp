#include "emoquad/cli.hpp"

int main(int argc, char** argv) { return emoquad::cli::run(argc, argv); }

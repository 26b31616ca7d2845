#include "cli.hpp"

int main(int argc, char** argv) { return trajseg::cli::run(argc, argv); }

#include "xicor/cli.hpp"

int main(int argc, char** argv) { return xicor::cli::run(argc, argv); }

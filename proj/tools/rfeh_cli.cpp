#include "rfeh/cli.hpp"

int main(int argc, char** argv) { return rfeh::cli::run(argc, argv); }

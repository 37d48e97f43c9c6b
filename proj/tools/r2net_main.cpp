#include "r2net/cli.hpp"

int main(int argc, char** argv) { return r2net::cli::run(argc, argv); }

#include "ecgr/cli.hpp"

int main(int argc, char** argv) { return ecgr::cli::run(argc, argv); }

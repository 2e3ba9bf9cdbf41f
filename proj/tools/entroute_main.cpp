#include "entroute/cli.hpp"

int main(int argc, char** argv) { return entroute::run_cli(argc, argv); }

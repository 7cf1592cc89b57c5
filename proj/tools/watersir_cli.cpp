#include "watersir/cli.hpp"

int main(int argc, char** argv) { return watersir::run_cli(argc, argv); }

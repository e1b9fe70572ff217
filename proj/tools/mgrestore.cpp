#include "mgrestore/cli.hpp"

int main(int argc, char** argv) { return mgrestore::run_cli(argc, argv); }

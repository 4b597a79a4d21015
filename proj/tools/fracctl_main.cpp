#include "fracctl/cli_app.hpp"

int main(int argc, char** argv) { return fracctl::run_cli(argc, argv); }

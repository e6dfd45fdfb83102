#include "fluidprobe/cli.hpp"

int main(int argc, char** argv) { return fluidprobe::run_cli(argc, argv); }

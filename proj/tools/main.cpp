#include "commands.hpp"

int main(int argc, char** argv) { return chfb::run_cli(argc, argv); }

#include "ctxkg/commands.hpp"

int main(int argc, char** argv) { return ctxkg::run_cli(argc, argv); }

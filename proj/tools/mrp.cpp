#include "mrp/commands.hpp"

int main(int argc, char** argv) { return mrp::run_cli(argc, argv); }

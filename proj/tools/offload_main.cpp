#include "offload/cli/commands.hpp"

int main(int argc, char** argv) { return offload::cli::main_entry(argc, argv); }

#include "cardiokey/cli/commands.hpp"

int main(int argc, char** argv) { return cardiokey::cli::run_cli(argc, argv); }

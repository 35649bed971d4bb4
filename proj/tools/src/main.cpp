#include "modalcur_cli/commands.hpp"

int main(int argc, char** argv) { return modalcur::cli::run_cli(argc, argv); }

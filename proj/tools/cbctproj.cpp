#include "commands.hpp"

int main(int argc, char** argv) { return cbct::cli::run(argc, argv); }

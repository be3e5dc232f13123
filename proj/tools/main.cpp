#include "nodegae/cli/commands.hpp"

int main(int argc, char** argv) { return nodegae::cli::run(argc, argv); }

#include "dqt/cli.hpp"

int main(int argc, char** argv) { return dqt::cli_main(argc, argv); }

#include "ssrd/cli.hpp"

int main(int argc, char** argv) { return ssrd::cli::run(argc, argv); }

#include "cdnguard/cli.hpp"

int main(int argc, char** argv) { return cdnguard::cli::run(argc, argv); }

#include <scenver/cli.hpp>

int main(int argc, char** argv) { return scenver::cli::cli_main(argc, argv); }

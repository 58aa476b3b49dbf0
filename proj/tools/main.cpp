#include "kronshrink/cli.hpp"

int main(int argc, char** argv) { return kronshrink::cli::run(argc, argv); }

#include "cli.hpp"

int main(int argc, char** argv) { return docparse::cli::run(argc, argv); }

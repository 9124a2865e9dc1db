#include "asw/cli.hpp"

int main(int argc, char** argv) { return asw::cli::run(argc, argv); }

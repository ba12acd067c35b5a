#include "stylekit/cli.hpp"

int main(int argc, char** argv) { return stylekit::cli::run(argc, argv); }

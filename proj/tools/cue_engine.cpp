#include "cue/cli.hpp"

int main(int argc, char** argv) { return cue::cli::run(argc, argv); }

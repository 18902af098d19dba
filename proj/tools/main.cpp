#include "tracer/cli/cli.hpp"

int main(int argc, char** argv) { return tracer::cli::dispatch(argc, argv); }

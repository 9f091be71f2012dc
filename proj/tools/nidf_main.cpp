#include "nidf/pipeline/cli.hpp"

int main(int argc, char** argv) { return nidf::pipeline::cli_dispatch(argc, argv); }

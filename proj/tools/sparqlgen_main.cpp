#include "sparqlgen/cli.hpp"

int main(int argc, char** argv) { return sparqlgen::run_cli(argc, argv); }

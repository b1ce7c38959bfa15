#include "cli.h"

int main(int argc, char** argv) { return jointkpe::cli::run(argc, argv); }

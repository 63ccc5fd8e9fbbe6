#include "rsvol/cli.hpp"

int main(int argc, char** argv) { return rsvol::cli::run(argc, argv); }

#include "perfalign/cli.hpp"

int main(int argc, char** argv) { return perfalign::cli::run(argc, argv); }

#include "tsclean/cli.hpp"

int main(int argc, char** argv) { return tsclean::run(argc, argv); }

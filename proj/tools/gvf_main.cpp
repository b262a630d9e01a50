#include "gvf/cli.hpp"

int main(int argc, char** argv) { return gvf::cli_dispatch(argc, argv); }

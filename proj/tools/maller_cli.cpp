#include "maller/harness.hpp"

int main(int argc, char** argv) { return maller::cli_main(argc, argv); }

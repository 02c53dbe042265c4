#include "gpnn/experiment.hpp"

int main(int argc, char** argv) { return gpnn::run_cli(argc, argv); }

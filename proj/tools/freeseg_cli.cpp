#include "freeseg/pipeline.hpp"

int main(int argc, char** argv) { return freeseg::cli_main(argc, argv); }

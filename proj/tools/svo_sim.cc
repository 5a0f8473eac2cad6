#include "svo/io.h"

int main(int argc, char** argv) { return svo::CliMain(argc, argv); }

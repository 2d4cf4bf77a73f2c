#include "cmkv/run.hpp"

int main(int argc, char** argv) { return cmkv::run(argc, argv); }

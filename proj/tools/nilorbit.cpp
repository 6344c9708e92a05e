#include <nilorbit/cli.hpp>

int main(int argc, char** argv) { return nilorbit::run(argc, argv); }

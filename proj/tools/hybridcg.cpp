#include <iostream>

#include "hybridcg/bench/commands.hpp"

int main(int argc, char** argv) {
    return hybridcg::bench::run_cli(argc, argv, std::cout, std::cerr);
}

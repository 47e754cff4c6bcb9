#include <string>
#include <vector>

#include "seasoncast/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return seasoncast::cli::run(args);
}

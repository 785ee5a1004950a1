#include <string>
#include <vector>

#include "cvarrl/cli.hpp"

int main(int argc, char** argv) {
    return cvarrl::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}

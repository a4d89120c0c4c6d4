#include <string>
#include <vector>

#include "commands.hpp"

int main(int argc, char** argv) {
    return coprior::cli::main_entry(std::vector<std::string>(argv, argv + argc));
}

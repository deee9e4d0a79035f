#include <string>
#include <vector>

#include "vkerr/cli/app.hpp"

int main(int argc, char** argv) { return vkerr::cli::run(std::vector<std::string>(argv, argv + argc)); }

#include <hybridir/cli.hpp>

int main(int argc, char** argv) {
    return hybridir::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}

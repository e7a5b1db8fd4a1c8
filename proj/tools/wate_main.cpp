#include "wate/cli.hpp"

int main(int argc, char** argv) {
    return wate::run_cli(argc, argv);
}

#include "ttvrs/cli.hpp"

int main(int argc, char** argv)
{
    return ttvrs::cli::run(argc, argv);
}

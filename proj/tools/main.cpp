#include <iostream>

#include <heatgl/commands.hpp>

int main(int argc, char** argv)
{
    return heatgl::run_cli(argc, argv, std::cout, std::cerr);
}

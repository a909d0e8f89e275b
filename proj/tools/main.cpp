#include "dragwarp/cli.hpp"

int main(int argc, char** argv) { return dragwarp::run_cli(argc, argv); }

#include <weq/cli.hpp>

int main(int argc, char** argv) { return weq::cli::run(argc, argv); }

// Study-less command line tool: scaffold new studies and inspect, subset,
// tabulate, plot or report any saved simulation.

#include <simkit/cli.hpp>

int main(int argc, char** argv) { return simkit::tool_main(argc, argv); }

#include "study.hpp"

int main(int argc, char** argv) { return simkit::cli_main(argc, argv, betsparse::study_def()); }
